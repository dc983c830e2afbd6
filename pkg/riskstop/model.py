# #!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Risk-reserve dynamics: model constants, claim events and the exact
deterministic flow of capital between and at claim epochs.

Capital evolves as

    U_t = a e^{at} + (c/a)(e^{at}-1) - e^{a1 t} sum_n eps_n X_n e^{b1 T_n}

with investment rate alpha, claim-payment rate alpha1, claim inflation beta
and b1 = beta - alpha1.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .stoputils import ConfigError, ModelConsistencyWarning

__all__ = ["ModelParams", "ClaimEvent", "drift", "flow_oracle", "apply_claim",
           "ruin_indicator_step", "savings", "claim_sum", "flow_rate"]


@dataclass(frozen=True)
class ModelParams(object):
    """
    Scalar model constants.

    :param a: initial capital (> 0)
    :param c: premium income rate (> 0)
    :param alpha: investment rate (> 0)
    :param alpha1: claim-payment rate (>= 0)
    :param beta: claim inflation rate (>= 0)
    :param p: claim-acceptance probability, in [0,1]
    :param t0: utility horizon (> 0)
    """
    a: float
    c: float
    alpha: float
    alpha1: float
    beta: float
    p: float
    t0: float

    def __post_init__(self):
        for name in ('a', 'c', 'alpha', 'alpha1', 'beta', 'p', 't0'):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float, np.floating, np.integer)):
                raise ConfigError("must be a number, got {0!r}".format(val), field='model.' + name)
            if not np.isfinite(val):
                raise ConfigError("must be finite", field='model.' + name)
            object.__setattr__(self, name, float(val))

        for name in ('a', 'c', 'alpha', 't0'):
            if getattr(self, name) <= 0.0:
                raise ConfigError("must be > 0", field='model.' + name)
        for name in ('alpha1', 'beta'):
            if getattr(self, name) < 0.0:
                raise ConfigError("must be >= 0", field='model.' + name)
        if not (0.0 <= self.p <= 1.0):
            raise ConfigError("must lie in [0,1], got {0}".format(self.p), field='model.p')

        if self.alpha1 > self.alpha:
            warnings.warn(
                "alpha1={0} > alpha={1}: capital may fall between claims; "
                "ruin is still decided at claim epochs only".format(self.alpha1, self.alpha),
                ModelConsistencyWarning, stacklevel=3)

    @property
    def beta1(self):
        return self.beta - self.alpha1

    @property
    def growth(self):
        """a + c/alpha, the coefficient of e^{alpha t} in the capital."""
        return self.a + self.c / self.alpha

    def u_bound(self):
        """Upper bound of no-ruin capital reachable on [0, t0]."""
        return self.growth * np.exp(max(self.alpha, self.alpha1) * self.t0)

    @classmethod
    def from_dict(cls, pars):
        missing = [k for k in ('a', 'c', 'alpha', 'alpha1', 'beta', 'p', 't0') if k not in pars]
        if missing:
            raise ConfigError("missing keys {0}".format(', '.join(missing)), field='model')
        extra = sorted(set(pars.keys()) - set(['a', 'c', 'alpha', 'alpha1', 'beta', 'p', 't0', 'beta1']))
        if extra:
            raise ConfigError("unknown keys {0}".format(', '.join(extra)), field='model')
        obj = cls(**{k: pars[k] for k in ('a', 'c', 'alpha', 'alpha1', 'beta', 'p', 't0')})
        if 'beta1' in pars and not np.isclose(pars['beta1'], obj.beta1, rtol=0.0, atol=1e-15):
            raise ConfigError("beta1 is derived as beta - alpha1 = {0}".format(obj.beta1),
                              field='model.beta1')
        return obj

    def to_dict(self):
        return {'a': self.a, 'c': self.c, 'alpha': self.alpha, 'alpha1': self.alpha1,
                'beta': self.beta, 'p': self.p, 't0': self.t0}


@dataclass(frozen=True)
class ClaimEvent(object):
    """One claim: index n >= 1, epoch T_n, interarrival, size and acceptance mark."""
    index: int
    time: float
    interarrival: float
    size: float
    accepted: int


def _check_span(t, xi, u):
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(xi)) and np.all(np.isfinite(u))):
        raise ValueError("drift arguments must be finite")
    if np.any(xi < 0.0):
        raise ValueError("elapsed time xi must be >= 0")
    if np.any(t < 0.0):
        raise ValueError("time t must be >= 0")
    return t, xi, u


def _scalar(out):
    return out.item() if out.ndim == 0 else out


def drift(params, t, xi, u):
    """
    No-claim capital increment d(t, xi, u) = U_{t+xi} - U_t.

    Broadcasts over ``t``, ``xi`` and ``u``. Exactly zero at xi = 0 and exactly
    (u + c/alpha)(e^{alpha xi} - 1) when alpha == alpha1.
    """
    t, xi, u = _check_span(t, xi, u)
    al, al1 = params.alpha, params.alpha1
    e1 = np.expm1(al1 * xi)
    # e^{al xi} - e^{al1 xi} = e^{al1 xi} expm1((al - al1) xi)
    spread = np.exp(al * t) * params.growth * np.exp(al1 * xi) * np.expm1((al - al1) * xi)
    out = spread + (params.c / al + u) * e1
    return _scalar(out)


def savings(params, t):
    """Capital at time t with no claim ever paid: a e^{at} + (c/a)(e^{at}-1)."""
    t = np.asarray(t, dtype=float)
    return _scalar(params.a * np.exp(params.alpha * t)
                   + params.c / params.alpha * np.expm1(params.alpha * t))


def claim_sum(params, t, u):
    """Recover sum eps_n X_n e^{b1 T_n} over claims up to t from the capital u at t."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    return _scalar((savings(params, t) - u) * np.exp(-params.alpha1 * t))


def flow_oracle(params, t, xi, u):
    """
    Independent recomputation of U_{t+xi} - U_t: freeze the claim sum implied
    by u at t and re-evaluate the closed-form capital at t + xi.
    """
    t, xi, u = _check_span(t, xi, u)
    S = claim_sum(params, t, u)
    later = savings(params, t + xi) - np.exp(params.alpha1 * (t + xi)) * S
    out = np.where(xi == 0.0, 0.0, later - u)
    return _scalar(out)


def flow_rate(params, t, u):
    """Time derivative of the no-claim capital at (t, u)."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    al, al1 = params.alpha, params.alpha1
    out = ((al * params.a + params.c) * np.exp(al * t)
           - (al1 * params.a + params.c * al1 / al) * np.exp(al * t)
           + al1 * params.c / al + al1 * u)
    return _scalar(out)


def apply_claim(params, u_pre, t, x, eps):
    """Capital right after a claim of size x at time t; eps=0 marks a refused claim."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("claim size must be >= 0")
    u_pre = np.asarray(u_pre, dtype=float)
    t = np.asarray(t, dtype=float)
    eps = np.asarray(eps)
    out = u_pre - eps * x * np.exp(params.beta * t)
    return _scalar(out)


def ruin_indicator_step(mu_prev, u_post):
    """mu_n = mu_{n-1} * 1{U_{T_n} > 0}."""
    out = np.asarray(mu_prev, dtype=int) * (np.asarray(u_post, dtype=float) > 0.0)
    return _scalar(out.astype(int))

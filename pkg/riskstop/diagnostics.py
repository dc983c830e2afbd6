"""
Strong generator of the extended state eta_t = (t, U_t, Y_t, V_t) and a
Monte Carlo check of Dynkin's formula

    E g(eta_h) - g(eta_0) = E int_0^h (A g)(eta_s) ds

for g(eta) = v g1(u), with Y_t the time since the last claim and V_t the
survival flag.
"""

import logging
from dataclasses import dataclass, asdict

import numpy as np

from .model import drift, apply_claim, flow_rate
from .stoputils import (BLOCK_SIZE, block_generator,
                        gauss_panels, gauss_interval)

__all__ = ["ExtendedState", "DynkinReport", "CONVENTIONS", "generator_apply",
           "generator_apply_path", "dynkin_check"]

logger = logging.getLogger(__name__)

CONVENTIONS = ('consistent', 'as_printed')


@dataclass
class ExtendedState(object):
    """(t, u, y, v): time, capital, time since the last claim, survival flag."""
    t: float
    u: float
    y: float
    v: int = 1

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if np.any(y < 0.0) or np.any(y > t + 1e-12 * np.maximum(1.0, t)):
            raise ValueError("need 0 <= y <= t")
        if not np.all(np.isin(np.asarray(self.v), (0, 1))):
            raise ValueError("survival flag v must be 0 or 1")


@dataclass
class DynkinReport(object):
    convention: str
    h: float
    n_paths: int
    lhs: float
    rhs: float
    gap: float
    standard_error: float
    state: dict

    def within(self, allowance=0.0):
        return abs(self.gap) <= 3.0 * self.standard_error + allowance

    def to_dict(self):
        return asdict(self)


def _claim_mean(H, g1, u, scale, rule):
    """int g1(u - x scale) 1{u - x scale > 0} dH(x)"""
    if H.is_point_mass:
        post = u - H.atom * scale
        return np.where(post > 0.0, g1(post), 0.0)
    nodes, weights = rule
    lo, hi = H.support
    span = np.maximum(np.minimum(u / scale, hi) - lo, 0.0)[..., None]
    x = lo + np.maximum(span, 1e-300) * nodes
    w = span * weights * H.pdf(x)
    return np.sum(w * g1(u[..., None] - x * scale[..., None]), axis=-1)


def generator_apply(state, params, F, H, g1, convention='consistent', **kwargs):
    """
    (A g)(t, u, y, v) for g = v g1(u).

    consistent:  flow g1'(u) + hazard(y) p [ int_0^{u e^{-bt}} g1(u - x e^{bt}) dH - g1(u) ]
    as_printed:  flow g1'(u) - hazard(y) [ g1(u) Hbar(th) - p int_0^th g1(u - x e^{k}) dH
                                           + p g1(u) H(th) ]
                 with k = alpha1 y + beta (t - y), th = u e^{-k}

    :param claim_rule: (nodes, weights) on [0,1] for the claim-size integral.
    """
    if not g1.differentiable:
        raise ValueError("generator needs a differentiable utility, got '{0}'".format(g1.kind))
    if convention not in CONVENTIONS:
        raise ValueError("unknown convention '{0}'".format(convention))
    rule = kwargs.get('claim_rule', None)
    if rule is None:
        rule = gauss_panels(4, 8)

    t, u, y, v = np.broadcast_arrays(*[np.asarray(xx, dtype=float)
                                       for xx in (state.t, state.u, state.y, state.v)])
    if np.any(t > params.t0 * (1.0 + 1e-12)):
        raise ValueError("generator is defined for t <= t0")
    if not np.any(v):
        out = np.zeros(t.shape)
        return out.item() if out.ndim == 0 else out

    haz = F.hazard(y)
    gu = g1(u)
    flow = flow_rate(params, t, u) * g1.derivative(u)
    p = params.p
    if convention == 'consistent':
        scale = np.exp(params.beta * t)
        jump = haz * p * (_claim_mean(H, g1, u, scale, rule) - gu)
    else:
        kappa = params.alpha1 * y + params.beta * (t - y)
        scale = np.exp(kappa)
        Hth = H.cdf(u / scale)
        jump = -haz * (gu * (1.0 - Hth) - p * _claim_mean(H, g1, u, scale, rule) + p * gu * Hth)
    out = v * (flow + jump)
    return out.item() if out.ndim == 0 else out


def generator_apply_path(s, u, last_claim, v, params, F, H, g1, convention='consistent', **kwargs):
    """Generator written along a path: y = s - T_{N(s)}."""
    s = np.asarray(s, dtype=float)
    state = ExtendedState(s, u, s - np.asarray(last_claim, dtype=float), v)
    return generator_apply(state, params, F, H, g1, convention=convention, **kwargs)


def _first_claim(F, y0, q):
    """Residual time to the next claim at age y0, from uniforms q."""
    if F.is_point_mass:
        return np.full(q.shape, F.atom - y0)
    Fy = F.cdf(y0)
    return np.maximum(F.ppf(Fy + q * (1.0 - Fy)) - y0, 0.0)


def _dynkin_block(state0, params, F, H, g1, h, base_seed, block, conventions, srule, hrule, max_claims):
    rng = block_generator(base_seed, block)
    B = BLOCK_SIZE
    tend = state0.t + h
    s = np.full(B, float(state0.t))
    u = np.full(B, float(state0.u))
    last = np.full(B, float(state0.t) - float(state0.y))
    v = np.full(B, int(state0.v))
    nxt = s + _first_claim(F, float(state0.y), rng.random(B))
    integ = {cc: np.zeros(B) for cc in conventions}

    for k in range(max_claims + 1):
        seg_end = np.minimum(nxt, tend)
        x, w = gauss_interval(s, seg_end, *srule)
        uu = u[:, None] + drift(params, s[:, None], x - s[:, None], u[:, None])
        state = ExtendedState(x, uu, x - last[:, None], v[:, None])
        for cc in conventions:
            integ[cc] += np.sum(w * generator_apply(state, params, F, H, g1, convention=cc,
                                                    claim_rule=hrule), axis=1)

        upre = u + drift(params, s, seg_end - s, u)
        hit = nxt < tend
        if k == max_claims or not np.any(hit):
            u = upre
            break
        size = H.ppf(rng.random(B))
        acc = (rng.random(B) < params.p) & hit
        znext = F.ppf(rng.random(B))
        post = apply_claim(params, upre, seg_end, size, acc.astype(int))
        v = np.where(hit, v * (post > 0.0), v)
        u = np.where(hit, post, upre)
        last = np.where(hit, seg_end, last)
        nxt = np.where(hit, seg_end + znext, nxt)
        s = seg_end

    gend = v * g1(u)
    return gend, integ


def dynkin_check(state0, params, F, H, g1, h=None, n_paths=10000, base_seed=0, **kwargs):
    """
    Compare both sides of Dynkin's formula over [t, t+h] from state0.

    Claims after the first within [t, t+h] are simulated up to max_claims,
    but h should be short against the interarrival scale; the default is
    h = 0.05 E[zeta].

    :returns dict convention -> DynkinReport, all conventions on the same paths.
    """
    conventions = kwargs.get('conventions', CONVENTIONS)
    max_claims = kwargs.get('max_claims', 20)
    srule = gauss_panels(1, kwargs.get('quad_order', 6))
    hrule = gauss_panels(kwargs.get('claim_panels', 4), kwargs.get('claim_order', 8))
    verbose = kwargs.get('verbose', False)

    if not g1.differentiable:
        raise ValueError("Dynkin check needs a differentiable utility, got '{0}'".format(g1.kind))
    if h is None:
        h = 0.05 * F.mean()
    if h < 0.0:
        raise ValueError("horizon h must be >= 0")
    if state0.t + h > params.t0 * (1.0 + 1e-12):
        raise ValueError("t + h exceeds the utility horizon t0")
    if n_paths < 2:
        raise ValueError("need at least two paths")
    # raises when the current age is beyond the support of F
    F.hazard(state0.y)

    g0 = float(state0.v) * float(g1(state0.u))
    statedict = {'t': float(state0.t), 'u': float(state0.u), 'y': float(state0.y), 'v': int(state0.v)}
    if h == 0.0 or state0.v == 0:
        return {cc: DynkinReport(cc, float(h), int(n_paths), 0.0, 0.0, 0.0, 0.0, statedict)
                for cc in conventions}

    nblocks = int(np.ceil(n_paths / float(BLOCK_SIZE)))
    gend = []
    integ = {cc: [] for cc in conventions}
    for b in range(nblocks):
        nrows = min(BLOCK_SIZE, n_paths - b * BLOCK_SIZE)
        ge, ii = _dynkin_block(state0, params, F, H, g1, h, base_seed, b,
                               conventions, srule, hrule, max_claims)
        gend.append(ge[:nrows])
        for cc in conventions:
            integ[cc].append(ii[cc][:nrows])
    gend = np.concatenate(gend)

    out = {}
    lhs = float(gend.mean() - g0)
    for cc in conventions:
        ii = np.concatenate(integ[cc])
        D = gend - g0 - ii
        out[cc] = DynkinReport(cc, float(h), int(n_paths), lhs, float(ii.mean()), float(D.mean()),
                               float(D.std(ddof=1) / np.sqrt(n_paths)), statedict)
        if verbose:
            logger.info('dynkin {0}: lhs {1:.6e} | rhs {2:.6e} | gap {3:.3e} +/- {4:.3e}'.format(
                cc, lhs, out[cc].rhs, out[cc].gap, out[cc].standard_error))
    return out

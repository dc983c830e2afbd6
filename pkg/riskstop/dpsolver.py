#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Dynamic programming for the optimal stopping of the risk reserve.

For a continuation value delta the one-step operator is

    (Phi delta)(u,t) = max_{0 <= r <= t0-t} phi_delta(r,u,t)

    phi_delta(r,u,t) = Fbar(r) g1(u + d(t,r,u))
                     + int_0^r dF(s) [ p int delta(y - x e^{b(t+s)}, t+s) dH(x)
                                      + (1-p) delta(y, t+s) ]

with y = u + d(t,s,u). Backward induction applies Phi K times to the
terminal stage g1; the infinite-claim value is the fixed point of Phi.
"""

import logging
from dataclasses import dataclass, fields, replace
from datetime import datetime
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .model import drift
from .valuegrid import ValueGrid, PolicyGrid, make_u_nodes, make_t_nodes
from .stoputils import (ConfigError, NonContractiveError, MaxIterationsError,
                        gauss_panels, gauss_interval, golden_maximize)

__all__ = ["SolverConfig", "DPSolver", "MODES"]

logger = logging.getLogger(__name__)

MODES = ('consistent', 'as_printed')


@dataclass(frozen=True)
class SolverConfig(object):
    """
    Discretization and iteration settings.

    u_max of None means the smallest admissible bound (a + c/alpha) e^{max(alpha,alpha1) t0}.
    The r-scan runs on a time grid n_sub times finer than the value grid and
    is refined by golden-section search down to r_tol.
    """
    u_max: float = None
    M: int = 100
    L: int = 100
    n_sub: int = 4
    r_tol: float = 1e-8
    quad_order: int = 3
    claim_panels: int = 2
    claim_order: int = 4
    mode: str = 'consistent'
    fix_tol: float = 1e-6
    max_iter: int = 500
    u_spacing: str = 'uniform'
    u_stretch: float = 3.0
    exact_terminal: bool = True
    n_workers: int = 1
    row_chunk: int = 64
    grid_tolerance: float = 5e-3

    def __post_init__(self):
        for name in ('M', 'L', 'n_sub', 'quad_order', 'claim_panels', 'claim_order',
                     'max_iter', 'n_workers', 'row_chunk'):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError("must be a positive integer, got {0!r}".format(val),
                                  field='solver.' + name)
        for name in ('r_tol', 'fix_tol', 'u_stretch', 'grid_tolerance'):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0.0:
                raise ConfigError("must be > 0, got {0!r}".format(val), field='solver.' + name)
        if self.u_max is not None and not (isinstance(self.u_max, (int, float)) and self.u_max > 0.0):
            raise ConfigError("must be > 0 or null", field='solver.u_max')
        if self.mode not in MODES:
            raise ConfigError("must be one of {0}".format(', '.join(MODES)), field='solver.mode')
        if self.u_spacing not in ('uniform', 'stretched'):
            raise ConfigError("must be 'uniform' or 'stretched'", field='solver.u_spacing')

    @classmethod
    def from_dict(cls, indict):
        known = set(f.name for f in fields(cls))
        extra = sorted(set(indict.keys()) - known)
        if extra:
            raise ConfigError("unknown keys {0}".format(', '.join(extra)), field='solver')
        return cls(**indict)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


# per-process state for the column pool
_WORKER = {}


def _init_worker(solver, delta):
    _WORKER['solver'] = solver
    _WORKER['delta'] = delta


def _column_worker(j):
    return _WORKER['solver']._phi_column(_WORKER['delta'], j)


class DPSolver(object):
    """
    Value and policy grids for the stopping problem.

    :param params: ModelParams
    :param F: interarrival DistributionSpec
    :param H: claim-size DistributionSpec
    :param g1: UtilitySpec
    :param config: SolverConfig, dict, or None for defaults; further keyword
        arguments override single fields (e.g. mode='as_printed').
    """

    def __init__(self, params, F, H, g1, config=None, **kwargs):
        super(DPSolver, self).__init__()
        self.verbose = kwargs.pop('verbose', False)
        if config is None:
            config = SolverConfig()
        elif isinstance(config, dict):
            config = SolverConfig.from_dict(config)
        if kwargs:
            config = replace(config, **kwargs)
        self.config = config

        self.params = params
        self.F = F
        self.H = H
        self.g1 = g1

        bound = params.u_bound()
        if config.u_max is None:
            self.u_max = bound
        else:
            if config.u_max < bound * (1.0 - 1e-12):
                raise ConfigError(
                    "u_max={0} is below the reachable capital bound {1}".format(config.u_max, bound),
                    field='solver.u_max')
            self.u_max = float(config.u_max)

        self.u_nodes = make_u_nodes(self.u_max, config.M, anchor=params.a,
                                    spacing=config.u_spacing, stretch=config.u_stretch)
        self.t_nodes = make_t_nodes(params.t0, config.L)
        self.t_fine = make_t_nodes(params.t0, config.n_sub * config.L)

        self._srule = gauss_panels(1, config.quad_order)
        self._rrule = gauss_panels(1, 2 * config.quad_order)
        self._hrule = gauss_panels(config.claim_panels, config.claim_order)

    @property
    def contraction_factor(self):
        """q = F(t0)."""
        return float(self.F.cdf(self.params.t0))

    def terminal(self):
        return ValueGrid.terminal(self.u_nodes, self.t_nodes, self.params.t0, self.g1,
                                  exact=self.config.exact_terminal)

    def headline(self, gamma):
        """gamma(a, 0)."""
        return float(gamma.evaluate(self.params.a, 0.0))

    # -- integrands ---------------------------------------------------------

    def _accepted(self, delta, y, tau, hrule):
        """int_0^{y e^{-b tau}} delta(y - x e^{b tau}, tau) dH(x)"""
        y, tau = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(tau, dtype=float))
        grow = np.exp(self.params.beta * tau)
        if self.H.is_point_mass:
            post = y - self.H.atom * grow
            return np.where(post > 0.0, delta.evaluate(post, tau), 0.0)
        nodes, weights = hrule
        lo, hi = self.H.support
        upper = np.minimum(y / grow, hi)
        span = np.maximum(upper - lo, 0.0)[..., None]
        # empty ranges keep their nodes off the support edge
        x = lo + np.maximum(span, 1e-300) * nodes
        w = span * weights * self.H.pdf(x)
        post = y[..., None] - x * grow[..., None]
        return np.sum(w * delta.evaluate(post, tau[..., None]), axis=-1)

    def _continuation(self, delta, u, t, s, hrule):
        """Expected continuation value given a claim arrives s after t."""
        p = self.params.p
        tau = t + np.asarray(s, dtype=float)
        y = u + drift(self.params, t, s, u)
        out = np.zeros(np.broadcast(np.asarray(y), tau).shape)
        if p > 0.0:
            out = out + p * self._accepted(delta, y, tau, hrule)
        if p < 1.0:
            ref = delta.evaluate(y, tau)
            if self.config.mode == 'as_printed':
                ref = ref * self.H.cdf(y * np.exp(-self.params.beta * tau))
            out = out + (1.0 - p) * ref
        return out

    def _cumulative(self, delta, u, t, rb):
        """
        C(r) = int_0^r k(s) dF(s) at every scan point r in rb for rows u (shape (m,1)).

        Returns C with shape (m, len(rb)) and, for a point-mass F, the
        continuation value at the atom.
        """
        if self.F.is_point_mass:
            k0 = self._continuation(delta, u[:, 0], t, self.F.atom, self._hrule)
            return k0[:, None] * (rb[None, :] >= self.F.atom), k0
        nodes, weights = self._srule
        h = np.diff(rb)
        s = (rb[:-1, None] + h[:, None] * nodes).ravel()
        w = (h[:, None] * weights).ravel() * self.F.pdf(s)
        k = self._continuation(delta, u, t, s[None, :], self._hrule)
        panel = (k * w).reshape(u.shape[0], h.size, -1).sum(axis=-1)
        C = np.zeros((u.shape[0], rb.size))
        C[:, 1:] = np.cumsum(panel, axis=1)
        return C, None

    def _phi_at(self, delta, u, t, r, lo, C_lo, k0):
        """phi_delta at one r per row, continuing C from lo."""
        T1 = self.F.sf(r) * self.g1(u + drift(self.params, t, r, u))
        if self.F.is_point_mass:
            return T1 + k0 * (r >= self.F.atom)
        x, w = gauss_interval(lo, r, *self._rrule)
        w = w * self.F.pdf(x)
        k = self._continuation(delta, u[:, None], t, x, self._hrule)
        return T1 + C_lo + np.sum(k * w, axis=-1)

    def phi_delta(self, r, u, t, delta, refine=1):
        """
        phi_delta(r, u, t) for a scalar state and one or many waiting times r.

        :param refine:
            Multiplier on every quadrature order and panel count.
        """
        t0 = self.params.t0
        if u < 0.0:
            raise ValueError("capital u must be >= 0")
        if t < 0.0 or t > t0 + 1e-12 * max(1.0, t0):
            raise ValueError("time t must lie in [0, t0]")
        rarr = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(rarr < 0.0):
            raise ValueError("waiting time r must be >= 0")

        cfg = self.config
        hrule = gauss_panels(cfg.claim_panels * refine, cfg.claim_order * refine)
        inside = rarr <= (t0 - t) + 1e-12 * max(1.0, t0)
        T1 = self.F.sf(rarr) * self.g1(u + drift(self.params, t, rarr, u)) * inside

        if self.F.is_point_mass:
            k0 = self._continuation(delta, u, t, self.F.atom, hrule)
            C = k0 * (rarr >= self.F.atom)
        else:
            rmax = float(np.max(rarr))
            npan = refine * max(1, int(np.ceil(cfg.n_sub * cfg.L * rmax / t0)))
            x, w = gauss_interval(np.zeros_like(rarr), rarr,
                                  *gauss_panels(npan, cfg.quad_order * refine))
            w = w * self.F.pdf(x)
            k = self._continuation(delta, u, t, x, hrule)
            C = np.sum(k * w, axis=-1)

        out = T1 + C
        if np.ndim(r) == 0:
            return float(out[0])
        return out

    # -- operator -----------------------------------------------------------

    def _phi_column(self, delta, j):
        """(Phi delta)(u_i, t_j) and r_delta for every capital node at time node j."""
        cfg = self.config
        t0 = self.params.t0
        t = self.t_nodes[j]
        u = self.u_nodes
        values = np.asarray(self.g1(u), dtype=float).copy()
        rstar = np.zeros(u.size)

        nscan = cfg.n_sub * (cfg.L - j)
        if nscan == 0:
            return np.clip(values, 0.0, self.g1.sup), rstar

        rb = self.t_fine[cfg.n_sub * j:] - t
        rb[0] = 0.0
        rb[-1] = t0 - t
        rb = np.maximum.accumulate(np.maximum(rb, 0.0))
        sf = self.F.sf(rb)

        for start in range(0, u.size, cfg.row_chunk):
            uc = u[start:start + cfg.row_chunk]
            rows = np.arange(uc.size)
            T1 = sf[None, :] * self.g1(uc[:, None] + drift(self.params, t, rb[None, :], uc[:, None]))
            C, k0 = self._cumulative(delta, uc[:, None], t, rb)
            phi = T1 + C

            # first maximizer: ties go to the earliest stop
            b = np.argmax(phi, axis=1)
            best = phi[rows, b]
            bl = np.maximum(b - 1, 0)
            bh = np.minimum(b + 1, rb.size - 1)
            lo = rb[bl]
            C_lo = C[rows, bl]

            rg, fg = golden_maximize(
                lambda rr: self._phi_at(delta, uc, t, rr, lo, C_lo, k0),
                lo, rb[bh], tol=cfg.r_tol)
            better = fg > best
            values[start:start + uc.size] = np.where(better, fg, best)
            rstar[start:start + uc.size] = np.where(better, rg, rb[b])

        return np.clip(values, 0.0, self.g1.sup), np.clip(rstar, 0.0, t0 - t)

    def apply_phi(self, delta):
        """
        One application of Phi.

        :returns gamma, policy:
            ValueGrid of Phi delta and the PolicyGrid r_delta.
        """
        ncol = self.t_nodes.size
        if self.config.n_workers > 1:
            with ProcessPoolExecutor(max_workers=self.config.n_workers,
                                     initializer=_init_worker, initargs=(self, delta)) as pool:
                cols = list(pool.map(_column_worker, range(ncol)))
        else:
            cols = [self._phi_column(delta, j) for j in range(ncol)]

        V = np.stack([cc[0] for cc in cols], axis=1)
        R = np.stack([cc[1] for cc in cols], axis=1)
        t0 = self.params.t0
        return (ValueGrid(self.u_nodes, self.t_nodes, V, t0),
                PolicyGrid(self.u_nodes, self.t_nodes, R, t0))

    def backward_induction(self, K):
        """
        gamma_0 = g1, gamma_j = max(Phi gamma_{j-1}, gamma_{j-1}) on the nodes.

        The interpolant of a concave gamma_{j-1} lies below it between nodes,
        so Phi gamma_{j-1} can fall short of gamma_{j-1} by the interpolation
        error; the lift keeps gamma_j >= gamma_{j-1} at every node.

        :returns gammas, policies:
            K+1 ValueGrids gamma_0..gamma_K and K PolicyGrids, policies[j]
            being r_{gamma_j}, the policy extracted while computing gamma_{j+1}.
        """
        if K < 0:
            raise ValueError("number of claims K must be >= 0")
        gammas = [self.terminal()]
        policies = []
        for j in range(1, K + 1):
            starttime = datetime.now()
            gamma, policy = self.apply_phi(gammas[-1])
            gamma = gamma.lifted(gammas[-1])
            gammas.append(gamma)
            policies.append(policy)
            if self.verbose:
                logger.info('stage: {0} of {1} | gamma(a,0): {2:.6f} | time: {3}'.format(
                    j, K, self.headline(gamma), datetime.now() - starttime))
        return gammas, policies

    def fixed_point(self):
        """
        Iterate Phi from gamma_0 until the sup-norm step is below fix_tol.
        The iterates are not lifted, so gamma is Phi gamma_n exactly.

        :returns gamma, policy, iterations, residual:
            gamma = Phi gamma_n, the policy r_{gamma_n} that attains it,
            the number of applications of Phi and ||gamma - gamma_n||.
        """
        q = self.contraction_factor
        if q >= 1.0 - 1e-12:
            raise NonContractiveError(
                "F(t0) = {0}: Phi is not a contraction when every interarrival "
                "time is at most t0".format(q))

        gamma = self.terminal()
        self.residuals = []
        for it in range(1, self.config.max_iter + 1):
            starttime = datetime.now()
            new, policy = self.apply_phi(gamma)
            resid = new.sup_distance(gamma)
            self.residuals.append(resid)
            if self.verbose:
                logger.info('iter: {0} | resid: {1:.3e} | q: {2:.4f} | time: {3}'.format(
                    it, resid, q, datetime.now() - starttime))
            if resid <= self.config.fix_tol:
                return new, policy, it, resid
            gamma = new
        raise MaxIterationsError(
            "no convergence after {0} iterations, residual {1:.3e}".format(
                self.config.max_iter, self.residuals[-1]))

    def iteration_bound(self, first_step):
        """Geometric bound on the iterations needed to reach fix_tol from ||gamma_1 - gamma_0||."""
        q = self.contraction_factor
        if first_step <= self.config.fix_tol:
            return 1
        if q <= 0.0:
            return 2
        return int(np.ceil(np.log(self.config.fix_tol * (1.0 - q) / first_step) / np.log(q))) + 1

    def solve(self, K=None):
        """Backward induction for K claims, or the fixed point when K is None."""
        if K is None:
            gamma, policy, its, resid = self.fixed_point()
            return [gamma], [policy], its, resid
        gammas, policies = self.backward_induction(K)
        return gammas, policies, K, 0.0

    def doubling_check(self, K=None):
        """
        Headline gamma_K(a,0) (or the fixed point) at (M, L) and at (2M, 2L).

        :returns dict with coarse, fine and difference.
        """
        coarse = self.headline(self.solve(K)[0][-1])
        fine_solver = DPSolver(self.params, self.F, self.H, self.g1,
                               replace(self.config, u_max=self.u_max,
                                       M=2 * self.config.M, L=2 * self.config.L),
                               verbose=self.verbose)
        fine = fine_solver.headline(fine_solver.solve(K)[0][-1])
        if self.verbose:
            logger.info('doubling: M={0} L={1} -> {2:.8f} | 2M 2L -> {3:.8f}'.format(
                self.config.M, self.config.L, coarse, fine))
        return {'coarse': coarse, 'fine': fine, 'difference': abs(fine - coarse)}

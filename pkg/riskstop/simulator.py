#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Monte Carlo of the risk reserve and execution of stopping policies.

Paths are drawn in blocks of BLOCK_SIZE from counter-based Philox streams
keyed by (base_seed, block index). Within a block the uniforms are drawn
claim by claim (interarrival, size, acceptance), so a path's first k claims
do not depend on how many claims are drawn after them.
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.stats import norm

from .model import ClaimEvent, drift, apply_claim, ruin_indicator_step
from .stoputils import (BLOCK_SIZE, PolicyMismatchError, block_generator,
                        gauss_panels, gauss_interval, golden_maximize)

__all__ = ["Trajectory", "StoppingOutcome", "McEstimate", "ClaimBlock",
           "sample_block", "sample_trajectory", "execute_policy", "estimate_value",
           "brute_force_value", "conditional_value"]

logger = logging.getLogger(__name__)


@dataclass
class Trajectory(object):
    """
    One sampled path up to K_max claims or the first ruin.

    capital_at_claims[0] = a and mu[0] = 1 stand for T_0 = 0.
    """
    events: list
    capital_at_claims: np.ndarray
    mu: np.ndarray
    seed: tuple

    @property
    def times(self):
        return np.array([0.0] + [ev.time for ev in self.events])

    @property
    def ruined(self):
        return bool(self.mu[-1] == 0)


@dataclass
class StoppingOutcome(object):
    sigma: int
    tau: float
    Z: float
    ruined_before: bool
    capital: float


@dataclass
class McEstimate(object):
    mean: float
    standard_error: float
    n_paths: int
    confidence_level: float = 0.95
    between_claim_sign_changes: int = 0
    ruined_fraction: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def ci(self):
        half = norm.ppf(0.5 + 0.5 * self.confidence_level) * self.standard_error
        return (self.mean - half, self.mean + half)

    def to_dict(self):
        lo, hi = self.ci
        out = {'mean': self.mean, 'standard_error': self.standard_error,
               'n_paths': self.n_paths, 'confidence_level': self.confidence_level,
               'ci_low': lo, 'ci_high': hi,
               'between_claim_sign_changes': self.between_claim_sign_changes,
               'ruined_fraction': self.ruined_fraction}
        out.update(self.extra)
        return out


@dataclass
class ClaimBlock(object):
    """Draws and capital recursion for one block of paths (rows) and K_max claims (columns)."""
    zeta: np.ndarray
    size: np.ndarray
    accepted: np.ndarray
    times: np.ndarray
    capital: np.ndarray
    mu: np.ndarray


def _draw_block(F, H, p, base_seed, block, K_max):
    rng = block_generator(base_seed, block)
    zeta = np.empty((BLOCK_SIZE, K_max))
    size = np.empty((BLOCK_SIZE, K_max))
    accepted = np.empty((BLOCK_SIZE, K_max), dtype=int)
    for k in range(K_max):
        zeta[:, k] = F.ppf(rng.random(BLOCK_SIZE))
        size[:, k] = H.ppf(rng.random(BLOCK_SIZE))
        accepted[:, k] = rng.random(BLOCK_SIZE) < p
    return zeta, size, accepted


def sample_block(params, F, H, base_seed, block, K_max):
    """
    Sample paths block*BLOCK_SIZE ... (block+1)*BLOCK_SIZE - 1.

    The capital recursion runs on every claim even after ruin; ``mu`` marks
    the ruined tail.
    """
    zeta, size, accepted = _draw_block(F, H, params.p, base_seed, block, K_max)
    times = np.cumsum(zeta, axis=1)
    capital = np.empty((BLOCK_SIZE, K_max + 1))
    mu = np.empty((BLOCK_SIZE, K_max + 1), dtype=int)
    capital[:, 0] = params.a
    mu[:, 0] = 1
    T = np.zeros(BLOCK_SIZE)
    for n in range(K_max):
        pre = capital[:, n] + drift(params, T, zeta[:, n], capital[:, n])
        T = times[:, n]
        capital[:, n + 1] = apply_claim(params, pre, T, size[:, n], accepted[:, n])
        mu[:, n + 1] = ruin_indicator_step(mu[:, n], capital[:, n + 1])
    return ClaimBlock(zeta, size, accepted, times, capital, mu)


def sample_trajectory(params, F, H, seed, K_max, path_index=0):
    """
    Path ``path_index`` of the stream seeded by ``seed``, cut at K_max
    claims or at the first ruin.
    """
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    block, row = divmod(int(path_index), BLOCK_SIZE)
    blk = sample_block(params, F, H, seed, block, K_max)

    events = []
    for n in range(K_max):
        events.append(ClaimEvent(n + 1, float(blk.times[row, n]), float(blk.zeta[row, n]),
                                 float(blk.size[row, n]), int(blk.accepted[row, n])))
        if blk.mu[row, n + 1] == 0:
            break
    nn = len(events)
    return Trajectory(events, blk.capital[row, :nn + 1].copy(), blk.mu[row, :nn + 1].copy(),
                      (int(seed), int(path_index)))


def _check_cover(policy, u):
    if u.size and np.max(u) > policy.u_max * (1.0 + 1e-9):
        raise PolicyMismatchError(
            "capital {0} above the policy grid bound {1}".format(np.max(u), policy.u_max))


def _dips(params, T, wait, u, nprobe=16):
    """Paths whose capital touches zero strictly between T and T + wait."""
    frac = np.linspace(0.0, 1.0, nprobe + 1)[1:-1]
    vals = u[:, None] + drift(params, T[:, None], wait[:, None] * frac[None, :], u[:, None])
    return np.any(vals <= 0.0, axis=1)


def _execute(params, g1, zeta, size, accepted, policies, K, stationary=False):
    """
    Run the stopping rule on a stack of paths.

    At stage i (i claims seen) the waiting time is R_i = r(U_{T_i}, T_i) from
    policies[K-i-1] (or the single stationary policy); the rule stops at
    T_i + R_i when R_i < zeta_{i+1}. Stage K stops at once.
    """
    B = zeta.shape[0]
    t0 = params.t0
    u = np.full(B, params.a)
    T = np.zeros(B)
    active = np.ones(B, dtype=bool)
    Z = np.zeros(B)
    tau = np.zeros(B)
    sigma = np.full(B, -1, dtype=int)
    ruined = np.zeros(B, dtype=bool)
    capital = np.full(B, np.nan)
    dips = np.zeros(B, dtype=bool)
    check_dips = params.alpha1 > params.alpha

    for i in range(K + 1):
        if not np.any(active):
            break
        if i == K:
            r = np.zeros(B)
            stop = active.copy()
            z = np.zeros(B)
        else:
            policy = policies[0] if stationary else policies[K - i - 1]
            _check_cover(policy, u[active])
            r = np.where(active, policy.lookup(u, T), 0.0)
            z = zeta[:, i]
            stop = active & (r < z)

        if check_dips:
            wait = np.where(stop, r, z)
            dips |= active & _dips(params, T, wait, u)

        ustop = u + drift(params, T, r, u)
        # g(u, t0 - tau) vanishes past the horizon
        inhorizon = (T + r) <= t0 * (1.0 + 1e-12)
        Z = np.where(stop, g1(ustop) * inhorizon, Z)
        tau = np.where(stop, T + r, tau)
        sigma = np.where(stop, i, sigma)
        capital = np.where(stop, ustop, capital)
        active &= ~stop
        if i == K:
            break

        Tn = T + z
        pre = u + drift(params, T, z, u)
        post = apply_claim(params, pre, Tn, size[:, i], accepted[:, i])
        ruin = active & (post <= 0.0)
        tau = np.where(ruin, Tn, tau)
        sigma = np.where(ruin, i + 1, sigma)
        capital = np.where(ruin, post, capital)
        ruined |= ruin
        active &= ~ruin
        u = np.where(active, post, u)
        T = np.where(active, Tn, T)

    return {'sigma': sigma, 'tau': tau, 'Z': Z, 'ruined': ruined,
            'capital': capital, 'dips': dips}


def execute_policy(traj, policies, K, params, g1, stationary=False):
    """
    Stop one trajectory with the DP rule.

    :param policies:
        Exactly K PolicyGrids, policies[j] = r_{gamma_j} (stage i uses
        policies[K-i-1]); a single grid when ``stationary``.
    """
    if stationary:
        if len(policies) != 1:
            raise PolicyMismatchError("a stationary rule takes exactly one policy grid")
    elif len(policies) != K:
        raise PolicyMismatchError("{0} policy grids given for K={1}".format(len(policies), K))
    n = len(traj.events)
    if n < K and not traj.ruined:
        raise ValueError("trajectory has {0} claims, K={1} needed".format(n, K))

    zeta = np.ones((1, K))
    size = np.zeros((1, K))
    accepted = np.zeros((1, K), dtype=int)
    for k, ev in enumerate(traj.events[:K]):
        zeta[0, k] = ev.interarrival
        size[0, k] = ev.size
        accepted[0, k] = ev.accepted
    res = _execute(params, g1, zeta, size, accepted, policies, K, stationary=stationary)
    return StoppingOutcome(int(res['sigma'][0]), float(res['tau'][0]), float(res['Z'][0]),
                           bool(res['ruined'][0]), float(res['capital'][0]))


def _run_block(args):
    params, F, H, g1, policies, K, stationary, base_seed, block, nrows = args
    zeta, size, accepted = _draw_block(F, H, params.p, base_seed, block, K)
    res = _execute(params, g1, zeta, size, accepted, policies, K, stationary=stationary)
    return {kk: vv[:nrows] for kk, vv in res.items()}


def estimate_value(params, F, H, g1, policies, K, n_paths, base_seed, **kwargs):
    """
    Monte Carlo estimate of E Z(tau) under the given rule.

    :param policies:
        K PolicyGrids, or one grid with ``stationary=True`` (K is then the
        claim cap after which the rule stops).
    :param n_workers:
        Process count; per-path outcomes do not depend on it.
    :param per_path:
        Also return the per-path outcome arrays.
    :returns McEstimate (and a dict of per-path arrays when per_path is True).
    """
    n_workers = kwargs.get('n_workers', 1)
    confidence_level = kwargs.get('confidence_level', 0.95)
    per_path = kwargs.get('per_path', False)
    stationary = kwargs.get('stationary', False)
    verbose = kwargs.get('verbose', False)

    if n_paths < 2:
        raise ValueError("need at least two paths for a standard error")
    if stationary:
        if len(policies) != 1:
            raise PolicyMismatchError("a stationary rule takes exactly one policy grid")
    elif len(policies) != K:
        raise PolicyMismatchError("{0} policy grids given for K={1}".format(len(policies), K))

    starttime = datetime.now()
    nblocks = int(np.ceil(n_paths / float(BLOCK_SIZE)))
    jobs = [(params, F, H, g1, policies, K, stationary, base_seed, b,
             min(BLOCK_SIZE, n_paths - b * BLOCK_SIZE)) for b in range(nblocks)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_block, jobs))
    else:
        results = [_run_block(jj) for jj in jobs]
    res = {kk: np.concatenate([rr[kk] for rr in results]) for kk in results[0]}

    Z = res['Z']
    # shift by the first outcome so a constant sample has exactly zero spread
    dev = Z - Z[0]
    mean = float(Z[0] + dev.mean())
    se = float(dev.std(ddof=1) / np.sqrt(n_paths))
    est = McEstimate(mean, se, int(n_paths), confidence_level,
                     int(res['dips'].sum()), float(res['ruined'].mean()))

    if verbose:
        logger.info('paths: {0} | mean: {1:.6f} +/- {2:.6f} | ruined: {3:.4f} | time: {4}'.format(
            n_paths, est.mean, est.standard_error, est.ruined_fraction, datetime.now() - starttime))
    if est.between_claim_sign_changes > 0:
        logger.warning('{0} paths touched zero capital between claims'.format(
            est.between_claim_sign_changes))

    if per_path:
        res['index'] = np.arange(n_paths)
        return est, res
    return est


def conditional_value(traj, gammas, K, n):
    """Gamma_{n,K} = mu_n gamma_{K-n}(U_{T_n}, T_n) along a sampled path."""
    if n < 0 or n > K:
        raise ValueError("need 0 <= n <= K")
    if n >= len(traj.mu):
        if traj.ruined:
            return 0.0
        raise ValueError("trajectory has only {0} claims".format(len(traj.events)))
    mu = int(traj.mu[n])
    if mu == 0:
        return 0.0
    return float(gammas[K - n].evaluate(traj.capital_at_claims[n], traj.times[n]))


class BruteForce(object):
    """
    Grid-free value of the scan-optimal rule for at most two claims.

    gamma_j(u,t) is evaluated by direct recursion: each continuation value
    is itself maximized over r, with composite Gauss-Legendre quadrature
    against F and H.
    """

    def __init__(self, params, F, H, g1, **kwargs):
        self.params = params
        self.F = F
        self.H = H
        self.g1 = g1
        self.mode = kwargs.get('mode', 'consistent')
        self.n_scan = kwargs.get('n_scan', 64)
        self.r_tol = kwargs.get('r_tol', 1e-10)
        self.chunk = kwargs.get('chunk', 256)
        quad_order = kwargs.get('quad_order', 4)
        self._grid01 = np.linspace(0.0, 1.0, self.n_scan + 1)
        self._srule = gauss_panels(1, quad_order)
        self._rrule = gauss_panels(1, 2 * quad_order)
        self._hrule = gauss_panels(kwargs.get('claim_panels', 4), kwargs.get('claim_order', 8))
        self._t_edge = params.t0 + 1e-12 * max(1.0, params.t0)

    def gamma(self, j, u, t):
        u, t = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(t, dtype=float))
        shape = u.shape
        u = u.ravel()
        t = t.ravel()
        live = (u >= 0.0) & (t <= self._t_edge)
        out = np.zeros(u.size)
        if j == 0:
            out[live] = self.g1(u[live])
            return out.reshape(shape)
        idx = np.nonzero(live)[0]
        for start in range(0, idx.size, self.chunk):
            sel = idx[start:start + self.chunk]
            out[sel] = self._maximize(j, u[sel], np.minimum(t[sel], self.params.t0))
        return out.reshape(shape)

    def _k(self, j, u, t, s):
        """Expected gamma_j just after a claim arriving s after t."""
        u, t, s = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(t, dtype=float),
                                      np.asarray(s, dtype=float))
        shape = u.shape
        params = self.params
        tau = (t + s).ravel()
        y = (u + drift(params, t, s, u)).ravel()
        grow = np.exp(params.beta * tau)
        out = np.zeros(y.size)

        if params.p > 0.0:
            if self.H.is_point_mass:
                post = y - self.H.atom * grow
                acc = np.where(post > 0.0, self.gamma(j, post, tau), 0.0)
            else:
                nodes, weights = self._hrule
                lo, hi = self.H.support
                span = np.maximum(np.minimum(y / grow, hi) - lo, 0.0)[:, None]
                x = lo + np.maximum(span, 1e-300) * nodes
                w = span * weights * self.H.pdf(x)
                post = y[:, None] - x * grow[:, None]
                val = self.gamma(j, post, np.broadcast_to(tau[:, None], post.shape))
                acc = np.sum(w * np.where(post > 0.0, val, 0.0), axis=1)
            out += params.p * acc
        if params.p < 1.0:
            ref = np.where(y > 0.0, self.gamma(j, y, tau), 0.0)
            if self.mode == 'as_printed':
                ref = ref * self.H.cdf(y / grow)
            out += (1.0 - params.p) * ref
        return out.reshape(shape)

    def _maximize(self, j, u, t):
        F = self.F
        g1 = self.g1
        params = self.params
        m = u.size
        rows = np.arange(m)
        span = np.maximum(params.t0 - t, 0.0)
        rb = span[:, None] * self._grid01[None, :]
        T1 = F.sf(rb) * g1(u[:, None] + drift(params, t[:, None], rb, u[:, None]))

        k0 = None
        if F.is_point_mass:
            k0 = self._k(j - 1, u, t, np.full(m, F.atom))
            C = k0[:, None] * (rb >= F.atom)
        else:
            nodes, weights = self._srule
            h = np.diff(rb, axis=1)
            s = rb[:, :-1, None] + h[..., None] * nodes
            w = h[..., None] * weights * F.pdf(s)
            k = self._k(j - 1, u[:, None, None], t[:, None, None], s)
            C = np.zeros(rb.shape)
            C[:, 1:] = np.cumsum(np.sum(k * w, axis=-1), axis=1)

        phi = T1 + C
        b = np.argmax(phi, axis=1)
        best = phi[rows, b]
        bl = np.maximum(b - 1, 0)
        bh = np.minimum(b + 1, rb.shape[1] - 1)
        lo = rb[rows, bl]
        C_lo = C[rows, bl]

        def phi_at(rr):
            val = F.sf(rr) * g1(u + drift(params, t, rr, u))
            if F.is_point_mass:
                return val + k0 * (rr >= F.atom)
            x, w = gauss_interval(lo, rr, *self._rrule)
            w = w * F.pdf(x)
            kk = self._k(j - 1, u[:, None], t[:, None], x)
            return val + C_lo + np.sum(kk * w, axis=-1)

        _, fg = golden_maximize(phi_at, lo, rb[rows, bh], tol=self.r_tol)
        return np.maximum(best, fg)


def brute_force_value(params, F, H, g1, K, **kwargs):
    """
    gamma_K(a, 0) by nested quadrature without value grids (K <= 2).

    Keyword arguments (mode, n_scan, quad_order, claim_panels, claim_order,
    r_tol) set the resolution.
    """
    if K > 2:
        raise ValueError("brute-force evaluation supports K <= 2, got K={0}".format(K))
    if K < 0:
        raise ValueError("K must be >= 0")
    bf = BruteForce(params, F, H, g1, **kwargs)
    return float(bf.gamma(K, params.a, 0.0))

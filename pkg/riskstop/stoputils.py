#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Shared numerical helpers: composite Gauss-Legendre rules, a vectorized
golden-section maximizer, counter-based random streams and the package
exception classes.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = ["RiskStopError", "ConfigError", "NonContractiveError",
           "MaxIterationsError", "PolicyMismatchError", "HashMismatchError",
           "HazardUndefinedError", "ModelConsistencyWarning",
           "gauss_panels", "gauss_interval", "golden_maximize",
           "block_generator", "fmt17", "BLOCK_SIZE"]

# paths per random block; part of the seed-derivation rule, never change it
BLOCK_SIZE = 1024

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class RiskStopError(Exception):
    """Base class for all package errors."""


class ConfigError(RiskStopError, ValueError):
    """Invalid configuration value, with the dotted field path (and line)."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        self.message = message
        where = ''
        if field is not None:
            where += '[{0}] '.format(field)
        if line is not None:
            where += '(line {0}) '.format(line)
        super(ConfigError, self).__init__(where + message)


class NonContractiveError(RiskStopError, ValueError):
    """Fixed-point iteration requested while F(t0) == 1."""


class MaxIterationsError(RiskStopError, RuntimeError):
    """Fixed-point iteration ran out of its iteration budget."""


class PolicyMismatchError(RiskStopError, ValueError):
    """Policy grids do not cover the state reached by a trajectory."""


class HashMismatchError(RiskStopError, ValueError):
    """Stored grids were produced under a different configuration."""


class HazardUndefinedError(RiskStopError, ValueError):
    """The interarrival survival function vanishes at the requested age."""


class ModelConsistencyWarning(UserWarning):
    """Parameters allow the capital to decrease between claims."""


def gauss_panels(n_panels, order):
    """
    Composite Gauss-Legendre rule on [0,1].

    :param n_panels:
        Number of equal panels.
    :param order:
        Gauss-Legendre points per panel.
    :returns nodes, weights:
        Flat arrays of length n_panels*order; weights sum to 1.
    """
    if n_panels < 1 or order < 1:
        raise ValueError("Need at least one panel and one point per panel")
    x, w = leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    width = np.diff(edges)
    nodes = (edges[:-1, None] + width[:, None] * x[None, :]).ravel()
    weights = (width[:, None] * w[None, :]).ravel()
    return nodes, weights


def gauss_interval(lo, hi, nodes, weights):
    """
    Map a reference rule on [0,1] onto [lo,hi] (broadcast over a trailing axis).

    :returns x, w:
        Arrays of shape lo.shape + (len(nodes),).
    """
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    span = hi - lo
    return lo + span * nodes, span * weights


def golden_maximize(func, lo, hi, tol=1e-8):
    """
    Golden-section search for the maximum of ``func`` on every bracket
    [lo[i], hi[i]] at once.

    ``func`` maps an array of abscissae (shape of ``lo``) to values of the same
    shape. Ties keep the left point, so flat stretches resolve towards the
    smaller abscissa.

    :returns x, fx:
        Best abscissa found in each bracket and the value there.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    if lo.size == 0:
        return lo, lo.copy()

    width = float(np.max(hi - lo))
    if width > tol:
        niter = int(np.ceil(np.log(tol / width) / np.log(_INVPHI)))
    else:
        niter = 0

    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc = func(c)
    fd = func(d)
    for _ in range(niter):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        cn = hi - _INVPHI * (hi - lo)
        dn = lo + _INVPHI * (hi - lo)
        xn = np.where(left, cn, dn)
        fn = func(xn)
        c, d, fc, fd = (
            np.where(left, cn, d),
            np.where(left, c, dn),
            np.where(left, fn, fd),
            np.where(left, fc, fn))

    keepc = fc >= fd
    return np.where(keepc, c, d), np.where(keepc, fc, fd)


def block_generator(base_seed, block_index):
    """
    Counter-based stream for one block of BLOCK_SIZE paths.

    The Philox key is (base_seed, block_index), so block b of a run is the
    same sequence no matter which worker draws it.
    """
    base_seed = int(base_seed)
    if base_seed < 0 or base_seed >= 2**64:
        raise ValueError("base_seed must be an unsigned 64-bit integer")
    key = np.array([base_seed, int(block_index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def fmt17(x):
    """Format a float with 17 significant digits."""
    return '{0:.17g}'.format(float(x))

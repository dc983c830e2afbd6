import numpy as np

__all__ = ["ValueGrid", "PolicyGrid", "make_u_nodes", "make_t_nodes",
           "zero_policy", "horizon_policy"]


def make_u_nodes(u_max, M, anchor=None, spacing='uniform', stretch=3.0):
    """
    Capital nodes 0 = u_0 < ... < u_M = u_max.

    :param anchor:
        Capital value to be placed exactly on a node (normally the initial
        capital a); inserted if no node already sits there.
    :param spacing:
        'uniform', or 'stretched' for nodes clustered near zero capital
        (u_max * expm1(stretch x) / expm1(stretch) on uniform x).
    """
    if M < 1:
        raise ValueError("need at least two capital nodes")
    x = np.linspace(0.0, 1.0, M + 1)
    if spacing == 'uniform':
        nodes = u_max * x
    elif spacing == 'stretched':
        nodes = u_max * np.expm1(stretch * x) / np.expm1(stretch)
    else:
        raise ValueError("unknown spacing '{0}'".format(spacing))
    nodes[0] = 0.0
    nodes[-1] = u_max
    if anchor is not None and 0.0 < anchor < u_max:
        if np.min(np.abs(nodes - anchor)) > 1e-12 * u_max:
            nodes = np.sort(np.append(nodes, anchor))
    return nodes


def make_t_nodes(t0, L):
    if L < 1:
        raise ValueError("need at least two time nodes")
    nodes = np.linspace(0.0, t0, L + 1)
    nodes[-1] = t0
    return nodes


class _Grid(object):
    """Bilinear lookup on a tensor grid of (u, t) nodes."""

    def __init__(self, u_nodes, t_nodes, data, t0):
        self.u_nodes = np.asarray(u_nodes, dtype=float)
        self.t_nodes = np.asarray(t_nodes, dtype=float)
        self.t0 = float(t0)
        data = np.asarray(data, dtype=float)
        if data.shape != (self.u_nodes.size, self.t_nodes.size):
            raise ValueError("grid data has shape {0}, expected {1}".format(
                data.shape, (self.u_nodes.size, self.t_nodes.size)))
        self._du = np.diff(self.u_nodes)
        self._dt = np.diff(self.t_nodes)
        self._data = data
        self._t_edge = self.t0 + 1e-12 * max(1.0, self.t0)

    @property
    def u_max(self):
        return self.u_nodes[-1]

    @property
    def shape(self):
        return self._data.shape

    def params_to_grid(self, u, t):
        """
        Convert (u, t) to bin indices and fractional offsets within the bin.

        u is clamped to [0, u_max] and t to [0, t0].
        """
        uc = np.clip(u, 0.0, self.u_nodes[-1])
        tc = np.clip(t, 0.0, self.t0)
        iu = np.clip(np.searchsorted(self.u_nodes, uc, side='right') - 1, 0, self._du.size - 1)
        it = np.clip(np.searchsorted(self.t_nodes, tc, side='right') - 1, 0, self._dt.size - 1)
        fu = (uc - self.u_nodes[iu]) / self._du[iu]
        ft = (tc - self.t_nodes[it]) / self._dt[it]
        return iu, fu, it, ft

    def linear_weights(self, u, t):
        """Bilinear interpolation of the node data at (u, t)."""
        iu, fu, it, ft = self.params_to_grid(u, t)
        v = self._data
        return ((1.0 - fu) * ((1.0 - ft) * v[iu, it] + ft * v[iu, it + 1])
                + fu * ((1.0 - ft) * v[iu + 1, it] + ft * v[iu + 1, it + 1]))


class ValueGrid(_Grid):
    """
    Bounded value function delta(u, t) on [0, u_max] x [0, t0].

    delta is zero for u < 0 or t > t0 and constant in u above u_max. If
    ``exact`` is a utility, the grid stands for the terminal stage
    g1(u) 1{t <= t0} and is evaluated in closed form.
    """

    def __init__(self, u_nodes, t_nodes, values, t0, exact=None):
        super(ValueGrid, self).__init__(u_nodes, t_nodes, values, t0)
        self.exact = exact

    @property
    def values(self):
        return self._data

    @classmethod
    def terminal(cls, u_nodes, t_nodes, t0, g1, exact=True):
        """gamma_0(u, t) = g1(u) for t <= t0."""
        u_nodes = np.asarray(u_nodes, dtype=float)
        vals = np.repeat(np.asarray(g1(u_nodes), dtype=float)[:, None], len(t_nodes), axis=1)
        return cls(u_nodes, t_nodes, vals, t0, exact=g1 if exact else None)

    def evaluate(self, u, t):
        u = np.asarray(u, dtype=float)
        t = np.asarray(t, dtype=float)
        inside = (u >= 0.0) & (t <= self._t_edge)
        if self.exact is not None:
            return np.where(inside, self.exact(u), 0.0)
        u, t = np.broadcast_arrays(u, t)
        return np.where(inside, self.linear_weights(u, t), 0.0)

    __call__ = evaluate

    def sup_distance(self, other):
        return float(np.max(np.abs(self.values - other.values)))

    def lifted(self, floor):
        """Pointwise maximum with ``floor`` on the shared nodes."""
        return ValueGrid(self.u_nodes, self.t_nodes, np.maximum(self.values, floor.values), self.t0)


class PolicyGrid(_Grid):
    """Optimal waiting time r(u, t) in [0, t0 - t] on the value-grid nodes."""

    def __init__(self, u_nodes, t_nodes, r_star, t0):
        super(PolicyGrid, self).__init__(u_nodes, t_nodes, r_star, t0)

    @property
    def r_star(self):
        return self._data

    def lookup(self, u, t):
        u = np.asarray(u, dtype=float)
        t = np.asarray(t, dtype=float)
        u, t = np.broadcast_arrays(u, t)
        r = self.linear_weights(u, t)
        return np.clip(r, 0.0, np.maximum(self.t0 - t, 0.0))

    __call__ = lookup


def zero_policy(u_nodes, t_nodes, t0):
    """Stop at once at every state."""
    return PolicyGrid(u_nodes, t_nodes, np.zeros((len(u_nodes), len(t_nodes))), t0)


def horizon_policy(u_nodes, t_nodes, t0):
    """Wait until the horizon t0 at every state."""
    t_nodes = np.asarray(t_nodes, dtype=float)
    r = np.repeat((t0 - t_nodes)[None, :], len(u_nodes), axis=0)
    return PolicyGrid(u_nodes, t_nodes, np.maximum(r, 0.0), t0)

"""Network topology and DC power flow.

Edges are directed ``(tail, head)`` pairs. The flow on edge ``e`` is

    f_e = B_e * (theta[head] - theta[tail])

and ``A[i, e] * f_e`` is the power leaving bus ``i`` over ``e``, so the bus
balance reads ``delta_i + r_i = u_i + (A f)_i``.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import StructuralError

__all__ = [
    "Grid",
    "FlowViolation",
    "build_incidence",
    "flow_from_angles",
    "check_flow_limits",
    "star_grid",
]


def _frozen(values, m, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(m, float(arr))
    if arr.shape != (m,):
        raise StructuralError(f"{name} must have one entry per edge ({m}), got shape {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Directed transmission network.

    Parameters
    ----------
    n : int
        Number of buses, labelled ``0 .. n-1``.
    edges : sequence of (tail, head)
        One entry per line. Parallel lines are allowed.
    susceptance : float or array_like
        Per-line ``B_e > 0`` (scalar broadcasts).
    flow_limit : float or array_like
        Per-line ``F^max_e >= 0``; a zero limit models an open line.
    """

    n: int
    edges: tuple = ()
    susceptance: np.ndarray = 1.0
    flow_limit: np.ndarray = 1.0
    _incidence: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise StructuralError(f"grid needs at least one bus, got n={self.n}")
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        for e, (tail, head) in enumerate(edges):
            if not (0 <= tail < n and 0 <= head < n):
                raise StructuralError(f"edge {e} = {(tail, head)} references a bus outside 0..{n - 1}")
            if tail == head:
                raise StructuralError(f"edge {e} is a self loop at bus {tail}")
        m = len(edges)
        b = _frozen(self.susceptance, m, "susceptance")
        fmax = _frozen(self.flow_limit, m, "flow_limit")
        if np.any(~np.isfinite(b)) or np.any(b <= 0):
            raise StructuralError("susceptances must be finite and strictly positive")
        if np.any(~np.isfinite(fmax)) or np.any(fmax < 0):
            raise StructuralError("flow limits must be finite and non-negative")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "susceptance", b)
        object.__setattr__(self, "flow_limit", fmax)
        inc = build_incidence(self)
        inc.flags.writeable = False
        object.__setattr__(self, "_incidence", inc)

    @property
    def m(self):
        return len(self.edges)

    @property
    def tails(self):
        return np.array([t for t, _ in self.edges], dtype=np.int64)

    @property
    def heads(self):
        return np.array([h for _, h in self.edges], dtype=np.int64)

    @property
    def incidence(self):
        return self._incidence

    def incident_edges(self, i):
        """Edges touching bus ``i`` in natural (index) order."""
        return [e for e, (t, h) in enumerate(self.edges) if t == i or h == i]

    def components(self):
        """Connected-component label per bus (labels are the smallest bus id)."""
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for t, h in self.edges:
            ra, rb = find(t), find(h)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        return np.array([find(i) for i in range(self.n)], dtype=np.int64)

    def reference_buses(self):
        """Lowest-index bus of each connected component (angle pinned to zero)."""
        comp = self.components()
        return np.flatnonzero(comp == np.arange(self.n))


class FlowViolation(NamedTuple):
    edge: int
    flow: float
    limit: float


def build_incidence(grid):
    """Node-edge incidence matrix with ``+1`` at the head and ``-1`` at the tail."""
    n = grid.n
    A = np.zeros((n, len(grid.edges)), dtype=np.int64)
    for e, (tail, head) in enumerate(grid.edges):
        if not (0 <= tail < n and 0 <= head < n) or tail == head:
            raise StructuralError(f"edge {e} = {(tail, head)} is not a valid line")
        A[head, e] = 1
        A[tail, e] = -1
    return A


def flow_from_angles(grid, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (grid.n,):
        raise StructuralError(f"theta must have {grid.n} entries, got shape {theta.shape}")
    return grid.susceptance * (theta[grid.heads] - theta[grid.tails])


def check_flow_limits(grid, f, tol=0.0):
    """Return the edges whose flow magnitude exceeds ``F^max + tol``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.m,):
        raise StructuralError(f"flow vector must have {grid.m} entries, got shape {f.shape}")
    over = np.flatnonzero(np.abs(f) > grid.flow_limit + tol)
    return [FlowViolation(int(e), float(f[e]), float(grid.flow_limit[e])) for e in over]


def star_grid(n, susceptance=1.0, flow_limit=1.0):
    """Star network with hub ``0`` and leaves ``1 .. n-1`` (edges leaf -> hub)."""
    return Grid(n, [(leaf, 0) for leaf in range(1, n)], susceptance, flow_limit)

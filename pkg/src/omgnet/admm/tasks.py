"""Node and edge tasks of the distributed iteration.

Both the message-passing engine and the compiled engine call the same
numba kernels below, so the two produce bit-identical iterates.

Variables
---------
node ``i``: ``u, r, theta`` and one flow copy ``fhat[i, e]`` per incident
edge, scaled duals ``eta[i, e]``.
edge ``e``: flow ``f`` and one angle copy ``theta_hat[e, i]`` per endpoint
(head first), scaled duals ``xi[e, i]``.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..convex.prox import prox_edge, prox_node_kernel
from ..errors import SyncError
from .messages import Message, MessageKind

__all__ = [
    "NodeData",
    "NodeState",
    "EdgeData",
    "EdgeState",
    "node_primal",
    "edge_primal",
    "node_dual",
    "edge_dual",
    "node_update",
    "edge_update",
]


@njit(cache=True)
def node_update(coef, umin, umax, mu_c, mu_d, la, lc, bps, delta, sign,
                f_in, eta, thhat_in, xi_in, rho, mode, fhat_out, center):
    """Node primal step. Returns ``(theta, u, v, r, q)``; writes ``fhat_out``."""
    d = sign.size
    theta = 0.0
    if d > 0:
        acc = 0.0
        for k in range(d):
            acc += thhat_in[k] + xi_in[k]
        theta = acc / d
    for k in range(d):
        center[k] = f_in[k] - eta[k]
    u, v, r, q, _ = prox_node_kernel(coef, umin, umax, mu_c, mu_d, la, lc, bps, delta,
                                     sign, center, rho, mode, fhat_out)
    return theta, u, v, r, q


@njit(cache=True)
def edge_update(B, F, theta_h, theta_t, xi_h, xi_t, fhat_h, fhat_t, eta_h, eta_t):
    """Edge primal step. Returns ``(theta_hat_head, theta_hat_tail, f)``."""
    return prox_edge(B, F, theta_h - xi_h, theta_t - xi_t, fhat_h + eta_h, fhat_t + eta_t)


@dataclass(frozen=True, eq=False)
class NodeData:
    """Static data of one node task for one step."""

    node: int
    edges: tuple          # incident edges, natural order
    signs: np.ndarray     # +1 where the node is the head, -1 at the tail
    coef: float
    u_min: float
    u_max: float
    mu_c: float
    mu_d: float
    slopes: np.ndarray
    intercepts: np.ndarray
    breakpoints: np.ndarray
    delta: float
    mode: int


@dataclass(eq=False)
class NodeState:
    """``x = (u, r, theta, fhat)`` and duals ``eta`` (per incident edge)."""

    u: float = 0.0
    r: float = 0.0
    theta: float = 0.0
    fhat: np.ndarray = None
    eta: np.ndarray = None
    grid_power: float = 0.0
    q: float = 0.0

    @classmethod
    def zeros(cls, degree):
        return cls(fhat=np.zeros(degree), eta=np.zeros(degree))


@dataclass(frozen=True, eq=False)
class EdgeData:
    edge: int
    head: int
    tail: int
    susceptance: float
    flow_limit: float


@dataclass(eq=False)
class EdgeState:
    """``z = (f, theta_hat)`` and duals ``xi``; endpoint order is (head, tail)."""

    f: float = 0.0
    theta_hat: np.ndarray = field(default_factory=lambda: np.zeros(2))
    xi: np.ndarray = field(default_factory=lambda: np.zeros(2))


def _need(inbox, key, iteration):
    msg = inbox.get(key)
    if msg is None or msg.iteration != iteration:
        got = None if msg is None else msg.iteration
        raise SyncError(f"missing {key[2].value} message {key[1]} -> {key[0]} "
                        f"for iteration {iteration} (have {got})")
    return msg


def node_primal(data, state, inbox, rho, k):
    """Node primal task at iteration ``k``.

    ``inbox`` maps ``(dst, src, kind)`` to the latest :class:`Message`. Needs
    the edge primal and edge dual messages of iteration ``k`` from every
    incident edge; returns the new state and one node-primal message per edge.
    """
    me = ("node", data.node)
    d = len(data.edges)
    f_in = np.empty(d)
    th_in = np.empty(d)
    xi_in = np.empty(d)
    for j, e in enumerate(data.edges):
        src = ("edge", e)
        ep = _need(inbox, (me, src, MessageKind.EDGE_PRIMAL), k)
        ed = _need(inbox, (me, src, MessageKind.EDGE_DUAL), k)
        f_in[j], th_in[j] = ep.payload
        xi_in[j] = ed.payload[0]
    fhat = np.empty(d)
    center = np.empty(d)
    theta, u, v, r, q = node_update(
        data.coef, data.u_min, data.u_max, data.mu_c, data.mu_d, data.slopes, data.intercepts,
        data.breakpoints, data.delta, data.signs, f_in, state.eta, th_in, xi_in, rho, data.mode,
        fhat, center)
    new = NodeState(u, r, theta, fhat, state.eta.copy(), v, q)
    out = [Message(MessageKind.NODE_PRIMAL, me, ("edge", e), k + 1, (theta, float(fhat[j])))
           for j, e in enumerate(data.edges)]
    return new, out


def edge_primal(data, state, inbox, rho, k):
    """Edge primal task: needs node primal messages of ``k + 1`` and node duals of ``k``."""
    me = ("edge", data.edge)
    vals = []
    for i in (data.head, data.tail):
        src = ("node", i)
        npm = _need(inbox, (me, src, MessageKind.NODE_PRIMAL), k + 1)
        nd = _need(inbox, (me, src, MessageKind.NODE_DUAL), k)
        vals.append((npm.payload[0], npm.payload[1], nd.payload[0]))
    (th_h, fh_h, eta_h), (th_t, fh_t, eta_t) = vals
    a, b, f = edge_update(data.susceptance, data.flow_limit, th_h, th_t,
                          state.xi[0], state.xi[1], fh_h, fh_t, eta_h, eta_t)
    new = EdgeState(f, np.array([a, b]), state.xi.copy())
    out = [Message(MessageKind.EDGE_PRIMAL, me, ("node", data.head), k + 1, (f, a)),
           Message(MessageKind.EDGE_PRIMAL, me, ("node", data.tail), k + 1, (f, b))]
    return new, out


def node_dual(data, state, inbox, k):
    """``eta <- eta + fhat - f`` using the edge primal messages of ``k + 1``."""
    me = ("node", data.node)
    eta = state.eta.copy()
    for j, e in enumerate(data.edges):
        ep = _need(inbox, (me, ("edge", e), MessageKind.EDGE_PRIMAL), k + 1)
        eta[j] = eta[j] + (state.fhat[j] - ep.payload[0])
    new = NodeState(state.u, state.r, state.theta, state.fhat, eta, state.grid_power, state.q)
    out = [Message(MessageKind.NODE_DUAL, me, ("edge", e), k + 1, (float(eta[j]),))
           for j, e in enumerate(data.edges)]
    return new, out


def edge_dual(data, state, inbox, k):
    """``xi <- xi + theta_hat - theta`` using the node primal messages of ``k + 1``."""
    me = ("edge", data.edge)
    xi = state.xi.copy()
    for s, i in enumerate((data.head, data.tail)):
        npm = _need(inbox, (me, ("node", i), MessageKind.NODE_PRIMAL), k + 1)
        xi[s] = xi[s] + (state.theta_hat[s] - npm.payload[0])
    new = EdgeState(state.f, state.theta_hat, xi)
    out = [Message(MessageKind.EDGE_DUAL, me, ("node", data.head), k + 1, (float(xi[0]),)),
           Message(MessageKind.EDGE_DUAL, me, ("node", data.tail), k + 1, (float(xi[1]),))]
    return new, out

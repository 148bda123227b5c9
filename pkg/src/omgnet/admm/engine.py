"""Distributed solution of one step by node-edge ADMM.

The step program is split into node blocks ``x_i = (u_i, r_i, theta_i,
fhat_i)`` and edge blocks ``z_e = (f_e, theta_hat_e)`` with consensus
constraints ``fhat[i, e] = f[e]`` and ``theta_hat[e, i] = theta[i]``. Each
iteration runs four barrier-separated phases: node primal, edge primal,
node dual, edge dual.

Two engines are provided. ``"compiled"`` runs the phases in a numba loop
over flat arrays; ``"messages"`` runs cluster controllers that exchange
immutable :class:`Message` objects through a transport. They call the same
kernels and give bit-identical results.
"""
from typing import NamedTuple

import numpy as np
from numba import njit

from ..convex.prox import TIE_MIN_ABS
from ..errors import ContractError, ConvergenceError
from ..omg import (
    FIX_HIGH,
    FIX_LOW,
    POLICY_GREEDY,
    POLICY_NONE,
    POLICY_OMG,
    StepModel,
    StepSolution,
    _cost_lines,
    _eval_cost,
    omg_coefficients,
)
from .messages import InProcessTransport, Message, MessageKind
from .partition import ClusterPartition, assign_tasks
from .tasks import (
    EdgeData,
    EdgeState,
    NodeData,
    NodeState,
    edge_dual,
    edge_primal,
    edge_update,
    node_dual,
    node_primal,
    node_update,
)

__all__ = ["AdmmTrace", "AdmmProblem", "ClusterController", "build_problem", "run_admm", "ENGINES"]

ENGINES = ("compiled", "messages")
_POLICY_CODES = {"omg": POLICY_OMG, "greedy": POLICY_GREEDY, "no_storage": POLICY_NONE}


class AdmmTrace(NamedTuple):
    """Per-iteration record: node-side objective, residuals, message counts."""

    objective: np.ndarray
    primal_residual: np.ndarray
    dual_residual: np.ndarray
    inter_cluster_messages: np.ndarray
    intra_cluster_messages: np.ndarray
    converged: bool

    @property
    def iterations(self):
        return self.objective.size

    def rows(self):
        for k in range(self.iterations):
            yield (k + 1, float(self.objective[k]), float(self.primal_residual[k]),
                   float(self.dual_residual[k]), int(self.inter_cluster_messages[k]),
                   int(self.intra_cluster_messages[k]))


class AdmmProblem:
    """Flat description of one step for the node and edge tasks."""

    def __init__(self, model, inp, policy="omg", tie_break=True):
        if policy not in _POLICY_CODES:
            raise ContractError(f"unknown policy {policy!r}")
        grid = model.grid
        n, m = grid.n, grid.m
        self.model = model
        self.n, self.m = n, m
        self.delta = np.asarray(inp.delta, dtype=float)
        self.price = np.asarray(inp.price, dtype=float)
        self.s = np.asarray(inp.s, dtype=float)
        coef = np.zeros(n)
        fix = np.zeros(n, dtype=np.int64)
        umin = model.umin.copy()
        umax = model.umax.copy()
        if policy == "omg":
            gamma, w = model.param_arrays(inp.params)
            omg_coefficients(self.s, model.lam, gamma, w, model.d_lo, model.d_hi, coef, fix, tie_break)
            umax = np.where(fix == FIX_LOW, umin, umax)
            umin = np.where(fix == FIX_HIGH, umax, umin)
        elif policy == "greedy":
            umin = np.maximum(umin, model.smin - model.lam * self.s)
            umax = np.minimum(umax, model.smax - model.lam * self.s)
        else:
            umin = np.zeros(n)
            umax = np.zeros(n)
        self.coef, self.fix, self.umin, self.umax = coef, fix, umin, umax
        self.mode = np.full(n, TIE_MIN_ABS, dtype=np.int64)
        # cost lines at the current prices, flat by bus
        kptr = model.kptr
        la = np.empty(kptr[-1])
        lc = np.empty(kptr[-1])
        for i in range(n):
            _cost_lines(kptr[i], kptr[i + 1], model.slopes0, model.priced, model.bps,
                        model.offset[i], self.price[i], la[kptr[i]:kptr[i + 1]],
                        lc[kptr[i]:kptr[i + 1]])
        self.la, self.lc = la, lc
        # incidence slots: node-major, edges in natural order
        inc = [grid.incident_edges(i) for i in range(n)]
        self.node_ptr = np.concatenate([[0], np.cumsum([len(x) for x in inc])]).astype(np.int64)
        self.slot_edge = np.array([e for x in inc for e in x], dtype=np.int64)
        self.slot_sign = np.array([1.0 if grid.heads[e] == i else -1.0
                                   for i, x in enumerate(inc) for e in x])
        pair_slot = np.empty(2 * m, dtype=np.int64)
        for j, e in enumerate(self.slot_edge):
            side = 0 if self.slot_sign[j] > 0 else 1
            pair_slot[2 * e + side] = j
        self.pair_slot = pair_slot
        self.pair_node = np.empty(2 * m, dtype=np.int64)
        self.pair_node[0::2] = grid.heads
        self.pair_node[1::2] = grid.tails
        self.incident = inc

    def node_data(self, i):
        kptr = self.model.kptr
        j0, j1 = self.node_ptr[i], self.node_ptr[i + 1]
        return NodeData(
            i, tuple(int(e) for e in self.incident[i]), self.slot_sign[j0:j1].copy(),
            float(self.coef[i]), float(self.umin[i]), float(self.umax[i]),
            float(self.model.mu_c[i]), float(self.model.mu_d[i]),
            self.la[kptr[i]:kptr[i + 1]].copy(), self.lc[kptr[i]:kptr[i + 1]].copy(),
            self.model.bps[kptr[i]:kptr[i + 1] - 1].copy(), float(self.delta[i]), int(self.mode[i]))

    def edge_data(self, e):
        g = self.model.grid
        return EdgeData(e, int(g.heads[e]), int(g.tails[e]), float(g.susceptance[e]),
                        float(g.flow_limit[e]))


def build_problem(grid, buses, inp, policy="omg", tie_break=True, model=None):
    return AdmmProblem(model or StepModel(grid, buses), inp, policy, tie_break)


@njit(cache=True)
def _residual(slot_edge, fhat, f, pair_node, thhat, theta):
    acc = 0.0
    for j in range(slot_edge.size):
        d = fhat[j] - f[slot_edge[j]]
        acc += d * d
    for p in range(pair_node.size):
        d = thhat[p] - theta[pair_node[p]]
        acc += d * d
    return np.sqrt(acc)


@njit(cache=True)
def _dual_residual(rho, f, f_old, thhat, thhat_old):
    acc = 0.0
    for e in range(f.size):
        acc += (f[e] - f_old[e]) ** 2
    for p in range(thhat.size):
        acc += (thhat[p] - thhat_old[p]) ** 2
    return rho * np.sqrt(acc)


@njit(cache=True)
def _objective(q):
    acc = 0.0
    for i in range(q.size):
        acc += q[i]
    return acc


@njit(cache=True)
def _admm_loop(node_ptr, slot_edge, slot_sign, pair_slot, pair_node, heads, tails, B, F,
               coef, umin, umax, mu_c, mu_d, la, lc, kptr, bps, delta, mode, rho,
               node_order, edge_order, tol_primal, tol_dual, tol_obj, max_iter,
               fhat, eta, thhat, xi, f, theta, u, v, r, q, obj_trace, res_trace, dres_trace):
    n = coef.size
    maxd = 0
    for i in range(n):
        maxd = max(maxd, node_ptr[i + 1] - node_ptr[i])
    f_in = np.empty(maxd)
    th_in = np.empty(maxd)
    xi_in = np.empty(maxd)
    center = np.empty(maxd)
    f_old = f.copy()
    thhat_old = thhat.copy()
    xi_old = xi.copy()
    eta_old = eta.copy()
    prev = np.nan
    for k in range(max_iter):
        # snapshots of the previous phase (what the messages would carry)
        f_old[:] = f
        thhat_old[:] = thhat
        xi_old[:] = xi
        eta_old[:] = eta
        for idx in range(node_order.size):
            i = node_order[idx]
            j0, j1 = node_ptr[i], node_ptr[i + 1]
            d = j1 - j0
            for jj in range(d):
                j = j0 + jj
                e = slot_edge[j]
                side = 0 if slot_sign[j] > 0 else 1
                f_in[jj] = f_old[e]
                th_in[jj] = thhat_old[2 * e + side]
                xi_in[jj] = xi_old[2 * e + side]
            th, uu, vv, rr, qq = node_update(
                coef[i], umin[i], umax[i], mu_c[i], mu_d[i], la[kptr[i]:kptr[i + 1]],
                lc[kptr[i]:kptr[i + 1]], bps[kptr[i]:kptr[i + 1] - 1], delta[i],
                slot_sign[j0:j1], f_in[:d], eta_old[j0:j1], th_in[:d], xi_in[:d], rho, mode[i],
                fhat[j0:j1], center[:d])
            theta[i] = th
            u[i] = uu
            v[i] = vv
            r[i] = rr
            q[i] = qq
        for idx in range(edge_order.size):
            e = edge_order[idx]
            jh = pair_slot[2 * e]
            jt = pair_slot[2 * e + 1]
            a, b, ff = edge_update(B[e], F[e], theta[heads[e]], theta[tails[e]],
                                   xi_old[2 * e], xi_old[2 * e + 1], fhat[jh], fhat[jt],
                                   eta_old[jh], eta_old[jt])
            thhat[2 * e] = a
            thhat[2 * e + 1] = b
            f[e] = ff
        for idx in range(node_order.size):
            i = node_order[idx]
            for j in range(node_ptr[i], node_ptr[i + 1]):
                eta[j] = eta_old[j] + (fhat[j] - f[slot_edge[j]])
        for idx in range(edge_order.size):
            e = edge_order[idx]
            for s in range(2):
                p = 2 * e + s
                xi[p] = xi_old[p] + (thhat[p] - theta[pair_node[p]])
        res = _residual(slot_edge, fhat, f, pair_node, thhat, theta)
        dres = _dual_residual(rho, f, f_old, thhat, thhat_old)
        obj = _objective(q)
        obj_trace[k] = obj
        res_trace[k] = res
        dres_trace[k] = dres
        if res <= tol_primal and dres <= tol_dual and abs(obj - prev) <= tol_obj:
            return k + 1, True
        prev = obj
    return max_iter, False


class _Flat:
    """Flat iterate storage shared by both engines (for extraction)."""

    def __init__(self, prob):
        n, m = prob.n, prob.m
        self.fhat = np.zeros(2 * m)
        self.eta = np.zeros(2 * m)
        self.thhat = np.zeros(2 * m)
        self.xi = np.zeros(2 * m)
        self.f = np.zeros(m)
        self.theta = np.zeros(n)
        self.u = np.zeros(n)
        self.v = np.zeros(n)
        self.r = np.zeros(n)
        self.q = np.zeros(n)


def _cluster_order(schedule):
    nodes = np.concatenate([c for c in schedule.cluster_nodes] + [np.zeros(0, np.int64)])
    edges = np.concatenate([c for c in schedule.cluster_edges] + [np.zeros(0, np.int64)])
    return nodes.astype(np.int64), edges.astype(np.int64)


def _run_compiled(prob, schedule, rho, tol_primal, tol_dual, tol_obj, max_iter):
    st = _Flat(prob)
    node_order, edge_order = _cluster_order(schedule)
    model = prob.model
    obj = np.zeros(max_iter)
    res = np.zeros(max_iter)
    dres = np.zeros(max_iter)
    iters, ok = _admm_loop(
        prob.node_ptr, prob.slot_edge, prob.slot_sign, prob.pair_slot, prob.pair_node,
        model.heads, model.tails, model.B, model.F, prob.coef, prob.umin, prob.umax,
        model.mu_c, model.mu_d, prob.la, prob.lc, model.kptr, model.bps, prob.delta, prob.mode,
        float(rho), node_order, edge_order, tol_primal, tol_dual, tol_obj, max_iter,
        st.fhat, st.eta, st.thhat, st.xi, st.f, st.theta, st.u, st.v, st.r, st.q, obj, res, dres)
    return st, obj[:iters], res[:iters], dres[:iters], bool(ok)


class ClusterController:
    """Owns a set of node and edge tasks and routes their messages."""

    def __init__(self, index, nodes, edges, prob):
        self.index = index
        self.nodes = [int(i) for i in nodes]
        self.edges = [int(e) for e in edges]
        self.node_data = {i: prob.node_data(i) for i in self.nodes}
        self.edge_data = {e: prob.edge_data(e) for e in self.edges}
        self.node_state = {i: NodeState.zeros(len(self.node_data[i].edges)) for i in self.nodes}
        self.edge_state = {e: EdgeState() for e in self.edges}
        self.inbox = {}

    def deliver(self, msg):
        self.inbox[(msg.dst, msg.src, msg.kind)] = msg


class _Router:
    def __init__(self, controllers, schedule, transport):
        self.controllers = controllers
        self.node_owner = schedule.node_owner
        self.edge_owner = schedule.edge_owner
        self.transport = transport
        self.inter = 0
        self.intra = 0

    def owner(self, ref):
        kind, idx = ref
        return int(self.node_owner[idx] if kind == "node" else self.edge_owner[idx])

    def route(self, sender, messages, count=True):
        for msg in messages:
            dst = self.owner(msg.dst)
            if dst == sender:
                self.controllers[dst].deliver(msg)
                self.intra += count
            else:
                self.transport.send(dst, msg)
                self.inter += count

    def barrier(self):
        for c in self.controllers:
            for msg in self.transport.drain(c.index):
                c.deliver(msg)


def _run_messages(prob, schedule, rho, tol_primal, tol_dual, tol_obj, max_iter, transport=None):
    k_cl = len(schedule.cluster_nodes)
    ctrls = [ClusterController(c, schedule.cluster_nodes[c], schedule.cluster_edges[c], prob)
             for c in range(k_cl)]
    router = _Router(ctrls, schedule, transport or InProcessTransport(k_cl))
    # seed iteration-0 messages (initial zero iterates); not counted
    for c in ctrls:
        out = []
        for e in c.edges:
            d = c.edge_data[e]
            for i in (d.head, d.tail):
                out.append(Message(MessageKind.EDGE_PRIMAL, ("edge", e), ("node", i), 0, (0.0, 0.0)))
                out.append(Message(MessageKind.EDGE_DUAL, ("edge", e), ("node", i), 0, (0.0,)))
        for i in c.nodes:
            for e in c.node_data[i].edges:
                out.append(Message(MessageKind.NODE_DUAL, ("node", i), ("edge", e), 0, (0.0,)))
        router.route(c.index, out, count=False)
    router.barrier()
    st = _Flat(prob)
    obj_tr, res_tr, dres_tr, inter_tr, intra_tr = [], [], [], [], []
    prev = np.nan
    converged = False
    for k in range(max_iter):
        i0, a0 = router.inter, router.intra
        for c in ctrls:
            for i in c.nodes:
                c.node_state[i], out = node_primal(c.node_data[i], c.node_state[i], c.inbox, rho, k)
                router.route(c.index, out)
        router.barrier()
        for c in ctrls:
            for e in c.edges:
                c.edge_state[e], out = edge_primal(c.edge_data[e], c.edge_state[e], c.inbox, rho, k)
                router.route(c.index, out)
        router.barrier()
        for c in ctrls:
            for i in c.nodes:
                c.node_state[i], out = node_dual(c.node_data[i], c.node_state[i], c.inbox, k)
                router.route(c.index, out)
        router.barrier()
        for c in ctrls:
            for e in c.edges:
                c.edge_state[e], out = edge_dual(c.edge_data[e], c.edge_state[e], c.inbox, k)
                router.route(c.index, out)
        router.barrier()
        f_old, thhat_old = st.f.copy(), st.thhat.copy()
        _gather(prob, ctrls, st)
        res = float(_residual(prob.slot_edge, st.fhat, st.f, prob.pair_node, st.thhat, st.theta))
        dres = float(_dual_residual(float(rho), st.f, f_old, st.thhat, thhat_old))
        obj = float(_objective(st.q))
        obj_tr.append(obj)
        res_tr.append(res)
        dres_tr.append(dres)
        inter_tr.append(router.inter - i0)
        intra_tr.append(router.intra - a0)
        if res <= tol_primal and dres <= tol_dual and abs(obj - prev) <= tol_obj:
            converged = True
            break
        prev = obj
    return (st, np.array(obj_tr), np.array(res_tr), np.array(dres_tr), converged,
            np.array(inter_tr), np.array(intra_tr))


def _gather(prob, ctrls, st):
    for c in ctrls:
        for i in c.nodes:
            ns = c.node_state[i]
            j0, j1 = prob.node_ptr[i], prob.node_ptr[i + 1]
            st.fhat[j0:j1] = ns.fhat
            st.eta[j0:j1] = ns.eta
            st.theta[i], st.u[i], st.v[i], st.r[i], st.q[i] = ns.theta, ns.u, ns.grid_power, ns.r, ns.q
        for e in c.edges:
            es = c.edge_state[e]
            st.f[e] = es.f
            st.thhat[2 * e:2 * e + 2] = es.theta_hat
            st.xi[2 * e:2 * e + 2] = es.xi


def _consensus(prob, st):
    """Flows from the edges, angles and controls from the nodes, residuals re-balanced."""
    model = prob.model
    r = st.v - prob.delta
    np.add.at(r, model.heads, st.f)
    np.subtract.at(r, model.tails, st.f)
    obj = 0.0
    stage = 0.0
    for i in range(prob.n):
        g = _eval_cost(model.kptr[i], model.kptr[i + 1], model.slopes0, model.priced, model.bps,
                       model.offset[i], prob.price[i], r[i])
        stage += g
        obj += g + prob.coef[i] * st.u[i]
    return StepSolution(st.u.copy(), r, st.theta.copy(), st.f.copy(), float(obj), float(stage),
                        st.v.copy())


def run_admm(grid, buses, inp, rho=100.0, tol_primal=1e-6, tol_obj=1e-8, max_iter=20000,
             partition=None, engine="compiled", policy="omg", tie_break=True, transport=None,
             raise_on_max_iter=True, model=None, tol_dual=None):
    """Solve one step by ADMM.

    Stops when the stacked consensus residual is at most ``tol_primal``, the
    dual residual ``rho * |z(k+1) - z(k)|`` over the edge variables is at
    most ``tol_dual`` (default ``tol_primal``) and the node-side objective
    moved by at most ``tol_obj``. The dual test keeps a slow drift of the
    edge variables from passing for convergence. Returns the consensus
    :class:`StepSolution` and an :class:`AdmmTrace`.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` is reached (carries the trace and the last solution),
        unless ``raise_on_max_iter`` is false.
    """
    if not rho > 0:
        raise ContractError(f"rho must be positive, got {rho}")
    if engine not in ENGINES:
        raise ContractError(f"unknown engine {engine!r}; choose from {ENGINES}")
    if max_iter < 1:
        raise ContractError("max_iter must be at least 1")
    tol_dual = tol_primal if tol_dual is None else tol_dual
    prob = build_problem(grid, buses, inp, policy, tie_break, model)
    partition = partition or ClusterPartition.single(grid)
    schedule = assign_tasks(partition, grid)
    if engine == "compiled":
        st, obj, res, dres, ok = _run_compiled(prob, schedule, rho, tol_primal, tol_dual, tol_obj,
                                               max_iter)
        inter = np.full(obj.size, schedule.inter_cluster_per_iteration, dtype=np.int64)
        intra = np.full(obj.size, schedule.intra_cluster_per_iteration, dtype=np.int64)
    else:
        st, obj, res, dres, ok, inter, intra = _run_messages(
            prob, schedule, rho, tol_primal, tol_dual, tol_obj, max_iter, transport)
    trace = AdmmTrace(obj, res, dres, inter, intra, ok)
    sol = _consensus(prob, st)
    if not ok and raise_on_max_iter:
        raise ConvergenceError(f"ADMM stopped after {max_iter} iterations "
                               f"(residual {res[-1]:.3e})", trace=trace, solution=sol)
    return sol, trace

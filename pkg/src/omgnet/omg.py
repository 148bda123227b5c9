"""Online phase: the per-step modified-greedy program and the greedy baseline.

Each period the controller solves

    min  sum_i (lam_i / W_i) (s_i + Gamma_i) u_i + g_i(r_i; p_i)

over storage controls, residuals, angles and flows subject to the storage
box, the bus balance, the DC flow relation and the line limits. The storage
capacity constraint is deliberately left out; the shift and weight keep the
level inside its bounds.

The step LP uses per bus ``uc >= 0`` (charging) and ``ud >= 0``
(discharging) with ``u = uc - ud``; grid-side power is ``uc/mu_c - mu_d*ud``.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .convex import _simplex
from .errors import ContractError, LPError, LPInfeasible, ModelError

__all__ = [
    "StepInput",
    "StepSolution",
    "StepModel",
    "ThresholdReport",
    "omg_step",
    "greedy_step",
    "no_storage_step",
    "check_thresholds",
    "POLICY_OMG",
    "POLICY_GREEDY",
    "POLICY_NONE",
]

POLICY_OMG = 0
POLICY_GREEDY = 1
POLICY_NONE = 2

FIX_NONE = 0
FIX_LOW = 1
FIX_HIGH = 2


@dataclass(frozen=True, eq=False)
class StepInput:
    """State and data for one period (arrays have one entry per bus)."""

    t: int
    s: np.ndarray
    delta: np.ndarray
    price: np.ndarray
    params: tuple = None

    def __post_init__(self):
        for name in ("s", "delta", "price"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not self.s.shape == self.delta.shape == self.price.shape:
            raise ContractError("s, delta and price must have one entry per bus")


class StepSolution(NamedTuple):
    u: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    f: np.ndarray
    objective: float
    stage_cost: float
    grid_power: np.ndarray


@njit(cache=True)
def _cost_lines(k0, k1, slopes0, priced, bps, offset, p, a_out, c_out):
    """Max-affine form of one bus cost at price ``p`` (anchored at g(0) = offset)."""
    K = k1 - k0
    for k in range(K):
        a = slopes0[k0 + k]
        a_out[k] = a * p if priced[k0 + k] else a
    # first piece containing 0
    j = 0
    while j < K - 1 and bps[k0 + j] <= 0.0:
        j += 1
    c_out[j] = offset
    for k in range(j + 1, K):
        c_out[k] = c_out[k - 1] + (a_out[k - 1] - a_out[k]) * bps[k0 + k - 1]
    for k in range(j - 1, -1, -1):
        c_out[k] = c_out[k + 1] + (a_out[k + 1] - a_out[k]) * bps[k0 + k]


@njit(cache=True)
def _eval_cost(k0, k1, slopes0, priced, bps, offset, p, r):
    K = k1 - k0
    a = np.empty(K)
    c = np.empty(K)
    _cost_lines(k0, k1, slopes0, priced, bps, offset, p, a, c)
    best = a[0] * r + c[0]
    for k in range(1, K):
        v = a[k] * r + c[k]
        if v > best:
            best = v
    return best


@njit(cache=True)
def step_kernel(n, m, tails, heads, B, F, ref, forest, tree_edge, tree_child,
                umin, umax, mu_c, mu_d, lam, smin, smax,
                kptr, slopes0, priced, bps, offset,
                s, delta, price, coef, fix, policy,
                tol_feas, tol_opt,
                u_out, v_out, r_out, theta_out, f_out):
    """Assemble and solve one step LP. Returns ``(status, objective, stage_cost)``."""
    ntheta = 0 if forest else n
    nK = kptr[n]
    greedy = policy == POLICY_GREEDY
    ng = 2 * n if greedy else 0
    nv = 4 * n + m + ntheta
    nrow = n + (0 if forest else m) + nK + ng
    ncol = nv + nK + ng
    A = np.zeros((nrow, ncol))
    b = np.zeros(nrow)
    c = np.zeros(ncol)
    c2 = np.zeros(ncol)
    lb = np.zeros(ncol)
    ub = np.full(ncol, np.inf)
    slack_col = -np.ones(nrow, dtype=np.int64)
    a_k = np.empty(slopes0.size)
    c_k = np.empty(slopes0.size)
    row = 0
    for i in range(n):
        iuc, iud, ir, it = i, n + i, 2 * n + i, 3 * n + i
        if policy == POLICY_NONE:
            ub[iuc] = 0.0
            ub[iud] = 0.0
        elif fix[i] == FIX_LOW:
            lb[iud] = ub[iud] = -umin[i]
            ub[iuc] = 0.0
        elif fix[i] == FIX_HIGH:
            lb[iuc] = ub[iuc] = umax[i]
            ub[iud] = 0.0
        else:
            ub[iuc] = umax[i]
            ub[iud] = -umin[i]
        lb[ir] = -np.inf
        lb[it] = -np.inf
        c[iuc] = coef[i]
        c[iud] = -coef[i]
        c[it] = 1.0
        c2[iuc] = 1.0
        c2[iud] = 1.0
        # balance: r - uc/mu_c + mu_d*ud - (A f)_i = -delta
        A[row, ir] = 1.0
        A[row, iuc] = -1.0 / mu_c[i]
        A[row, iud] = mu_d[i]
        b[row] = -delta[i]
        row += 1
    for e in range(m):
        jf = 4 * n + e
        lb[jf] = -F[e]
        ub[jf] = F[e]
        A[heads[e], jf] -= 1.0
        A[tails[e], jf] += 1.0
    if not forest:
        for i in range(n):
            jt = 4 * n + m + i
            if ref[i]:
                lb[jt] = 0.0
                ub[jt] = 0.0
            else:
                lb[jt] = -np.inf
        for e in range(m):
            A[row, 4 * n + e] = 1.0
            A[row, 4 * n + m + heads[e]] = -B[e]
            A[row, 4 * n + m + tails[e]] = B[e]
            row += 1
    sc = nv
    for i in range(n):
        k0, k1 = kptr[i], kptr[i + 1]
        _cost_lines(k0, k1, slopes0, priced, bps, offset[i], price[i], a_k, c_k)
        for k in range(k1 - k0):
            A[row, 2 * n + i] = a_k[k]
            A[row, 3 * n + i] = -1.0
            A[row, sc] = 1.0
            b[row] = -c_k[k]
            slack_col[row] = sc
            row += 1
            sc += 1
    if greedy:
        for i in range(n):
            A[row, i] = 1.0
            A[row, n + i] = -1.0
            A[row, sc] = 1.0
            b[row] = smax[i] - lam[i] * s[i]
            slack_col[row] = sc
            row += 1
            sc += 1
            A[row, i] = -1.0
            A[row, n + i] = 1.0
            A[row, sc] = 1.0
            b[row] = lam[i] * s[i] - smin[i]
            slack_col[row] = sc
            row += 1
            sc += 1
    x = np.zeros(ncol)
    ray = np.zeros(2)
    status = _simplex.simplex_solve(A, b, c, lb, ub, c2, policy != POLICY_NONE, slack_col,
                                    tol_feas, tol_opt, x, ray)
    if status != _simplex.OPTIMAL:
        return status, np.nan, np.nan
    for e in range(m):
        f_out[e] = x[4 * n + e]
    if forest:
        for i in range(n):
            theta_out[i] = 0.0
        for k in range(tree_edge.size):
            e = tree_edge[k]
            if tree_child[k] == heads[e]:
                theta_out[heads[e]] = theta_out[tails[e]] + f_out[e] / B[e]
            else:
                theta_out[tails[e]] = theta_out[heads[e]] - f_out[e] / B[e]
    else:
        for i in range(n):
            theta_out[i] = x[4 * n + m + i]
    for i in range(n):
        uc = x[i]
        ud = x[n + i]
        u_out[i] = uc - ud
        v_out[i] = uc / mu_c[i] - mu_d[i] * ud
        r_out[i] = v_out[i] - delta[i]
    for e in range(m):
        r_out[heads[e]] += f_out[e]
        r_out[tails[e]] -= f_out[e]
    obj = 0.0
    stage = 0.0
    for i in range(n):
        g = _eval_cost(kptr[i], kptr[i + 1], slopes0, priced, bps, offset[i], price[i], r_out[i])
        stage += g
        obj += g + coef[i] * u_out[i]
    return status, obj, stage


@njit(cache=True)
def omg_coefficients(s, lam, gamma, w, d_lo, d_hi, coef, fix, tie_break):
    """Linear coefficients and threshold fixes for the modified-greedy step."""
    for i in range(s.size):
        shifted = lam[i] * (s[i] + gamma[i])
        coef[i] = shifted / w[i]
        fix[i] = FIX_NONE
        if tie_break:
            if shifted >= -w[i] * d_lo[i]:
                fix[i] = FIX_LOW
            elif shifted <= -w[i] * d_hi[i]:
                fix[i] = FIX_HIGH


def _tree_order(grid, ref_mask):
    """Breadth-first edge order from each reference bus (for angle recovery)."""
    adj = [[] for _ in range(grid.n)]
    for e, (t, h) in enumerate(grid.edges):
        adj[t].append((e, h))
        adj[h].append((e, t))
    seen = ref_mask.copy()
    order, child = [], []
    queue = list(np.flatnonzero(ref_mask))
    while queue:
        i = queue.pop(0)
        for e, j in adj[i]:
            if not seen[j]:
                seen[j] = True
                order.append(e)
                child.append(j)
                queue.append(j)
    return np.array(order, dtype=np.int64), np.array(child, dtype=np.int64)


class StepModel:
    """Flattened, compiled-friendly view of a grid and its buses."""

    def __init__(self, grid, buses):
        if len(buses) != grid.n:
            raise ModelError(f"need one BusSpec per bus ({grid.n}), got {len(buses)}")
        self.grid = grid
        self.buses = tuple(buses)
        n = grid.n
        self.n, self.m = n, grid.m
        self.tails = grid.tails
        self.heads = grid.heads
        self.B = np.ascontiguousarray(grid.susceptance, dtype=float)
        self.F = np.ascontiguousarray(grid.flow_limit, dtype=float)
        ref = np.zeros(n, dtype=np.bool_)
        ref[grid.reference_buses()] = True
        self.ref = ref
        self.forest = grid.m == n - ref.sum()
        self.tree_edge, self.tree_child = _tree_order(grid, ref)
        sp = [b.storage for b in buses]
        self.umin = np.array([x.u_min for x in sp])
        self.umax = np.array([x.u_max for x in sp])
        self.mu_c = np.array([x.mu_c for x in sp])
        self.mu_d = np.array([x.mu_d for x in sp])
        self.lam = np.array([x.lam for x in sp])
        self.smin = np.array([x.s_min for x in sp])
        self.smax = np.array([x.s_max for x in sp])
        costs = [b.cost for b in buses]
        sizes = [c.n_pieces for c in costs]
        self.kptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.slopes0 = np.concatenate([c.slopes for c in costs]).astype(float)
        self.priced = np.concatenate(
            [c.priced if c.priced is not None else (False,) * c.n_pieces for c in costs]
        ).astype(np.bool_)
        bps = np.zeros(self.slopes0.size)
        for i, cst in enumerate(costs):
            bps[self.kptr[i]: self.kptr[i] + len(cst.breakpoints)] = cst.breakpoints
        self.bps = bps
        self.offset = np.array([c.offset for c in costs])
        sg = [b.subgradient_bounds() for b in buses]
        self.d_lo = np.array([x.d_lo for x in sg])
        self.d_hi = np.array([x.d_hi for x in sg])

    def kernel_args(self):
        return (self.n, self.m, self.tails, self.heads, self.B, self.F, self.ref, self.forest,
                self.tree_edge, self.tree_child, self.umin, self.umax, self.mu_c, self.mu_d,
                self.lam, self.smin, self.smax, self.kptr, self.slopes0, self.priced, self.bps,
                self.offset)

    def solve(self, s, delta, price, coef, fix, policy, tol_feas=1e-9, tol_opt=1e-8):
        n, m = self.n, self.m
        u, v, r, th = np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n)
        f = np.zeros(m)
        status, obj, stage = step_kernel(
            *self.kernel_args(), np.asarray(s, float), np.asarray(delta, float),
            np.asarray(price, float), np.asarray(coef, float), np.asarray(fix, np.int64),
            policy, tol_feas, tol_opt, u, v, r, th, f)
        if status == _simplex.INFEASIBLE:
            raise LPInfeasible("step program is infeasible")
        if status != _simplex.OPTIMAL:
            raise LPError(f"step program failed with simplex status {status}")
        return StepSolution(u, r, th, f, float(obj), float(stage), v)

    def param_arrays(self, params):
        if params is None or len(params) != self.n:
            raise ContractError("modified-greedy step needs one AlgorithmParams per bus")
        return (np.array([p.gamma for p in params], dtype=float),
                np.array([p.w for p in params], dtype=float))


def _check_levels(model, s):
    s = np.asarray(s, dtype=float)
    bad = (s < model.smin) | (s > model.smax)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ContractError(f"storage level {s[i]} at bus {i} outside [{model.smin[i]}, {model.smax[i]}]")


def omg_step(grid, buses, inp, tie_break=True, model=None):
    """Solve the modified-greedy step program exactly.

    With ``tie_break`` (the default) a bus whose shifted level crosses a
    threshold has its control fixed at the matching box end, and remaining
    ties are broken toward the least total storage action.
    """
    model = model or StepModel(grid, buses)
    _check_levels(model, inp.s)
    gamma, w = model.param_arrays(inp.params)
    coef = np.zeros(model.n)
    fix = np.zeros(model.n, dtype=np.int64)
    omg_coefficients(inp.s, model.lam, gamma, w, model.d_lo, model.d_hi, coef, fix, tie_break)
    return model.solve(inp.s, inp.delta, inp.price, coef, fix, POLICY_OMG)


def greedy_step(grid, buses, inp, model=None):
    """Minimise the stage cost with the capacity constraint enforced."""
    model = model or StepModel(grid, buses)
    _check_levels(model, inp.s)
    zeros = np.zeros(model.n)
    return model.solve(inp.s, inp.delta, inp.price, zeros, zeros.astype(np.int64), POLICY_GREEDY)


def no_storage_step(grid, buses, inp, model=None):
    """Network dispatch with storage idle (``u = 0``)."""
    model = model or StepModel(grid, buses)
    zeros = np.zeros(model.n)
    return model.solve(inp.s, inp.delta, inp.price, zeros, zeros.astype(np.int64), POLICY_NONE)


class ThresholdReport(NamedTuple):
    fires_low: np.ndarray
    fires_high: np.ndarray
    violations: list

    @property
    def ok(self):
        return not self.violations


def check_thresholds(inp, sol, buses, tol=1e-9):
    """Verify the threshold property of a modified-greedy step solution.

    A bus with ``lam (s + Gamma) >= -W d_lo`` must discharge at ``u_min``;
    one with ``lam (s + Gamma) <= -W d_hi`` must charge at ``u_max``.
    """
    fires_low = np.zeros(len(buses), dtype=bool)
    fires_high = np.zeros(len(buses), dtype=bool)
    violations = []
    for i, (bus, prm) in enumerate(zip(buses, inp.params)):
        sp = bus.storage
        sg = bus.subgradient_bounds()
        shifted = sp.lam * (inp.s[i] + prm.gamma)
        if shifted >= -prm.w * sg.d_lo:
            fires_low[i] = True
            if abs(sol.u[i] - sp.u_min) > tol:
                violations.append((i, "low", float(sol.u[i]), sp.u_min))
        if shifted <= -prm.w * sg.d_hi:
            fires_high[i] = True
            if abs(sol.u[i] - sp.u_max) > tol:
                violations.append((i, "high", float(sol.u[i]), sp.u_max))
    return ThresholdReport(fires_low, fires_high, violations)

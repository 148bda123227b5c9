"""Clairvoyant full-horizon benchmark."""
import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..errors import ContractError, LPError, LPInfeasible
from ..omg import StepModel
from .rollout import RunResult

__all__ = ["offline_clairvoyant", "MAX_OFFLINE_SIZE"]

MAX_OFFLINE_SIZE = 20000


def offline_clairvoyant(grid, buses, scenario, s_init=None, max_size=MAX_OFFLINE_SIZE, model=None):
    """Optimal cost with the whole disturbance path known in advance.

    Solves one LP over all periods with the storage dynamics and capacity
    bounds, the bus balance, the DC flow relation and the line limits. Its
    cost is a lower bound for every non-anticipative policy on the same
    scenario. The problem is sparse and goes to SciPy's HiGHS solver.
    """
    T, n, m = scenario.T, grid.n, grid.m
    if T * n > max_size:
        raise ContractError(f"offline benchmark limited to T*n <= {max_size} (got T={T}, n={n})")
    scenario.check_against(grid, buses)
    model = model or StepModel(grid, buses)
    s0 = np.array([b.initial_level for b in buses] if s_init is None else s_init, dtype=float)
    forest = model.forest
    nth = 0 if forest else n
    # per-period block: uc, ud, r, epi, s_next, f, theta
    o_uc, o_ud, o_r, o_t, o_s, o_f, o_th = 0, n, 2 * n, 3 * n, 4 * n, 5 * n, 5 * n + m
    nb = 5 * n + m + nth
    nvar = T * nb
    lb = np.zeros(nvar)
    ub = np.zeros(nvar)
    c = np.zeros(nvar)
    bus = np.arange(n)
    edge = np.arange(m)
    eq_r, eq_c, eq_v, eq_b = [], [], [], []
    ub_r, ub_c, ub_v, ub_b = [], [], [], []
    row_eq = 0
    row_ub = 0
    lines = {}
    for t in range(T):
        base = t * nb
        lb[base + o_uc + bus] = 0.0
        ub[base + o_uc + bus] = model.umax
        lb[base + o_ud + bus] = 0.0
        ub[base + o_ud + bus] = -model.umin
        lb[base + o_r + bus] = -np.inf
        ub[base + o_r + bus] = np.inf
        lb[base + o_t + bus] = -np.inf
        ub[base + o_t + bus] = np.inf
        lb[base + o_s + bus] = model.smin
        ub[base + o_s + bus] = model.smax
        lb[base + o_f + edge] = -model.F
        ub[base + o_f + edge] = model.F
        if nth:
            lb[base + o_th + bus] = np.where(model.ref, 0.0, -np.inf)
            ub[base + o_th + bus] = np.where(model.ref, 0.0, np.inf)
        c[base + o_t + bus] = 1.0
        # balance rows
        rows = row_eq + bus
        eq_r += [rows, rows, rows]
        eq_c += [base + o_r + bus, base + o_uc + bus, base + o_ud + bus]
        eq_v += [np.ones(n), -1.0 / model.mu_c, model.mu_d]
        eq_r += [row_eq + model.heads, row_eq + model.tails]
        eq_c += [base + o_f + edge, base + o_f + edge]
        eq_v += [-np.ones(m), np.ones(m)]
        eq_b.append(-scenario.delta[t])
        row_eq += n
        # storage dynamics: s_next - uc + ud - lam * s_prev = 0 (lam * s0 at t = 0)
        rows = row_eq + bus
        eq_r += [rows, rows, rows]
        eq_c += [base + o_s + bus, base + o_uc + bus, base + o_ud + bus]
        eq_v += [np.ones(n), -np.ones(n), np.ones(n)]
        if t == 0:
            eq_b.append(model.lam * s0)
        else:
            eq_r.append(rows)
            eq_c.append(base - nb + o_s + bus)
            eq_v.append(-model.lam)
            eq_b.append(np.zeros(n))
        row_eq += n
        if nth:
            rows = row_eq + edge
            eq_r += [rows, rows, rows]
            eq_c += [base + o_f + edge, base + o_th + model.heads, base + o_th + model.tails]
            eq_v += [np.ones(m), -model.B, model.B]
            eq_b.append(np.zeros(m))
            row_eq += m
        for i, b in enumerate(buses):
            key = (i, float(scenario.price[t, i]))
            if key not in lines:
                lines[key] = b.cost.lines(key[1])
            a, cc = lines[key]
            K = a.size
            rows = row_ub + np.arange(K)
            ub_r += [rows, rows]
            ub_c += [np.full(K, base + o_r + i), np.full(K, base + o_t + i)]
            ub_v += [a, -np.ones(K)]
            ub_b.append(-cc)
            row_ub += K
    A_eq = sparse.csr_matrix((np.concatenate(eq_v), (np.concatenate(eq_r), np.concatenate(eq_c))),
                             shape=(row_eq, nvar))
    A_ub = sparse.csr_matrix((np.concatenate(ub_v), (np.concatenate(ub_r), np.concatenate(ub_c))),
                             shape=(row_ub, nvar))
    res = linprog(c, A_ub=A_ub, b_ub=np.concatenate(ub_b), A_eq=A_eq, b_eq=np.concatenate(eq_b),
                  bounds=np.column_stack([lb, ub]), method="highs")
    if res.status == 2:
        raise LPInfeasible(f"offline problem infeasible ({res.message})")
    if res.status != 0:
        raise LPError(f"offline problem failed ({res.message})")
    x = res.x.reshape(T, nb)
    uc, ud = x[:, o_uc:o_uc + n], x[:, o_ud:o_ud + n]
    u = uc - ud
    v = uc / model.mu_c - model.mu_d * ud
    f = x[:, o_f:o_f + m].copy()
    r = v - scenario.delta
    np.add.at(r.T, model.heads, f.T)
    np.subtract.at(r.T, model.tails, f.T)
    theta = np.zeros((T, n))
    if nth:
        theta[:] = x[:, o_th:o_th + n]
    else:
        for e, child in zip(model.tree_edge, model.tree_child):
            h, tl = model.heads[e], model.tails[e]
            if child == h:
                theta[:, h] = theta[:, tl] + f[:, e] / model.B[e]
            else:
                theta[:, tl] = theta[:, h] - f[:, e] / model.B[e]
    s = np.zeros((T + 1, n))
    s[0] = s0
    for t in range(T):
        s[t + 1] = model.lam * s[t] + u[t]
    stage = np.array([sum(float(b.cost(r[t, i], scenario.price[t, i])) for i, b in enumerate(buses))
                      for t in range(T)])
    return RunResult("offline", s, u, r, theta, f, v, stage)

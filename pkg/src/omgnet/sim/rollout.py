"""Policy rollouts over a scenario."""
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..convex import _simplex
from ..errors import ContractError, FeasibilityError, LPError
from ..omg import (
    POLICY_GREEDY,
    POLICY_NONE,
    POLICY_OMG,
    StepModel,
    omg_coefficients,
    step_kernel,
)
from ..params import validate_params

__all__ = ["RunResult", "simulate", "POLICIES", "FEASIBILITY_TOL"]

POLICIES = {"omg": POLICY_OMG, "greedy": POLICY_GREEDY, "no_storage": POLICY_NONE}
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RunResult:
    """Trajectory and cost of one policy on one scenario.

    ``s`` has ``T + 1`` rows (initial level first); the other per-bus arrays
    have ``T`` rows and ``f`` has one column per edge.
    """

    policy: str
    s: np.ndarray
    u: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    f: np.ndarray
    grid_power: np.ndarray
    stage_cost: np.ndarray

    @property
    def T(self):
        return self.stage_cost.size

    @property
    def total_cost(self):
        return float(self.stage_cost.sum())

    @property
    def avg_cost(self):
        return self.total_cost / self.T


@njit(cache=True)
def _rollout(n, m, tails, heads, B, F, ref, forest, tree_edge, tree_child,
             umin, umax, mu_c, mu_d, lam, smin, smax,
             kptr, slopes0, priced, bps, offset,
             policy, gamma, w, d_lo, d_hi, tie_break, feas_tol,
             delta, price, s_out, u_out, v_out, r_out, th_out, f_out, cost_out):
    """Returns ``(status, t, bus)``; status 0 ok, 1 LP failure, 2 level breach."""
    T = delta.shape[0]
    coef = np.zeros(n)
    fix = np.zeros(n, dtype=np.int64)
    for t in range(T):
        s = s_out[t]
        if policy == POLICY_OMG:
            omg_coefficients(s, lam, gamma, w, d_lo, d_hi, coef, fix, tie_break)
        status, obj, stage = step_kernel(
            n, m, tails, heads, B, F, ref, forest, tree_edge, tree_child,
            umin, umax, mu_c, mu_d, lam, smin, smax, kptr, slopes0, priced, bps, offset,
            s, delta[t], price[t], coef, fix, policy, 1e-9, 1e-8,
            u_out[t], v_out[t], r_out[t], th_out[t], f_out[t])
        if status != _simplex.OPTIMAL:
            return 1, t, -1
        cost_out[t] = stage
        for i in range(n):
            nxt = lam[i] * s[i] + u_out[t, i]
            s_out[t + 1, i] = nxt
            if policy != POLICY_NONE and (nxt < smin[i] - feas_tol or nxt > smax[i] + feas_tol):
                return 2, t + 1, i
    return 0, T, -1


def simulate(grid, buses, params, scenario, policy="omg", tie_break=True, model=None,
             s_init=None, check_params=True):
    """Roll ``policy`` forward over ``scenario``.

    ``policy`` is one of ``"omg"``, ``"greedy"`` or ``"no_storage"``. Storage
    evolves exactly as ``s(t+1) = lam s(t) + u(t)``; under ``"omg"`` a level
    leaving its bounds (beyond 1e-9) raises :class:`FeasibilityError`.
    """
    if policy not in POLICIES:
        raise ContractError(f"unknown policy {policy!r}; choose from {sorted(POLICIES)}")
    model = model or StepModel(grid, buses)
    scenario.check_against(grid, buses)
    n, m, T = grid.n, grid.m, scenario.T
    code = POLICIES[policy]
    if code == POLICY_OMG:
        if params is None or len(params) != n:
            raise ContractError("the modified-greedy policy needs one AlgorithmParams per bus")
        if check_params:
            for bus, prm in zip(buses, params):
                validate_params(prm, bus.storage, bus.subgradient_bounds())
        gamma = np.array([p.gamma for p in params], dtype=float)
        w = np.array([p.w for p in params], dtype=float)
    else:
        gamma = np.zeros(n)
        w = np.ones(n)
    s = np.zeros((T + 1, n))
    s[0] = [b.initial_level for b in buses] if s_init is None else s_init
    if np.any(s[0] < model.smin) or np.any(s[0] > model.smax):
        raise ContractError("initial storage level outside its bounds")
    u, v, r, th = (np.zeros((T, n)) for _ in range(4))
    f = np.zeros((T, m))
    cost = np.zeros(T)
    status, t, bus = _rollout(*model.kernel_args(), code, gamma, w, model.d_lo, model.d_hi,
                              tie_break, FEASIBILITY_TOL, scenario.delta, scenario.price,
                              s, u, v, r, th, f, cost)
    if status == 1:
        raise LPError(f"step program failed at period {t}")
    if status == 2:
        level = float(s[t, bus])
        raise FeasibilityError(
            f"{policy}: storage level {level} at bus {bus} left "
            f"[{model.smin[bus]}, {model.smax[bus]}] at period {t}", t=t, bus=bus, level=level)
    return RunResult(policy, s, u, r, th, f, v, cost)

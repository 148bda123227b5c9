"""Two-variable convex quadratic programs with one range constraint."""
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

__all__ = ["BoxQP2", "solve_box_qp2", "edge_qp"]


@dataclass(frozen=True, eq=False)
class BoxQP2:
    """``min 0.5 x'Qx + q'x`` subject to ``lo <= g'x <= hi``.

    ``Q`` must be symmetric positive semidefinite.
    """

    Q: np.ndarray
    q: np.ndarray
    g: np.ndarray
    lo: float = -np.inf
    hi: float = np.inf

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.shape != (2, 2):
            raise ContractError(f"Q must be 2x2, got {Q.shape}")
        if not np.allclose(Q, Q.T):
            raise ContractError("Q must be symmetric")
        if np.linalg.eigvalsh(Q)[0] < -1e-12 * max(1.0, np.abs(Q).max()):
            raise ContractError("Q must be positive semidefinite")
        if self.lo > self.hi:
            raise ContractError(f"empty range [{self.lo}, {self.hi}]")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(2))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float).reshape(2))

    def objective(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.q


def solve_box_qp2(qp):
    """Exact minimiser of a :class:`BoxQP2`.

    Solve the unconstrained stationarity system first; if ``g'x`` leaves the
    range, fix it at the violated bound and solve the equality-constrained
    KKT system. Singular systems use the minimum-norm (least-squares) solution.
    """
    x = np.linalg.lstsq(qp.Q, -qp.q, rcond=None)[0]
    gx = qp.g @ x
    if qp.lo <= gx <= qp.hi:
        return x
    bound = qp.lo if gx < qp.lo else qp.hi
    kkt = np.zeros((3, 3))
    kkt[:2, :2] = qp.Q
    kkt[:2, 2] = qp.g
    kkt[2, :2] = qp.g
    rhs = np.array([-qp.q[0], -qp.q[1], bound])
    return np.linalg.lstsq(kkt, rhs, rcond=None)[0][:2]


def edge_qp(susceptance, flow_limit, theta_target, flow_targets):
    """Edge subproblem as a :class:`BoxQP2` in ``(theta_hat_head, theta_hat_tail)``.

    Minimises ``0.5 |theta_hat - theta_target|^2 + 0.5 sum_i (b_i - f)^2``
    with ``f = B (theta_hat_head - theta_hat_tail)`` and ``|f| <= F``
    (the penalty weight ``rho`` is factored out).
    """
    B = float(susceptance)
    g = np.array([1.0, -1.0])
    t = np.asarray(theta_target, dtype=float)
    b = np.asarray(flow_targets, dtype=float)
    Q = np.eye(2) + b.size * B * B * np.outer(g, g)
    q = -t - B * b.sum() * g
    lim = float(flow_limit) / B
    return BoxQP2(Q, q, g, -lim, lim)

"""Linear programs with piecewise-linear epigraph terms."""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..errors import LPError, LPInfeasible, LPUnbounded
from . import _simplex

__all__ = ["EpigraphLP", "LPResult", "solve_lp", "TOL_FEAS", "TOL_OPT"]

TOL_FEAS = 1e-9
TOL_OPT = 1e-8


def _matrix(a, ncols):
    if a is None:
        return np.zeros((0, ncols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, ncols))
    return a


@dataclass
class EpigraphLP:
    """``min c @ x`` subject to equality rows, ``<=`` rows and box bounds.

    ``add_pwl_epigraph`` appends a variable ``t`` together with one ``<=``
    row per affine piece so that ``t >= max_k (a_k * y + c_k)`` for a linear
    expression ``y`` of the existing variables.
    """

    c: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None
    c2: np.ndarray = None
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).copy()
        n = self.c.size
        self.A_eq = _matrix(self.A_eq, n)
        self.A_ub = _matrix(self.A_ub, n)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).ravel()
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        if self.c2 is not None:
            self.c2 = np.asarray(self.c2, dtype=float).copy()
        shapes_ok = (
            self.A_eq.shape == (self.b_eq.size, n)
            and self.A_ub.shape == (self.b_ub.size, n)
            and self.lb.shape == (n,)
            and self.ub.shape == (n,)
            and (self.c2 is None or self.c2.shape == (n,))
        )
        if not shapes_ok:
            raise LPError("inconsistent LP dimensions")
        if np.any(self.lb > self.ub):
            raise LPInfeasible("empty variable box", residual=float(np.max(self.lb - self.ub)))

    @property
    def n_vars(self):
        return self.c.size

    def add_var(self, cost=0.0, lb=-np.inf, ub=np.inf, name=None):
        n = self.n_vars
        self.c = np.append(self.c, cost)
        self.lb = np.append(self.lb, lb)
        self.ub = np.append(self.ub, ub)
        if self.c2 is not None:
            self.c2 = np.append(self.c2, 0.0)
        self.A_eq = np.hstack([self.A_eq, np.zeros((self.A_eq.shape[0], 1))])
        self.A_ub = np.hstack([self.A_ub, np.zeros((self.A_ub.shape[0], 1))])
        if name is not None:
            self.names.append((n, name))
        return n

    def add_pwl_epigraph(self, coeffs, slopes, intercepts, weight=1.0):
        """Add ``weight * max_k(slopes[k] * (coeffs @ x) + intercepts[k])``."""
        coeffs = np.asarray(coeffs, dtype=float)
        t = self.add_var(cost=weight)
        rows = np.zeros((len(slopes), self.n_vars))
        for k, (a, c0) in enumerate(zip(slopes, intercepts)):
            rows[k, : coeffs.size] = a * coeffs
            rows[k, t] = -1.0
        self.A_ub = np.vstack([self.A_ub, rows])
        self.b_ub = np.concatenate([self.b_ub, -np.asarray(intercepts, dtype=float)])
        return t


class LPResult(NamedTuple):
    x: np.ndarray
    objective: float
    status: str


def _standard_form(lp):
    n = lp.n_vars
    me, mu = lp.A_eq.shape[0], lp.A_ub.shape[0]
    A = np.zeros((me + mu, n + mu))
    A[:me, :n] = lp.A_eq
    A[me:, :n] = lp.A_ub
    A[me:, n:] = np.eye(mu)
    b = np.concatenate([lp.b_eq, lp.b_ub])
    c = np.concatenate([lp.c, np.zeros(mu)])
    lb = np.concatenate([lp.lb, np.zeros(mu)])
    ub = np.concatenate([lp.ub, np.full(mu, np.inf)])
    c2 = np.zeros(n + mu) if lp.c2 is None else np.concatenate([lp.c2, np.zeros(mu)])
    slack_col = np.concatenate([-np.ones(me, dtype=np.int64), n + np.arange(mu, dtype=np.int64)])
    return A, b, c, lb, ub, c2, slack_col


def _solve_simplex(lp, tol_feas, tol_opt):
    A, b, c, lb, ub, c2, slack_col = _standard_form(lp)
    x = np.zeros(A.shape[1])
    ray = np.zeros(2)
    status = _simplex.simplex_solve(
        np.ascontiguousarray(A), b, c, lb, ub, c2, lp.c2 is not None, slack_col,
        tol_feas, tol_opt, x, ray,
    )
    if status == _simplex.INFEASIBLE:
        raise LPInfeasible("LP is infeasible", residual=float(ray[1]))
    if status == _simplex.UNBOUNDED:
        raise LPUnbounded("LP is unbounded", ray=(int(ray[0]), float(ray[1])))
    if status != _simplex.OPTIMAL:
        raise LPError("simplex iteration limit reached")
    return x[: lp.n_vars]


def _solve_highs(lp, tol_feas):
    from scipy.optimize import linprog
    from scipy import sparse

    kwargs = {}
    if lp.A_eq.shape[0]:
        kwargs.update(A_eq=sparse.csr_matrix(lp.A_eq), b_eq=lp.b_eq)
    if lp.A_ub.shape[0]:
        kwargs.update(A_ub=sparse.csr_matrix(lp.A_ub), b_ub=lp.b_ub)
    bounds = np.column_stack([lp.lb, lp.ub])
    res = linprog(lp.c, bounds=bounds, method="highs", **kwargs)
    if res.status == 2:
        raise LPInfeasible(f"LP is infeasible ({res.message})")
    if res.status == 3:
        raise LPUnbounded(f"LP is unbounded ({res.message})")
    if res.status != 0:
        raise LPError(res.message)
    return res.x


def solve_lp(lp, tol_feas=TOL_FEAS, tol_opt=TOL_OPT, method="simplex"):
    """Solve an :class:`EpigraphLP`.

    ``method="simplex"`` uses the built-in dense simplex (deterministic,
    supports the secondary objective ``lp.c2``); ``method="highs"`` hands the
    problem to SciPy's HiGHS for large sparse instances and ignores ``c2``.

    Raises
    ------
    LPInfeasible, LPUnbounded
        With a residual certificate or an improving ray respectively.
    """
    if method == "simplex":
        x = _solve_simplex(lp, tol_feas, tol_opt)
    elif method == "highs":
        x = _solve_highs(lp, tol_feas)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    return LPResult(x, float(lp.c @ x), "optimal")

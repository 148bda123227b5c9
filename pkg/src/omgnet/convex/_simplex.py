"""Dense bounded-variable primal simplex (Bland's rule), compiled with numba.

Problem form::

    minimise    c @ x
    subject to  A @ x == b,   lb <= x <= ub      (bounds may be infinite)

An optional secondary cost ``c2`` is minimised over the optimal face of the
primary problem (lexicographic optimisation): nonbasic columns with nonzero
primary reduced cost are frozen at their current bound before the secondary
phase starts.

``slack_col[i]`` names a column that is the unit vector ``e_i`` with bounds
``[0, inf)`` (or ``-1``); such columns seed the starting basis so that only the
remaining rows need artificial variables.
"""
import numpy as np
from numba import njit

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERATION_LIMIT = 3

PIVOT_TOL = 1e-9


@njit(cache=True)
def _reduced_costs(T, basis, cost, d):
    m, ncol = T.shape
    for j in range(ncol):
        d[j] = cost[j]
    for i in range(m):
        cb = cost[basis[i]]
        if cb != 0.0:
            for j in range(ncol):
                d[j] -= cb * T[i, j]


@njit(cache=True)
def _pivot(T, d, r, q):
    m, ncol = T.shape
    piv = T[r, q]
    for j in range(ncol):
        T[r, j] /= piv
    T[r, q] = 1.0
    for i in range(m):
        if i != r:
            f = T[i, q]
            if f != 0.0:
                for j in range(ncol):
                    T[i, j] -= f * T[r, j]
                T[i, q] = 0.0
    f = d[q]
    if f != 0.0:
        for j in range(ncol):
            d[j] -= f * T[r, j]
        d[q] = 0.0


@njit(cache=True)
def _iterate(T, x, lb, ub, basis, pos, cost, d, n_enter, tol_opt, max_iter, ray):
    """Run simplex pivots until optimal. Columns >= n_enter never enter."""
    m, ncol = T.shape
    _reduced_costs(T, basis, cost, d)
    for it in range(max_iter):
        if it % 50 == 49:
            _reduced_costs(T, basis, cost, d)
        q = -1
        direction = 0.0
        for j in range(n_enter):
            if pos[j] >= 0 or lb[j] == ub[j]:
                continue
            if d[j] < -tol_opt and x[j] < ub[j]:
                q = j
                direction = 1.0
                break
            if d[j] > tol_opt and x[j] > lb[j]:
                q = j
                direction = -1.0
                break
        if q < 0:
            return OPTIMAL
        step = ub[q] - lb[q]  # bound flip distance (inf when either bound is)
        leave = -1
        for i in range(m):
            alpha = direction * T[i, q]
            bi = basis[i]
            if alpha > PIVOT_TOL:
                if lb[bi] == -np.inf:
                    continue
                ratio = (x[bi] - lb[bi]) / alpha
            elif alpha < -PIVOT_TOL:
                if ub[bi] == np.inf:
                    continue
                ratio = (ub[bi] - x[bi]) / (-alpha)
            else:
                continue
            if ratio < 0.0:
                ratio = 0.0
            if leave < 0:
                if ratio < step:
                    step = ratio
                    leave = i
            elif ratio < step - 1e-12:
                step = ratio
                leave = i
            elif ratio <= step + 1e-12 and bi < basis[leave]:
                leave = i
        if step == np.inf:
            ray[0] = q
            ray[1] = direction
            return UNBOUNDED
        if leave >= 0 and step >= ub[q] - lb[q] - 1e-12 and q < basis[leave]:
            leave = -1  # Bland tie between flip and pivot: smallest index wins
            step = ub[q] - lb[q]
        for i in range(m):
            x[basis[i]] -= direction * T[i, q] * step
        x[q] += direction * step
        if leave < 0:
            x[q] = ub[q] if direction > 0 else lb[q]
            continue
        bl = basis[leave]
        alpha = direction * T[leave, q]
        x[bl] = lb[bl] if alpha > 0 else ub[bl]
        _pivot(T, d, leave, q)
        pos[bl] = -1
        pos[q] = leave
        basis[leave] = q
    return ITERATION_LIMIT


@njit(cache=True)
def simplex_solve(A, b, c, lb, ub, c2, use_c2, slack_col, tol_feas, tol_opt, x_out, ray):
    """Solve the LP; writes the primal solution into ``x_out``.

    Returns a status code (see module constants). ``ray`` receives the
    entering column and direction when the problem is unbounded.
    """
    m, n = A.shape
    x = np.zeros(n + m)
    lo = np.empty(n + m)
    hi = np.empty(n + m)
    for j in range(n):
        lo[j] = lb[j]
        hi[j] = ub[j]
        if lb[j] > -np.inf:
            x[j] = lb[j]
        elif ub[j] < np.inf:
            x[j] = ub[j]
        else:
            x[j] = 0.0
    res = b.copy()
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += A[i, j] * x[j]
        res[i] = b[i] - s
    ncol = n + m  # one artificial slot per row, unused ones stay fixed at zero
    T = np.zeros((m, ncol))
    basis = np.empty(m, dtype=np.int64)
    pos = -np.ones(ncol, dtype=np.int64)
    binv_col = np.empty(m, dtype=np.int64)
    sign = np.ones(m)
    for i in range(m):
        a = n + i
        sc = slack_col[i]
        if sc >= 0 and res[i] >= 0.0:
            basis[i] = sc
            x[sc] = res[i]
            binv_col[i] = sc
            lo[a] = 0.0
            hi[a] = 0.0
            x[a] = 0.0
        else:
            if res[i] < 0.0:
                sign[i] = -1.0
            basis[i] = a
            x[a] = abs(res[i])
            binv_col[i] = a
            lo[a] = 0.0
            hi[a] = np.inf
        for j in range(n):
            T[i, j] = A[i, j] * sign[i]
        T[i, a] = 1.0
        pos[basis[i]] = i
    # phase one
    d = np.zeros(ncol)
    cost = np.zeros(ncol)
    need_phase1 = False
    for i in range(m):
        if basis[i] >= n:
            cost[basis[i]] = 1.0
            need_phase1 = True
    max_iter = 200 * (m + ncol) + 1000
    if need_phase1:
        st = _iterate(T, x, lo, hi, basis, pos, cost, d, ncol, tol_opt, max_iter, ray)
        if st != OPTIMAL:
            return st
        infeas = 0.0
        bscale = 1.0
        for i in range(m):
            bscale = max(bscale, abs(b[i]))
        for a in range(n, ncol):
            infeas += abs(x[a])
        if infeas > tol_feas * bscale:
            ray[0] = -1
            ray[1] = infeas
            return INFEASIBLE
        # drive basic artificials out where a pivot exists
        for i in range(m):
            if basis[i] >= n:
                best = -1
                bestv = 1e-7
                for j in range(n):
                    if pos[j] < 0 and abs(T[i, j]) > bestv:
                        best = j
                        bestv = abs(T[i, j])
                if best >= 0:
                    a = basis[i]
                    _pivot(T, d, i, best)
                    pos[a] = -1
                    pos[best] = i
                    basis[i] = best
        for a in range(n, ncol):
            lo[a] = 0.0
            hi[a] = 0.0
            x[a] = 0.0
    # phase two
    for j in range(n):
        cost[j] = c[j]
    for a in range(n, ncol):
        cost[a] = 0.0
    st = _iterate(T, x, lo, hi, basis, pos, cost, d, n, tol_opt, max_iter, ray)
    if st != OPTIMAL:
        return st
    if use_c2:
        _reduced_costs(T, basis, cost, d)
        dscale = 1.0
        for j in range(n):
            dscale = max(dscale, abs(c[j]))
        for j in range(n):
            if pos[j] < 0 and abs(d[j]) > tol_opt * dscale:
                lo[j] = x[j]
                hi[j] = x[j]
        for j in range(n):
            cost[j] = c2[j]
        st = _iterate(T, x, lo, hi, basis, pos, cost, d, n, tol_opt, max_iter, ray)
        if st != OPTIMAL:
            return st
    # recompute basic values from the nonbasic ones for accuracy
    rhs = b.copy()
    for i in range(m):
        s = 0.0
        for j in range(n):
            if pos[j] < 0:
                s += A[i, j] * x[j]
        rhs[i] = (b[i] - s) * sign[i]
    for i in range(m):
        s = 0.0
        for k in range(m):
            s += T[i, binv_col[k]] * rhs[k]
        x[basis[i]] = s
    for j in range(n):
        v = x[j]
        if v < lb[j]:
            v = lb[j]
        elif v > ub[j]:
            v = ub[j]
        x_out[j] = v
    return OPTIMAL

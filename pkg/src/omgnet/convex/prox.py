"""Exact node and edge proximal subproblems.

Node problem (one bus with incident edges ``E``)::

    min  coef * u + g(r) + (rho/2) sum_e (fhat_e - center_e)^2
    s.t. delta + r = v + sum_e sign_e * fhat_e,   u in [u_min, u_max]

where ``v`` is the grid-side power of the storage control ``u``. The flow
copies reduce to their signed sum ``y``, which leaves a two-dimensional
problem in ``(v, r)``: a piecewise-linear term in each coordinate plus a
quadratic in ``r - v``. Its optimum set always meets a line on which ``v``
or ``r`` sits at a kink (or ``v`` at a box end), so minimising exactly along
every such line and keeping the best point is exact.
"""
from typing import NamedTuple

import numpy as np
from numba import njit

__all__ = [
    "TIE_MIN_ABS",
    "TIE_LOW",
    "TIE_HIGH",
    "NodeProx",
    "prox_node",
    "prox_edge",
    "grid_power",
]

TIE_MIN_ABS = 0
TIE_LOW = 1
TIE_HIGH = 2

_TIE_RTOL = 1e-12


@njit(cache=True)
def _waste(coef, umin, umax, mu_c, mu_d):
    return coef > 0.0 and mu_c * mu_d < 1.0 and umin < 0.0 < umax


@njit(cache=True)
def _u_of_v(v, coef, umin, umax, mu_c, mu_d):
    """Cheapest storage-side control delivering grid power ``v``.

    With a positive coefficient and lossy conversion, simultaneous charge
    and discharge lowers ``u`` and is used as far as the box allows.
    """
    if umin == umax:
        return umin
    if _waste(coef, umin, umax, mu_c, mu_d):
        vstar = umax / mu_c + mu_d * umin
        if v <= vstar:
            return mu_c * (v - mu_d * umin) + umin
        return umax + (v - umax / mu_c) / mu_d
    if v >= 0.0:
        return mu_c * v
    return v / mu_d


@njit(cache=True)
def grid_power(u, mu_c, mu_d):
    if u >= 0.0:
        return u / mu_c
    return mu_d * u


@njit(cache=True)
def _pwl(x, la, lc):
    best = la[0] * x + lc[0]
    for k in range(1, la.size):
        val = la[k] * x + lc[k]
        if val > best:
            best = val
    return best


@njit(cache=True)
def _better(val, u, best, best_u, mode):
    if best == np.inf:
        return True
    tol = _TIE_RTOL * max(1.0, abs(best))
    if val < best - tol:
        return True
    if val > best + tol:
        return False
    if mode == TIE_LOW:
        return u < best_u
    if mode == TIE_HIGH:
        return u > best_u
    return abs(u) < abs(best_u)


@njit(cache=True)
def prox_node_kernel(coef, umin, umax, mu_c, mu_d, la, lc, bps, delta,
                     sign, center, rho, mode, fhat_out):
    """Solve the node problem; returns ``(u, v, r, q, total)``.

    ``q = coef*u + g(r)`` is the node's share of the step objective and
    ``total`` adds the proximal penalty. ``fhat_out`` receives the flow copies.
    """
    d = sign.size
    vlo = grid_power(umin, mu_c, mu_d)
    vhi = grid_power(umax, mu_c, mu_d)
    # kinks of the storage term in v (a fixed control leaves a single point)
    kv = np.empty(4)
    nk = 0
    kv[nk] = vlo
    nk += 1
    if vhi > vlo:
        kv[nk] = vhi
        nk += 1
    if vlo < 0.0 < vhi:
        kv[nk] = 0.0
        nk += 1
    if _waste(coef, umin, umax, mu_c, mu_d):
        vs = umax / mu_c + mu_d * umin
        if vlo < vs < vhi:
            kv[nk] = vs
            nk += 1
    best = np.inf
    best_u = 0.0
    best_v = 0.0
    best_r = 0.0
    best_q = 0.0
    if d == 0:
        nc = nk + bps.size
        for j in range(nc):
            if j < nk:
                v = kv[j]
            else:
                v = min(max(bps[j - nk] + delta, vlo), vhi)
            u = _u_of_v(v, coef, umin, umax, mu_c, mu_d)
            r = v - delta
            q = coef * u + _pwl(r, la, lc)
            if _better(q, u, best, best_u, mode):
                best, best_u, best_v, best_r, best_q = q, u, v, r, q
        return best_u, best_v, best_r, best_q, best
    m = -delta
    for e in range(d):
        m += sign[e] * center[e]
    w = rho / d
    nl = la.size
    # lines with v fixed at a kink: minimise g(r) + (w/2)(r - v - m)^2
    for j in range(nk):
        v = kv[j]
        u = _u_of_v(v, coef, umin, umax, mu_c, mu_d)
        z = v + m
        for k in range(2 * nl - 1):
            if k < nl:
                r = z - la[k] / w
                if k > 0 and r < bps[k - 1]:
                    r = bps[k - 1]
                if k < nl - 1 and r > bps[k]:
                    r = bps[k]
            else:
                r = bps[k - nl]
            q = coef * u + _pwl(r, la, lc)
            diff = r - v - m
            val = q + 0.5 * w * diff * diff
            if _better(val, u, best, best_u, mode):
                best, best_u, best_v, best_r, best_q = val, u, v, r, q
    # lines with r fixed at a kink of g: minimise kappa(v) + (w/2)(v - (r - m))^2
    for k in range(bps.size):
        r = bps[k]
        gr = _pwl(r, la, lc)
        z = r - m
        for j in range(nk + 2):
            if j < nk:
                v = kv[j]
            else:
                # stationary point of each linear piece, clipped to the box
                slope = coef * mu_c if j == nk else coef / mu_d
                v = min(max(z - slope / w, vlo), vhi)
            u = _u_of_v(v, coef, umin, umax, mu_c, mu_d)
            q = coef * u + gr
            diff = r - v - m
            val = q + 0.5 * w * diff * diff
            if _better(val, u, best, best_u, mode):
                best, best_u, best_v, best_r, best_q = val, u, v, r, q
    y = best_r + delta - best_v
    ac = m + delta
    for e in range(d):
        fhat_out[e] = center[e] + sign[e] * (y - ac) / d
    return best_u, best_v, best_r, best_q, best


class NodeProx(NamedTuple):
    u: float
    grid_power: float
    r: float
    f_hat: np.ndarray
    value: float
    total: float


def prox_node(cost_lines, breakpoints, coef, storage_box, delta, signs, centers, rho,
              tie_break=TIE_MIN_ABS):
    """Exact solution of the node subproblem.

    Parameters
    ----------
    cost_lines : (slopes, intercepts)
        Max-affine form of ``g(.; p)`` at the current price.
    breakpoints : array_like
        Kinks of ``g`` (``len(slopes) - 1`` entries, increasing).
    coef : float
        Linear coefficient on the storage-side control ``u``.
    storage_box : (u_min, u_max, mu_c, mu_d)
        Box on ``u``; equal ends fix the control.
    signs, centers : array_like
        Incidence sign and penalty centre for every incident edge.
    tie_break : int
        ``TIE_MIN_ABS``, ``TIE_LOW`` or ``TIE_HIGH``.
    """
    la = np.ascontiguousarray(cost_lines[0], dtype=float)
    lc = np.ascontiguousarray(cost_lines[1], dtype=float)
    bps = np.ascontiguousarray(breakpoints, dtype=float)
    sign = np.ascontiguousarray(signs, dtype=float)
    center = np.ascontiguousarray(centers, dtype=float)
    umin, umax, mu_c, mu_d = (float(x) for x in storage_box)
    fhat = np.zeros(sign.size)
    u, v, r, q, total = prox_node_kernel(float(coef), umin, umax, mu_c, mu_d, la, lc, bps,
                                      float(delta), sign, center, float(rho), int(tie_break), fhat)
    return NodeProx(u, v, r, fhat, q, total)


@njit(cache=True)
def prox_edge(B, F, t_head, t_tail, b_head, b_tail):
    """Closed-form edge subproblem; returns ``(theta_hat_head, theta_hat_tail, f)``.

    Minimises ``0.5 |theta_hat - t|^2 + 0.5 sum_i (b_i - f)^2`` with
    ``f = B (theta_hat_head - theta_hat_tail)`` and ``|f| <= F``.
    """
    s = t_head + t_tail
    diff = (t_head - t_tail + 2.0 * B * (b_head + b_tail)) / (1.0 + 4.0 * B * B)
    lim = F / B
    if diff > lim:
        diff = lim
    elif diff < -lim:
        diff = -lim
    return 0.5 * (s + diff), 0.5 * (s - diff), B * diff

"""Offline phase: admissible (shift, weight) pairs and the sub-optimality bound.

For a bus with storage ``sp`` and subgradient bounds ``(d_lo, d_hi)`` the
algorithm may use any weight ``0 < W <= W_max`` and any shift ``Gamma`` in
``[ks_min(W), ks_max(W)]``. The resulting controller is within
``M(Gamma) / W`` of the optimal average cost.
"""
from dataclasses import dataclass
import math
from typing import NamedTuple
import warnings

import numpy as np

from .devices import validate_storage
from .errors import CertificateError, ParameterError

__all__ = [
    "AlgorithmParams",
    "DegenerateCostWarning",
    "w_max",
    "gamma_bounds",
    "suboptimality_M",
    "suboptimality_terms",
    "select_max_w",
    "select_min_s",
    "validate_params",
    "psd_certificates",
    "CertificateReport",
    "W_CAP",
]

W_CAP = 1e12


class DegenerateCostWarning(UserWarning):
    """The cost has a single subgradient, so any finite weight is admissible."""


@dataclass(frozen=True)
class AlgorithmParams:
    gamma: float
    w: float
    bound: float
    strategy: str = "explicit"

    def __post_init__(self):
        for name in ("gamma", "w", "bound"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (math.isfinite(self.w) and self.w > 0):
            raise ParameterError(f"weight must be positive and finite, got {self.w}")
        if not math.isfinite(self.gamma):
            raise ParameterError(f"shift must be finite, got {self.gamma}")


def _require_frequent_acting(sp):
    if not validate_storage(sp).frequent_acting:
        raise ParameterError(
            f"frequent-acting condition fails: u_max - u_min = {sp.u_max - sp.u_min} "
            f">= s_max - s_min = {sp.s_max - sp.s_min}"
        )


def w_max(sp, sg, cap=W_CAP):
    """Largest admissible weight.

    Returns ``cap`` (with a :class:`DegenerateCostWarning`) when
    ``d_hi == d_lo``, where the exact bound is infinite.
    """
    _require_frequent_acting(sp)
    spread = sg.d_hi - sg.d_lo
    slack = (sp.s_max - sp.s_min) - (sp.u_max - sp.u_min)
    if spread <= 0.0:
        warnings.warn("degenerate cost: subgradient bounds coincide, weight capped",
                      DegenerateCostWarning, stacklevel=2)
        return float(cap)
    return float(min(slack / spread, cap))


def gamma_bounds(sp, sg, w):
    """Interval ``(ks_min, ks_max)`` of admissible shifts for weight ``w``."""
    wm = w_max(sp, sg)
    if not 0.0 < w <= wm * (1.0 + 1e-12):
        raise ParameterError(f"weight {w} outside (0, {wm}]")
    lam = sp.lam
    ks_min = (-w * sg.d_lo + sp.u_max - sp.s_max) / lam
    ks_max = (-w * sg.d_hi - sp.s_min + sp.u_min) / lam
    return float(ks_min), float(ks_max)


def suboptimality_terms(sp, gamma):
    """``(M_u, M_s)`` for shift ``gamma``."""
    k = 1.0 - sp.lam
    m_u = 0.5 * max((sp.u_min + k * gamma) ** 2, (sp.u_max + k * gamma) ** 2)
    m_s = max((sp.s_min + gamma) ** 2, (sp.s_max + gamma) ** 2)
    return m_u, m_s


def suboptimality_M(sp, gamma):
    m_u, m_s = suboptimality_terms(sp, gamma)
    return m_u + sp.lam * (1.0 - sp.lam) * m_s


def validate_params(params, sp, sg, rtol=1e-9):
    """Raise :class:`ParameterError` unless ``params`` is admissible for the bus."""
    wm = w_max(sp, sg)
    if params.w > wm * (1.0 + rtol):
        raise ParameterError(f"weight {params.w} exceeds the maximum admissible weight {wm}")
    lo, hi = gamma_bounds(sp, sg, min(params.w, wm))
    slack = rtol * max(1.0, abs(lo), abs(hi))
    if not lo - slack <= params.gamma <= hi + slack:
        raise ParameterError(f"shift {params.gamma} outside [{lo}, {hi}] for weight {params.w}")


def select_max_w(sp, sg):
    """Maximum-weight choice: ``W = W_max``, where the shift interval is a point."""
    w = w_max(sp, sg)
    lo, hi = gamma_bounds(sp, sg, w)
    gamma = lo if lo == hi else 0.5 * (lo + hi)
    return AlgorithmParams(gamma, w, suboptimality_M(sp, gamma) / w, "maxW")


def _min_M_on(sp, lo, hi):
    """Exact minimiser of the convex piecewise quadratic ``M`` on ``[lo, hi]``."""
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    lam = sp.lam
    k = 1.0 - lam
    cands = [lo, hi, -0.5 * (sp.s_min + sp.s_max)]
    if k > 0.0:
        cands.append(-0.5 * (sp.u_min + sp.u_max) / k)
        for a in (sp.u_min, sp.u_max):
            for b in (sp.s_min, sp.s_max):
                cands.append(-(a + 2.0 * lam * b) / (k + 2.0 * lam))
    best_g, best_m = None, math.inf
    for g in sorted(min(max(c, lo), hi) for c in cands):
        m = suboptimality_M(sp, g)
        if m < best_m:
            best_g, best_m = g, m
    return best_g, best_m


def _golden(fun, a, b, iters=200, xtol=1e-13):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if b - a <= xtol * max(1.0, abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def select_min_s(sp, sg, tol=1e-9, grid_points=201):
    """Choose ``(Gamma, W)`` minimising ``M(Gamma) / W`` over the admissible set.

    For fixed ``W`` the inner problem in ``Gamma`` is solved exactly by
    candidate enumeration; the outer ratio is quasiconvex in ``W`` and is
    minimised by a log-spaced scan followed by golden-section refinement.
    """
    if not tol > 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    wm = w_max(sp, sg)

    def ratio(w):
        lo, hi = gamma_bounds(sp, sg, min(w, wm))
        return _min_M_on(sp, lo, hi)[1] / w

    ws = wm * np.logspace(-6.0, 0.0, grid_points)
    ws[-1] = wm
    vals = np.array([ratio(w) for w in ws])
    j = int(np.argmin(vals))
    a = ws[max(j - 1, 0)]
    b = ws[min(j + 1, len(ws) - 1)]
    w_best, f_best = ws[j], vals[j]
    if b > a:
        w_gs, f_gs = _golden(ratio, a, b, xtol=min(tol, 1e-13))
        if f_gs <= f_best:
            w_best, f_best = w_gs, f_gs
    lo, hi = gamma_bounds(sp, sg, w_best)
    gamma, m = _min_M_on(sp, lo, hi)
    return AlgorithmParams(float(gamma), float(w_best), m / w_best, "minS")


class CertificateReport(NamedTuple):
    matrices: dict
    margin: dict

    @property
    def ok(self):
        return all(v >= -1e-9 for v in self.margin.values())

    def failures(self):
        return [k for k, v in self.margin.items() if v < -1e-9]


def psd_certificates(params, sp, sg=None, n_u=None, n_s=None, check=True):
    """Build the four 2x2 certificate matrices and test them for PSD-ness.

    The auxiliary entries default to their optimal values ``M_u / W`` and
    ``M_s / W``. Each matrix ``[[N, a], [a, c W]]`` is PSD iff its diagonal
    is non-negative and ``c W N >= a**2``; ``margin`` stores the smallest of
    ``N``, ``c W`` and the determinant.
    """
    if not params.w > 0:
        raise ParameterError("certificates need a positive weight")
    w, g, lam = params.w, params.gamma, sp.lam
    m_u, m_s = suboptimality_terms(sp, g)
    n_u = m_u / w if n_u is None else n_u
    n_s = m_s / w if n_s is None else n_s
    off = {
        "min,u": (n_u, sp.u_min + (1.0 - lam) * g, 2.0 * w),
        "max,u": (n_u, sp.u_max + (1.0 - lam) * g, 2.0 * w),
        "min,s": (n_s, sp.s_min + g, w),
        "max,s": (n_s, sp.s_max + g, w),
    }
    mats, worst = {}, {}
    for name, (nn, a, cw) in off.items():
        mats[name] = np.array([[nn, a], [a, cw]])
        det = nn * cw - a * a
        # relative slack for the determinant, absolute for the diagonal
        scale = max(1.0, a * a)
        worst[name] = min(nn, cw, det / scale)
    report = CertificateReport(mats, worst)
    if check and not report.ok:
        raise CertificateError(f"PSD certificate(s) failed: {report.failures()}")
    return report

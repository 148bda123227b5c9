"""Per-bus device models: storage, piecewise-linear cost, price schedule."""
from dataclasses import dataclass, field
import math
from typing import NamedTuple

import numpy as np

from .errors import ContractError, ModelError

__all__ = [
    "StorageParams",
    "StorageReport",
    "CostModel",
    "DisturbanceSupport",
    "SubgradBounds",
    "PriceSchedule",
    "BusSpec",
    "validate_storage",
    "step_storage",
    "eval_cost",
    "subgradient_bounds",
]


@dataclass(frozen=True)
class StorageParams:
    """Storage bounds and efficiencies.

    ``u`` is the storage-side control: positive charges, negative discharges.
    ``mu_c``/``mu_d`` convert it to grid-side power (``u / mu_c`` while
    charging, ``mu_d * u`` while discharging).
    """

    s_min: float
    s_max: float
    u_min: float
    u_max: float
    lam: float = 1.0
    mu_c: float = 1.0
    mu_d: float = 1.0

    def __post_init__(self):
        vals = (self.s_min, self.s_max, self.u_min, self.u_max, self.lam, self.mu_c, self.mu_d)
        if not all(math.isfinite(v) for v in vals):
            raise ModelError(f"storage parameters must be finite: {self}")
        if self.s_min > self.s_max:
            raise ModelError(f"s_min={self.s_min} exceeds s_max={self.s_max}")
        if not self.u_min <= 0.0 <= self.u_max:
            raise ModelError(f"need u_min <= 0 <= u_max, got [{self.u_min}, {self.u_max}]")
        if not 0.0 < self.lam <= 1.0:
            raise ModelError(f"efficiency lam must lie in (0, 1], got {self.lam}")
        for name in ("mu_c", "mu_d"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ModelError(f"{name} must lie in (0, 1], got {getattr(self, name)}")

    @property
    def lossless_conversion(self):
        return self.mu_c == 1.0 and self.mu_d == 1.0

    def grid_power(self, u):
        """Grid-side power drawn by a storage-side control ``u``."""
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0.0, u / self.mu_c, self.mu_d * u)


class StorageReport(NamedTuple):
    feasible_low: bool      # lam*s_min + u_max >= s_min
    feasible_high: bool     # lam*s_max + u_min <= s_max
    controllable_high: bool  # lam*s_max + u_max >= s_max
    controllable_low: bool  # lam*s_min + u_min <= s_min
    frequent_acting: bool   # u_max - u_min < s_max - s_min

    @property
    def ok(self):
        return all(self)

    def failures(self):
        return [name for name, passed in zip(self._fields, self) if not passed]


def validate_storage(sp):
    """Check the feasibility, controllability and frequent-acting conditions."""
    lam = sp.lam
    return StorageReport(
        feasible_low=lam * sp.s_min + sp.u_max >= sp.s_min,
        feasible_high=lam * sp.s_max + sp.u_min <= sp.s_max,
        controllable_high=lam * sp.s_max + sp.u_max >= sp.s_max,
        controllable_low=lam * sp.s_min + sp.u_min <= sp.s_min,
        frequent_acting=sp.u_max - sp.u_min < sp.s_max - sp.s_min,
    )


def step_storage(sp, s, u):
    """Advance one period, ``lam * s + u``. No clamping."""
    if not sp.u_min <= u <= sp.u_max:
        raise ContractError(f"control {u} outside [{sp.u_min}, {sp.u_max}]")
    return sp.lam * s + u


@dataclass(frozen=True)
class DisturbanceSupport:
    delta_min: float = -math.inf
    delta_max: float = math.inf

    def __post_init__(self):
        if self.delta_min > self.delta_max:
            raise ModelError(f"empty disturbance support [{self.delta_min}, {self.delta_max}]")

    @property
    def bounded(self):
        return math.isfinite(self.delta_min) and math.isfinite(self.delta_max)


class SubgradBounds(NamedTuple):
    d_lo: float
    d_hi: float


@dataclass(frozen=True)
class CostModel:
    """Convex piecewise-linear cost ``g(r; p)`` of the residual ``r``.

    ``slopes[k]`` applies on ``[breakpoints[k-1], breakpoints[k]]``; the first
    and last pieces extend to infinity. Pieces flagged in ``priced`` have
    their slope multiplied by the price ``p``. The function is anchored at
    ``g(0) = offset``.
    """

    slopes: tuple
    breakpoints: tuple = ()
    priced: tuple = None
    price_support: tuple = (1.0, 1.0)
    offset: float = 0.0
    _lines: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        slopes = tuple(float(a) for a in self.slopes)
        bps = tuple(float(b) for b in self.breakpoints)
        if not slopes:
            raise ModelError("cost needs at least one piece")
        if len(bps) != len(slopes) - 1:
            raise ModelError(f"{len(slopes)} pieces need {len(slopes) - 1} breakpoints, got {len(bps)}")
        if not all(math.isfinite(a) for a in slopes) or not all(math.isfinite(b) for b in bps):
            raise ModelError("cost slopes and breakpoints must be finite")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ModelError("breakpoints must be strictly increasing")
        priced = self.priced
        if priced is not None:
            priced = tuple(bool(x) for x in priced)
            if len(priced) != len(slopes):
                raise ModelError("priced flags must match the number of pieces")
        lo, hi = (float(x) for x in self.price_support)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise ModelError(f"bad price support {self.price_support}")
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "priced", priced)
        object.__setattr__(self, "price_support", (lo, hi))
        object.__setattr__(self, "offset", float(self.offset))
        for p in (lo, hi):
            a = self.slopes_at(p)
            if np.any(np.diff(a) < 0):
                raise ModelError(f"cost is not convex at price {p}: slopes {tuple(a)}")

    @classmethod
    def shortfall(cls, price_support=(1.0, 1.0)):
        """``g(r; p) = p * max(-r, 0)``: pay ``p`` per unit of unserved demand."""
        return cls(slopes=(-1.0, 0.0), breakpoints=(0.0,), priced=(True, False),
                   price_support=price_support)

    @classmethod
    def zero(cls):
        return cls(slopes=(0.0,))

    @property
    def n_pieces(self):
        return len(self.slopes)

    def slopes_at(self, p):
        a = np.array(self.slopes)
        if self.priced is not None:
            a = np.where(self.priced, p * a, a)
        return a

    def lines(self, p):
        """Max-affine form: ``g(r; p) = max_k slope[k] * r + intercept[k]``."""
        key = float(p)
        cached = self._lines.get(key)
        if cached is not None:
            return cached
        a = self.slopes_at(p)
        bps = self.breakpoints
        c = np.empty_like(a)
        k0 = int(np.searchsorted(bps, 0.0, side="right"))
        c[k0] = self.offset
        for k in range(k0 + 1, len(a)):
            c[k] = c[k - 1] + (a[k - 1] - a[k]) * bps[k - 1]
        for k in range(k0 - 1, -1, -1):
            c[k] = c[k + 1] + (a[k + 1] - a[k]) * bps[k]
        a.flags.writeable = False
        c.flags.writeable = False
        self._lines[key] = (a, c)
        return a, c

    def __call__(self, r, p=1.0):
        a, c = self.lines(p)
        r = np.asarray(r, dtype=float)
        return np.max(np.multiply.outer(r, a) + c, axis=-1)


def eval_cost(cost, r, p=1.0):
    lo, hi = cost.price_support
    if not lo <= p <= hi:
        raise ContractError(f"price {p} outside support [{lo}, {hi}]")
    return float(cost(r, p))


def subgradient_bounds(cost, mu_c=1.0, mu_d=1.0):
    """Bounds on the partial subgradient of the cost with respect to ``u``.

    The slopes of ``g`` in ``r`` bound it; conversion losses rescale them by
    ``1/mu_c`` (charging) or ``mu_d`` (discharging).
    """
    lo_p, hi_p = cost.price_support
    a_lo = min(cost.slopes_at(lo_p)[0], cost.slopes_at(hi_p)[0])
    a_hi = max(cost.slopes_at(lo_p)[-1], cost.slopes_at(hi_p)[-1])
    if not (math.isfinite(a_lo) and math.isfinite(a_hi)):
        raise ModelError("unbounded cost slope")
    d_lo = min(a_lo * mu_d, a_lo / mu_c)
    d_hi = max(a_hi * mu_d, a_hi / mu_c)
    return SubgradBounds(float(d_lo), float(d_hi))


@dataclass(frozen=True)
class PriceSchedule:
    """Deterministic price path: ``base`` off-peak, ``peak`` during the day.

    Period ``t`` is on-peak when ``peak_start <= t % periods_per_day <= peak_end``.
    """

    base: float = 1.0
    peak: float = None
    periods_per_day: int = 24
    peak_start: int = 7
    peak_end: int = 18

    @classmethod
    def day_night(cls, night=1.0, day=3.0, periods_per_day=24):
        return cls(base=night, peak=day, periods_per_day=periods_per_day)

    @property
    def support(self):
        if self.peak is None:
            return (self.base, self.base)
        return (min(self.base, self.peak), max(self.base, self.peak))

    def prices(self, T, start=0):
        t = np.arange(start, start + T)
        if self.peak is None:
            return np.full(T, float(self.base))
        hour = t % self.periods_per_day
        day = (hour >= self.peak_start) & (hour <= self.peak_end)
        return np.where(day, float(self.peak), float(self.base))


@dataclass(frozen=True)
class BusSpec:
    """Everything attached to one bus."""

    storage: StorageParams
    cost: CostModel = field(default_factory=CostModel.shortfall)
    prices: PriceSchedule = field(default_factory=PriceSchedule)
    disturbance: DisturbanceSupport = field(default_factory=DisturbanceSupport)
    s_init: float = None

    def __post_init__(self):
        lo, hi = self.cost.price_support
        plo, phi = self.prices.support
        if plo < lo or phi > hi:
            raise ModelError(f"price schedule {self.prices.support} leaves cost support {(lo, hi)}")
        if self.s_init is not None and not self.storage.s_min <= self.s_init <= self.storage.s_max:
            raise ModelError(f"initial level {self.s_init} outside storage bounds")

    @property
    def initial_level(self):
        return self.storage.s_min if self.s_init is None else float(self.s_init)

    def subgradient_bounds(self):
        return subgradient_bounds(self.cost, self.storage.mu_c, self.storage.mu_d)

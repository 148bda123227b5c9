"""Disturbance and price paths."""
import csv
from dataclasses import dataclass
import math

import numpy as np

from ..errors import ContractError, ScenarioError

__all__ = [
    "Scenario",
    "sample_laplace_scenario",
    "load_csv_scenario",
    "write_csv_scenario",
    "schedule_prices",
]

SCENARIO_COLUMNS = ("t", "bus", "delta", "price")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Realised net supply and prices, one row per period and one column per bus."""

    delta: np.ndarray
    price: np.ndarray
    seed: int = None

    def __post_init__(self):
        delta = np.ascontiguousarray(self.delta, dtype=float)
        price = np.ascontiguousarray(self.price, dtype=float)
        if delta.ndim != 2 or delta.shape != price.shape:
            raise ScenarioError(f"delta {delta.shape} and price {price.shape} must be equal T x n arrays")
        if not (np.all(np.isfinite(delta)) and np.all(np.isfinite(price))):
            raise ScenarioError("scenario entries must be finite")
        delta.flags.writeable = False
        price.flags.writeable = False
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "price", price)

    @property
    def T(self):
        return self.delta.shape[0]

    @property
    def n(self):
        return self.delta.shape[1]

    def check_against(self, grid, buses=None):
        if self.n != grid.n:
            raise ScenarioError(f"scenario has {self.n} buses, grid has {grid.n}")
        if buses is not None:
            for i, bus in enumerate(buses):
                lo, hi = bus.cost.price_support
                col = self.price[:, i]
                if np.any(col < lo) or np.any(col > hi):
                    raise ScenarioError(f"prices at bus {i} leave the cost's support [{lo}, {hi}]")


def schedule_prices(buses, T, n):
    if buses is None:
        return np.ones((T, n))
    return np.column_stack([b.prices.prices(T) for b in buses]) if n else np.ones((T, 0))


def sample_laplace_scenario(grid, T, sigma, seed, buses=None):
    """I.i.d. zero-mean Laplace net supply with standard deviation ``sigma``.

    Prices follow each bus's schedule (all ones when ``buses`` is omitted).
    The generator is seeded through :class:`numpy.random.SeedSequence`, so
    a given seed always produces the same path.
    """
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ContractError(f"sigma must be positive, got {sigma}")
    if T < 1:
        raise ContractError(f"horizon must be at least 1, got {T}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    delta = rng.laplace(0.0, sigma / math.sqrt(2.0), size=(T, grid.n))
    return Scenario(delta, schedule_prices(buses, T, grid.n), seed)


def write_csv_scenario(scenario, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCENARIO_COLUMNS)
        for t in range(scenario.T):
            for i in range(scenario.n):
                w.writerow((t, i, repr(float(scenario.delta[t, i])), repr(float(scenario.price[t, i]))))


def load_csv_scenario(path, n=None, buses=None):
    """Read ``t,bus,delta,price`` rows.

    An empty price falls back to the bus schedule (or 1.0 without ``buses``).
    Every ``(t, bus)`` pair in ``0..T-1 x 0..n-1`` must appear exactly once.
    """
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header[:3]) != SCENARIO_COLUMNS[:3]:
            raise ScenarioError(f"{path}: expected header {','.join(SCENARIO_COLUMNS)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not x.strip() for x in rec):
                continue
            if len(rec) not in (3, 4):
                raise ScenarioError(f"{path}:{lineno}: expected 3 or 4 fields, got {len(rec)}")
            try:
                t, i = int(rec[0]), int(rec[1])
                delta = float(rec[2])
                price = float(rec[3]) if len(rec) == 4 and rec[3].strip() else None
            except ValueError as exc:
                raise ScenarioError(f"{path}:{lineno}: malformed row ({exc})") from None
            if not math.isfinite(delta) or (price is not None and not math.isfinite(price)):
                raise ScenarioError(f"{path}:{lineno}: non-finite value")
            if t < 0 or i < 0:
                raise ScenarioError(f"{path}:{lineno}: negative index")
            if (t, i) in rows:
                raise ScenarioError(f"{path}:{lineno}: duplicate row for t={t}, bus={i}")
            rows[(t, i)] = (delta, price)
    if not rows:
        raise ScenarioError(f"{path}: no data rows")
    T = 1 + max(t for t, _ in rows)
    n_found = 1 + max(i for _, i in rows)
    if n is None:
        n = len(buses) if buses is not None else n_found
    if n_found > n:
        raise ScenarioError(f"{path}: bus index {n_found - 1} outside 0..{n - 1}")
    if len(rows) != T * n:
        raise ScenarioError(f"{path}: expected {T * n} rows for T={T}, n={n}, got {len(rows)}")
    defaults = schedule_prices(buses, T, n)
    delta = np.empty((T, n))
    price = np.empty((T, n))
    for (t, i), (d, p) in rows.items():
        delta[t, i] = d
        price[t, i] = defaults[t, i] if p is None else p
    return Scenario(delta, price)


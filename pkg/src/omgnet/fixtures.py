"""Small reference instances used by the tests, demos and CLI defaults."""
from .devices import BusSpec, CostModel, PriceSchedule, StorageParams
from .grid import Grid, star_grid

__all__ = ["fixture_storage", "fixture_bus", "fixture_star", "two_bus", "star_experiment"]


def fixture_storage(lam=1.0, s_max=10.0):
    """Levels in ``[0, s_max]``, control in ``[-1, 1]``, lossless."""
    return StorageParams(0.0, s_max, -1.0, 1.0, lam=lam)


def fixture_bus(lam=1.0, s_max=10.0, s_init=None):
    """Fixture storage with the shortfall cost ``(r)^-`` at unit price."""
    return BusSpec(fixture_storage(lam, s_max), s_init=s_init)


def fixture_star(n=5, lam=1.0, susceptance=1.0, flow_limit=0.149):
    """Star grid (hub 0) with a fixture bus at every node."""
    return star_grid(n, susceptance, flow_limit), [fixture_bus(lam)] * n


def two_bus(flow_limit=1.0, susceptance=1.0, lam=1.0):
    return Grid(2, [(0, 1)], susceptance, flow_limit), [fixture_bus(lam)] * 2


def star_experiment(capacity, n=5, day_night=False, lam=0.999, efficiency=0.995,
                    flow_limit=0.149, rate_fraction=0.1):
    """Star network with identical lossy storage of a given capacity.

    The control limit is ``rate_fraction * capacity``. With ``day_night``
    the shortfall price is 3 from period 7 to 18 of each 24 and 1 otherwise.
    """
    u = rate_fraction * capacity
    sp = StorageParams(0.0, capacity, -u, u, lam=lam, mu_c=efficiency, mu_d=efficiency)
    if day_night:
        bus = BusSpec(sp, CostModel.shortfall((1.0, 3.0)), PriceSchedule.day_night())
    else:
        bus = BusSpec(sp)
    return star_grid(n, 1.0, flow_limit), [bus] * n

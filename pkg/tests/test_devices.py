import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from omgnet.devices import (
    BusSpec, CostModel, DisturbanceSupport, PriceSchedule, StorageParams,
    eval_cost, step_storage, subgradient_bounds, validate_storage,
)
from omgnet.errors import ContractError, ModelError
from oracles import cost_value


def test_shortfall_bounds_unit_price():
    assert tuple(subgradient_bounds(CostModel.shortfall())) == (-1.0, 0.0)


def test_shortfall_bounds_price_range():
    assert tuple(subgradient_bounds(CostModel.shortfall((1.0, 3.0)))) == (-3.0, 0.0)


def test_zero_cost_bounds():
    assert tuple(subgradient_bounds(CostModel.zero())) == (0.0, 0.0)


def test_conversion_losses_widen_bounds():
    cost = CostModel((-2.0, 1.0), (0.0,))
    lo, hi = subgradient_bounds(cost, mu_c=0.5, mu_d=0.8)
    assert lo == -4.0 and hi == 2.0


@pytest.mark.parametrize("lam, s, u, expected", [
    (1.0, 5.0, 0.5, 5.5),
    (0.999, 10.0, 0.0, 9.99),
    (0.9, 0.0, -0.1, -0.1),
])
def test_step_storage(lam, s, u, expected):
    sp = StorageParams(0.0, 10.0, -1.0, 1.0, lam=lam)
    assert step_storage(sp, s, u) == pytest.approx(expected, abs=1e-12)


def test_step_storage_rejects_out_of_box_control():
    with pytest.raises(ContractError):
        step_storage(StorageParams(0.0, 10.0, -1.0, 1.0), 5.0, 1.5)


def test_validate_fixture_passes():
    assert validate_storage(StorageParams(0.0, 10.0, -1.0, 1.0)).ok


def test_validate_leaky_storage_not_controllable():
    rep = validate_storage(StorageParams(0.0, 10.0, -1.0, 1.0, lam=0.5))
    assert not rep.controllable_high
    assert "controllable_high" in rep.failures()


def test_validate_frequent_acting_strict():
    rep = validate_storage(StorageParams(0.0, 10.0, -5.0, 5.0))
    assert rep.failures() == ["frequent_acting"]


@pytest.mark.parametrize("r, p, expected", [(2.0, 1.0, 0.0), (-2.0, 3.0, 6.0), (0.0, 1.0, 0.0)])
def test_eval_shortfall(r, p, expected):
    assert eval_cost(CostModel.shortfall((1.0, 3.0)), r, p) == expected


def test_eval_price_outside_support():
    with pytest.raises(ContractError):
        eval_cost(CostModel.shortfall(), -1.0, 2.0)


def test_nonconvex_cost_rejected():
    with pytest.raises(ModelError):
        CostModel((1.0, -1.0), (0.0,))


def test_priced_slopes_must_stay_convex_over_support():
    with pytest.raises(ModelError):
        CostModel((-1.0, -0.5), (0.0,), priced=(False, True), price_support=(1.0, 4.0))


def test_bad_storage_rejected():
    with pytest.raises(ModelError):
        StorageParams(1.0, 0.0, -1.0, 1.0)
    with pytest.raises(ModelError):
        StorageParams(0.0, 1.0, 0.5, 1.0)
    with pytest.raises(ModelError):
        StorageParams(0.0, 1.0, -1.0, 1.0, lam=0.0)


def test_grid_power_conversion():
    sp = StorageParams(0.0, 10.0, -1.0, 1.0, mu_c=0.8, mu_d=0.5)
    np.testing.assert_allclose(sp.grid_power([1.0, -1.0, 0.0]), [1.25, -0.5, 0.0])


def test_day_night_schedule():
    p = PriceSchedule.day_night().prices(48)
    assert p[6] == 1.0 and p[7] == 3.0 and p[18] == 3.0 and p[19] == 1.0 and p[31] == 3.0


def test_bus_rejects_schedule_outside_cost_support():
    with pytest.raises(ModelError):
        BusSpec(StorageParams(0.0, 10.0, -1.0, 1.0), CostModel.shortfall(), PriceSchedule.day_night())


def test_disturbance_support_ordering():
    with pytest.raises(ModelError):
        DisturbanceSupport(1.0, -1.0)


@st.composite
def costs(draw):
    k = draw(st.integers(1, 4))
    slopes = sorted(draw(st.lists(st.floats(-5, 5), min_size=k, max_size=k)))
    bps = sorted(set(draw(st.lists(st.floats(-3, 3), min_size=k - 1, max_size=k - 1))))
    if len(bps) != k - 1 or any(b - a < 1e-3 for a, b in zip(bps, bps[1:])):
        bps = list(np.linspace(-1, 1, k - 1)) if k > 1 else []
    offset = draw(st.floats(-2, 2))
    return CostModel(tuple(slopes), tuple(bps), offset=offset)


@given(costs(), st.floats(-6, 6))
def test_max_affine_form_matches_direct_evaluation(cost, r):
    assert eval_cost(cost, r) == pytest.approx(cost_value(cost.slopes, cost.breakpoints, r, cost.offset),
                                                abs=1e-9)


@given(costs(), st.floats(-6, 6), st.floats(-6, 6), st.floats(0, 1))
def test_cost_is_convex(cost, r1, r2, t):
    lhs = eval_cost(cost, t * r1 + (1 - t) * r2)
    rhs = t * eval_cost(cost, r1) + (1 - t) * eval_cost(cost, r2)
    assert lhs <= rhs + 1e-9


@given(st.floats(1, 4), st.floats(-6, 6), st.floats(1e-3, 1))
def test_finite_difference_slopes_within_bounds(p_hi, r, h):
    cost = CostModel.shortfall((1.0, p_hi))
    lo, hi = subgradient_bounds(cost)
    for p in (1.0, p_hi, 0.5 * (1 + p_hi)):
        slope = (eval_cost(cost, r + h, p) - eval_cost(cost, r, p)) / h
        assert lo - 1e-9 <= slope <= hi + 1e-9


@given(st.floats(0, 10))
def test_ideal_idle_step_is_identity(s):
    assert step_storage(StorageParams(0.0, 10.0, -1.0, 1.0), s, 0.0) == s

import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from omgnet.devices import StorageParams, SubgradBounds
from omgnet.errors import CertificateError, ParameterError
from omgnet.params import (
    AlgorithmParams, DegenerateCostWarning, W_CAP, gamma_bounds, psd_certificates,
    select_max_w, select_min_s, suboptimality_M, validate_params, w_max,
)
from oracles import M_formula, gamma_bounds_formula, min_s_oracle, w_max_formula

FIX = StorageParams(0.0, 10.0, -1.0, 1.0)
SG = SubgradBounds(-1.0, 0.0)


def test_w_max_fixture():
    assert w_max(FIX, SG) == 8.0


def test_w_max_price_range():
    assert w_max(FIX, SubgradBounds(-3.0, 0.0)) == pytest.approx(8.0 / 3.0, rel=1e-15)


def test_w_max_degenerate_cost_capped():
    with pytest.warns(DegenerateCostWarning):
        assert w_max(FIX, SubgradBounds(0.0, 0.0)) == W_CAP


def test_w_max_requires_frequent_acting():
    with pytest.raises(ParameterError):
        w_max(StorageParams(0.0, 10.0, -5.0, 5.0), SG)


@pytest.mark.parametrize("w, expected", [(8.0, (-1.0, -1.0)), (4.0, (-5.0, -1.0))])
def test_gamma_bounds(w, expected):
    assert gamma_bounds(FIX, SG, w) == pytest.approx(expected, abs=1e-15)


def test_gamma_bounds_small_weight_limit():
    lo, hi = gamma_bounds(FIX, SG, 1e-12)
    assert lo == pytest.approx(-9.0, abs=1e-9) and hi == -1.0


@pytest.mark.parametrize("w", [0.0, -1.0, 9.0])
def test_gamma_bounds_rejects_weight(w):
    with pytest.raises(ParameterError):
        gamma_bounds(FIX, SG, w)


@pytest.mark.parametrize("lam, gamma, expected", [
    (1.0, -1.0, 0.5), (1.0, 37.0, 0.5), (0.5, 0.0, 25.5), (0.5, -5.0, 12.375),
])
def test_suboptimality_M(lam, gamma, expected):
    sp = StorageParams(0.0, 10.0, -1.0, 1.0, lam=lam)
    assert suboptimality_M(sp, gamma) == pytest.approx(expected, abs=1e-12)


def test_max_w_fixture():
    p = select_max_w(FIX, SG)
    assert (p.gamma, p.w, p.bound) == (-1.0, 8.0, 0.0625)


def test_max_w_large_capacity():
    p = select_max_w(StorageParams(0.0, 100.0, -1.0, 1.0), SG)
    assert p.w == 98.0
    assert p.bound == pytest.approx(0.5 / 98.0, rel=1e-14)


def test_max_w_interval_is_a_point():
    for lam in (1.0, 0.999, 0.9):
        sp = StorageParams(0.0, 10.0, -1.0, 1.0, lam=lam)
        lo, hi = gamma_bounds(sp, SG, w_max(sp, SG))
        assert abs(lo - hi) <= 1e-12


def test_min_s_ideal_storage_equals_max_w():
    a, b = select_min_s(FIX, SG), select_max_w(FIX, SG)
    assert a.w == pytest.approx(b.w, rel=1e-9)
    assert a.bound == pytest.approx(b.bound, rel=1e-9)


def test_min_s_not_worse_than_max_w():
    sp = StorageParams(0.0, 10.0, -1.0, 1.0, lam=0.999)
    assert select_min_s(sp, SG).bound <= select_max_w(sp, SG).bound + 1e-12


def test_min_s_matches_grid_oracle_leaky():
    sp = StorageParams(0.0, 10.0, -1.0, 1.0, lam=0.9)
    p = select_min_s(sp, SG, tol=1e-9)
    ratio, w, g = min_s_oracle(0.9, 0.0, 10.0, -1.0, 1.0, -1.0, 0.0)
    assert abs(p.bound - ratio) <= 1e-6
    assert p.bound == pytest.approx(0.75, abs=1e-9)  # oracle value, frozen


def test_min_s_rejects_bad_tol():
    with pytest.raises(ParameterError):
        select_min_s(FIX, SG, tol=0.0)


def test_validate_params():
    validate_params(select_max_w(FIX, SG), FIX, SG)
    with pytest.raises(ParameterError):
        validate_params(AlgorithmParams(-1.0, 8.5, 0.1), FIX, SG)
    with pytest.raises(ParameterError):
        validate_params(AlgorithmParams(0.0, 8.0, 0.1), FIX, SG)


def test_params_reject_nonpositive_weight():
    with pytest.raises(ParameterError):
        AlgorithmParams(-1.0, 0.0, 0.0)


def test_certificates_pass_on_fixture():
    assert psd_certificates(select_max_w(FIX, SG), FIX, SG).ok


def test_certificates_detect_perturbation():
    p = select_max_w(FIX, SG)
    rep = psd_certificates(p, FIX, SG, n_u=0.5 / 8.0 - 1e-3, check=False)
    assert not rep.ok
    with pytest.raises(CertificateError):
        psd_certificates(p, FIX, SG, n_u=0.5 / 8.0 - 1e-3)


def test_capacity_scaling_of_bound():
    bounds, wmax = [], []
    for smax in (10.0, 20.0, 40.0):
        p = select_max_w(StorageParams(0.0, smax, -1.0, 1.0), SG)
        bounds.append(p.bound)
        wmax.append(p.w)
    np.testing.assert_allclose(bounds, [0.0625, 0.5 / 18.0, 0.5 / 38.0], rtol=1e-12)
    for k in range(2):
        assert bounds[k] / bounds[k + 1] == pytest.approx(wmax[k + 1] / wmax[k], rel=0.05)


@st.composite
def storages(draw):
    lam = draw(st.sampled_from([1.0, 0.999, 0.99, 0.95, 0.9]))
    s_min = draw(st.floats(-5, 5))
    cap = draw(st.floats(2, 50))
    u_max = draw(st.floats(0.05, 0.45)) * cap
    u_min = -draw(st.floats(0.05, 0.45)) * cap
    sp = StorageParams(s_min, s_min + cap, u_min, u_max, lam=lam)
    d_lo = -draw(st.floats(0.1, 5))
    d_hi = draw(st.floats(0, 3))
    return sp, SubgradBounds(d_lo, d_hi)


@given(storages(), st.floats(1e-3, 1))
def test_gamma_interval_nonempty(spsg, frac):
    sp, sg = spsg
    lo, hi = gamma_bounds(sp, sg, frac * w_max(sp, sg))
    assert lo <= hi + 1e-9 * max(1, abs(lo))


@given(storages(), st.floats(1e-3, 1))
def test_gamma_bounds_match_formula(spsg, frac):
    sp, sg = spsg
    w = frac * w_max(sp, sg)
    exp = gamma_bounds_formula(sp.lam, sp.s_min, sp.s_max, sp.u_min, sp.u_max, sg.d_lo, sg.d_hi, w)
    np.testing.assert_allclose(gamma_bounds(sp, sg, w), exp, rtol=1e-12, atol=1e-12)
    assert w_max(sp, sg) == pytest.approx(
        w_max_formula(sp.s_min, sp.s_max, sp.u_min, sp.u_max, sg.d_lo, sg.d_hi), rel=1e-12)


@given(storages())
def test_min_s_bound_below_max_w(spsg):
    sp, sg = spsg
    a, b = select_min_s(sp, sg), select_max_w(sp, sg)
    assert a.bound <= b.bound * (1 + 1e-9) + 1e-12
    if sp.lam == 1.0:
        assert a.bound == pytest.approx(b.bound, rel=1e-9)
    validate_params(a, sp, sg)
    assert a.bound == pytest.approx(suboptimality_M(sp, a.gamma) / a.w, rel=1e-12)
    assert psd_certificates(a, sp, sg).ok


@given(storages(), st.floats(1e-3, 1), st.floats(0, 1))
def test_no_admissible_point_beats_min_s(spsg, wf, gf):
    sp, sg = spsg
    p = select_min_s(sp, sg, tol=1e-9)
    w = wf * w_max(sp, sg)
    lo, hi = gamma_bounds(sp, sg, w)
    g = lo + gf * (hi - lo)
    assert M_formula(sp.lam, sp.s_min, sp.s_max, sp.u_min, sp.u_max, g) / w >= p.bound - 1e-9 * max(1, p.bound)


@given(st.floats(0.2, 20))
def test_scaling_storage_scales_weight_and_bound(c):
    sp = StorageParams(0.0, 10.0 * c, -c, c)
    p = select_max_w(sp, SG)
    assert p.w == pytest.approx(8.0 * c, rel=1e-12)
    assert p.bound == pytest.approx(0.0625 * c, rel=1e-12)

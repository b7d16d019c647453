import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parkcast import truncnorm
from parkcast.clock import (
    format_duration,
    format_hhmm,
    hhmm_to_slot,
    parse_duration,
    parse_hhmm,
    slot_times,
    slot_to_hhmm,
)
from parkcast.errors import InvalidParams, NoSaturation
from parkcast.models import (
    ModelRecord,
    TnlParams,
    TnParams,
    area_normalised_curve,
    saturation_time,
    tn_curve,
    tnl_curve,
)

VILANOVA = TnParams.from_values(
    parse_hhmm("06:56"), parse_duration("01h16"), parse_hhmm("18:40"), parse_duration("03h05")
)
QUATRE_CAMINS = TnParams.from_values(
    parse_hhmm("07:32"), parse_duration("00h52"), parse_hhmm("19:25"), parse_duration("01h51")
)


def quad_cdf(t, p, panels=10**6):
    x = np.linspace(0, t, panels + 1)
    return np.trapezoid(truncnorm.pdf(x, p), x)


tn_params = st.builds(
    TnParams.from_values,
    st.floats(0.05, 0.6),
    st.floats(0.02, 0.2),
    st.floats(0.4, 0.95),
    st.floats(0.02, 0.2),
)


@pytest.mark.parametrize(
    "text,value", [("06:56", 416 / 1440), ("00:00", 0.0), ("18:40", 1120 / 1440), ("24:00", 1.0), ("30:15", 1815 / 1440)]
)
def test_hhmm_round_trip(text, value):
    assert parse_hhmm(text) == pytest.approx(value)
    assert format_hhmm(value) == text


def test_duration_and_slots():
    assert format_duration(76 / 1440) == "01h16"
    assert parse_duration("03h05") == pytest.approx(185 / 1440)
    assert hhmm_to_slot("07:00") == 14
    assert hhmm_to_slot("08:00") == 16
    assert hhmm_to_slot("24:00") == 48
    assert slot_to_hhmm(46) == "23:00"
    np.testing.assert_allclose(slot_times()[[0, -1]], [1 / 48, 1.0])
    for bad in ("7", "07:61", "07:10", "00:00"):
        with pytest.raises(ValueError):
            hhmm_to_slot(bad)


def test_vilanova_location_as_day_fraction():
    assert VILANOVA.mu_a == pytest.approx(0.288889, abs=1e-6)


def test_identical_components_give_zero():
    a = truncnorm.TruncNormParams(0.4, 0.1)
    np.testing.assert_array_equal(tn_curve(np.linspace(0, 1, 101), TnParams(a, a)), 0.0)


@settings(max_examples=500)
@given(tn_params)
def test_tn_boundary_zeros(p):
    assert abs(tn_curve(0.0, p)) <= 1e-12
    assert abs(tn_curve(1.0, p)) <= 1e-12


@pytest.mark.parametrize("p", [VILANOVA, QUATRE_CAMINS])
def test_tn_curve_at_noon_against_quadrature(p):
    want = quad_cdf(0.5, p.arrival) - quad_cdf(0.5, p.departure)
    assert tn_curve(0.5, p) == pytest.approx(want, abs=1e-8)


def test_tnl_curve_at_noon_against_quadrature():
    p = TnlParams(QUATRE_CAMINS, 0.7958)
    want = min(quad_cdf(0.5, QUATRE_CAMINS.arrival) / 0.7958, 1.0) - quad_cdf(0.5, QUATRE_CAMINS.departure)
    assert tnl_curve(0.5, p) == pytest.approx(want, abs=1e-8)


@settings(max_examples=500)
@given(tn_params)
def test_tnl_with_full_capacity_is_tn(p):
    t = np.linspace(0, 1, 100)
    np.testing.assert_allclose(tnl_curve(t, TnlParams(p, 1.0)), tn_curve(t, p), atol=1e-12, rtol=0)


@settings(max_examples=500)
@given(tn_params, st.floats(0.05, 0.999))
def test_tnl_dominates_tn_and_plateaus(p, tau):
    t = np.linspace(0, 1, 97)
    q = TnlParams(p, tau)
    f = tnl_curve(t, q)
    assert np.all(f >= tn_curve(t, p) - 1e-12)
    t_l = saturation_time(q)
    after = t[t > t_l]
    np.testing.assert_array_equal(tnl_curve(after, q), 1.0 - truncnorm.cdf(after, p.departure))


@settings(max_examples=300)
@given(
    st.builds(TnParams.from_values, st.floats(0.05, 0.45), st.floats(0.02, 0.2), st.floats(0.5, 0.95), st.floats(0.02, 0.2))
)
def test_tn_grid_maximum_is_interior(p):
    f = tn_curve(slot_times(), p)
    k = int(np.argmax(f))
    assert 0 < k < len(f) - 1


def test_full_before_departures_start():
    p = TnParams.from_values(0.3, 0.03, 0.8, 0.03)
    q = TnlParams(p, 0.6)
    t_l = saturation_time(q)
    assert truncnorm.cdf(t_l + 0.0, p.departure) < 1e-9
    assert tnl_curve(t_l, q) == pytest.approx(1.0, abs=1e-9)


def test_saturation_time():
    p = TnParams.from_values(0.5, 0.07, 0.8, 0.1)
    assert saturation_time(TnlParams(p, 0.5)) == pytest.approx(0.5, abs=1e-12)
    for tau in (0.1, 0.42, 0.9):
        t_l = saturation_time(TnlParams(p, tau))
        assert truncnorm.cdf(t_l, p.arrival) == pytest.approx(tau, abs=1e-10)
    with pytest.raises(NoSaturation):
        saturation_time(TnlParams(p, 1.0))


def test_quatre_camins_fills_between_eight_and_half_past():
    t_l = saturation_time(TnlParams(QUATRE_CAMINS, 0.7958))
    assert 1 / 3 <= t_l <= 17 / 48


@pytest.mark.parametrize("tau", [0.0, -0.1, 1.01, float("nan")])
def test_bad_tau(tau):
    with pytest.raises(InvalidParams):
        TnlParams(VILANOVA, tau)


def test_area_normalised_curve_sums_to_one():
    f = area_normalised_curve(VILANOVA)
    assert f.sum() == pytest.approx(1.0)
    assert np.all(f >= 0)


def test_interpretability():
    assert VILANOVA.is_interpretable()
    assert not TnParams.from_values(1.7, 0.5, 0.8, 0.1).is_interpretable()
    assert not TnParams.from_values(0.3, 5.0, 0.8, 0.1).is_interpretable()


def test_model_record_json_round_trip():
    rec = ModelRecord(
        "Vilanova", "weekday", "TNL", VILANOVA, beta2=1e-5, tau_per_day={"2024-01-02": 0.8, "2024-01-01": 0.7},
        loss_per_day=1.4e-4, n_days=2,
    )
    d = json.loads(rec.dumps())
    assert d["mu_a_hhmm"] == "06:56" and d["sigma_a_hhmm"] == "01h16"
    assert d["mu_d_hhmm"] == "18:40" and d["sigma_d_hhmm"] == "03h05"
    assert list(d["tau_per_day"]) == ["2024-01-01", "2024-01-02"]
    assert d["mean_tau"] == pytest.approx(0.75)
    back = ModelRecord.from_dict(d)
    assert back.params == VILANOVA and back.dumps() == rec.dumps()
    assert back.display_params().tau == pytest.approx(0.75)
    with pytest.raises(InvalidParams):
        ModelRecord.from_dict({**d, "model": "XYZ"})

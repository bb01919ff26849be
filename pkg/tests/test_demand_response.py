"""Comfort, heat demand, envelope and satisfaction tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cies_dispatch.demand_response import (
    ComfortModel,
    FlexEnvelope,
    LoadProfile,
    build_envelope,
    comfort_band,
    heat_demand,
    pmv,
    pmv_limit,
    satisfaction,
)


def comfort(t_out=-10.0, n=24):
    return ComfortModel(outdoor_temp_c=(t_out,) * n)


# ---------------------------------------------------------------- pmv


def test_pmv_at_skin_temperature():
    assert pmv(33.5, comfort()) == pytest.approx(2.43)


def test_pmv_hand_value_at_setpoint():
    # 2.43 - 3.76 * 13.5 / (80 * 1.2) = 1.90125
    assert pmv(20.0, comfort()) == pytest.approx(1.90125, abs=1e-9)


def test_pmv_monotone_in_temperature():
    c = comfort()
    assert pmv(22.0, c) > pmv(18.0, c)


def test_pmv_limit_schedule():
    c = comfort()
    # 0-based periods: hours 1..7 and 20..24 are loose, 8..19 tight.
    assert pmv_limit(0, c) == 0.9
    assert pmv_limit(6, c) == 0.9
    assert pmv_limit(7, c) == 0.5
    assert pmv_limit(18, c) == 0.5
    assert pmv_limit(19, c) == 0.9
    assert pmv_limit(23, c) == 0.9


def test_comfort_band_round_trip():
    c = comfort()
    for period in (0, 10):
        t_min, t_max = comfort_band(period, c)
        lim = pmv_limit(period, c)
        assert pmv(t_max, c) == pytest.approx(lim, abs=1e-9)
        assert pmv(t_min, c) == pytest.approx(-lim, abs=1e-9)


def test_comfort_band_width():
    # Width = 2 * L * M(I+0.1) / 3.76 = 96 / 3.76 for L = 0.5.
    t_min, t_max = comfort_band(10, comfort())
    assert t_max - t_min == pytest.approx(96.0 / 3.76, abs=1e-9)


def test_day_band_nested_in_night_band():
    c = comfort()
    lo_n, hi_n = comfort_band(0, c)
    lo_d, hi_d = comfort_band(10, c)
    assert lo_n <= lo_d and hi_d <= hi_n


# ---------------------------------------------------------------- heat


def test_heat_demand_hand_value():
    # 0.5 W/m2K * 24000 m2 * 30 K = 360 kW.
    assert heat_demand(0, 20.0, comfort(t_out=-10.0)) == pytest.approx(360.0)


def test_heat_demand_floored_at_zero():
    assert heat_demand(0, 20.0, comfort(t_out=25.0)) == 0.0


def test_heat_demand_linear_in_delta():
    c = comfort(t_out=0.0)
    assert heat_demand(0, 30.0, c) == pytest.approx(1.5 * heat_demand(0, 20.0, c))


# ---------------------------------------------------------------- envelope


def loads(n=24):
    return LoadProfile(
        fixed_kw=(200.0,) * n, electric_kw=(200.0,) * n, heat_kw=(300.0,) * n
    )


def test_envelope_fractions():
    env = build_envelope(loads(), comfort(), 0.15, 0.10, 0.10)
    assert env.shift_max_kw[0] == pytest.approx(30.0)
    assert env.shift_min_kw[0] == pytest.approx(-30.0)
    assert env.eil_max_kw[0] == pytest.approx(20.0)
    assert env.hil_max_kw[0] == pytest.approx(30.0)


def test_envelope_comfort_cap_binds_when_tighter():
    # Cold snap with a tall heat demand: at t_out so low that the comfort
    # floor sits above 90% of demand, the band caps the interruption.
    c = ComfortModel(
        outdoor_temp_c=(-10.0,) * 24,
        pmv_limit_day=0.01,
        pmv_limit_night=0.01,
        skin_temp_c=20.3,  # pins the comfortable band tightly around ~20 C
        metabolic_rate=8.0,
        clothing_clo=0.9,
    )
    t_min, _ = comfort_band(0, c)
    floor = 0.5 * 24000.0 * (t_min - (-10.0)) / 1000.0
    demand = floor * 1.05  # only 5% of demand is interruptible
    lp = LoadProfile(fixed_kw=(0.0,) * 24, electric_kw=(1.0,) * 24, heat_kw=(demand,) * 24)
    env = build_envelope(lp, c, 0.0, 0.0, 0.10)
    assert env.hil_max_kw[0] == pytest.approx(demand - floor)
    assert env.hil_max_kw[0] < 0.10 * demand


def test_envelope_rejects_bad_fraction():
    with pytest.raises(ValueError):
        build_envelope(loads(), comfort(), shift_fraction=1.5)


def test_envelope_shift_window_contains_zero():
    with pytest.raises(ValueError):
        FlexEnvelope((1.0,), (2.0,), (0.0,), (0.0,))


# ---------------------------------------------------------------- satisfaction


def test_satisfaction_no_response_is_full():
    zeros = (0.0,) * 24
    per, mean = satisfaction(zeros, zeros, zeros, loads())
    assert mean == pytest.approx(100.0)
    assert all(v == pytest.approx(100.0) for v in per)


def test_satisfaction_ten_percent_interruption():
    zeros = (0.0,) * 24
    eil = tuple(0.10 * v for v in loads().electric_kw)
    per, mean = satisfaction(zeros, eil, zeros, loads())
    assert mean == pytest.approx(95.0)


def test_satisfaction_skips_zero_demand_periods():
    lp = LoadProfile(fixed_kw=(0.0, 100.0), electric_kw=(0.0, 100.0), heat_kw=(0.0, 0.0))
    per, mean = satisfaction((0.0, 0.0), (0.0, 10.0), (0.0, 0.0), lp)
    assert per[0] is None
    assert per[1] == pytest.approx(90.0)
    assert mean == pytest.approx(90.0)


@given(st.floats(min_value=0.0, max_value=0.10), st.floats(min_value=0.0, max_value=0.10))
@settings(max_examples=50, deadline=None)
def test_satisfaction_floor_under_ten_percent_rule(fe, fh):
    lp = loads()
    zeros = (0.0,) * 24
    eil = tuple(fe * v for v in lp.electric_kw)
    hil = tuple(fh * v for v in lp.heat_kw)
    per, mean = satisfaction(zeros, eil, hil, lp)
    assert mean >= 90.0 - 1e-9
    assert all(v >= 90.0 - 1e-9 for v in per)

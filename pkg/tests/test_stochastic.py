"""Renewable distribution and EV Monte Carlo tests."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from cies_dispatch.stochastic import (
    EvBehaviorModel,
    PvModel,
    WindModel,
    charge_duration,
    fit_beta_moments,
    fit_weibull_moments,
    joint_rg_sequence,
    pv_power_sequence,
    sample_ev_fleet,
    wind_power_sequence,
    wrapped_normal_pdf,
)


def wind(k, c, n=1):
    return WindModel(
        v_in=3.0, v_rated=15.0, v_out=25.0, p_rated=500.0,
        shape=(k,) * n, scale=(c,) * n,
    )


def pv(a, b, n=1, p_max=360.0):
    return PvModel(
        efficiency=0.093, area=3900.0, p_max=p_max, g_max=1.0,
        alpha=(a,) * n, beta=(b,) * n,
    )


EV = EvBehaviorModel(
    fleet_size=15, battery_kwh=20.0, energy_per_100km_kwh=15.0,
    p_rated_kw=15.0, eta_ch=0.9, eta_dc=0.9,
)


# ---------------------------------------------------------------- wind


def test_calm_wind_is_all_zero_state():
    seq = wind_power_sequence(wind(2.0, 0.05), 0, q=5.0)
    assert seq.probs[0] >= 1.0 - 1e-9


def test_saturated_wind_is_rated_state():
    # Narrow Weibull centered inside the rated band: nearly all mass at 500.
    seq = wind_power_sequence(wind(80.0, 20.0), 0, q=5.0)
    assert seq.probs[-1] >= 1.0 - 1e-6
    assert seq.n_states * seq.step_q == pytest.approx(500.0)


def test_wind_expectation_against_monte_carlo():
    m = wind(2.0, 8.0)
    seq = wind_power_sequence(m, 0, q=5.0)
    rng = np.random.default_rng(123)
    v = rng.weibull(2.0, 1_000_000) * 8.0
    p = np.where(
        (v < m.v_in) | (v > m.v_out),
        0.0,
        np.where(v >= m.v_rated, m.p_rated, m.p_rated * (v - m.v_in) / (m.v_rated - m.v_in)),
    )
    assert seq.expectation() == pytest.approx(float(p.mean()), rel=0.01)


def test_wind_atoms_match_weibull_tails():
    m = wind(2.0, 8.0)
    seq = wind_power_sequence(m, 0, q=5.0)
    speed = stats.weibull_min(2.0, scale=8.0)
    assert seq.probs[0] == pytest.approx(
        speed.cdf(3.0) + speed.sf(25.0) + (speed.cdf(3.0 + 2.5 * 12 / 500) - speed.cdf(3.0)),
        abs=1e-9,
    )


# ---------------------------------------------------------------- pv


def test_dark_period_collapses_to_zero():
    seq = pv_power_sequence(pv(0.0, 1.0), 0, q=5.0)
    assert seq.n_states == 0 and seq.probs[0] == 1.0


def test_pv_symmetric_beta_expectation():
    # Plant 362.7 kW capped at 360; with Beta(40, 40) the cap tail is
    # negligible, so the mean is plant/2.
    seq = pv_power_sequence(pv(40.0, 40.0), 0, q=5.0)
    assert seq.expectation() == pytest.approx(0.093 * 3900.0 / 2.0, rel=2e-3)


def test_pv_cap_atom_and_state_ceiling():
    # Beta(9, 1) pushes mass toward full irradiance; the cap at 360 kW
    # collects it and no state exceeds the cap.
    seq = pv_power_sequence(pv(9.0, 1.0), 0, q=5.0)
    assert seq.n_states * seq.step_q == pytest.approx(360.0)
    plant = 0.093 * 3900.0
    expect_atom = stats.beta(9.0, 1.0).sf(360.0 / plant)
    assert seq.probs[-1] >= expect_atom - 1e-9


def test_joint_sequence_adds_expectations():
    w = wind_power_sequence(wind(2.0, 8.0), 0, q=5.0)
    s = pv_power_sequence(pv(3.0, 4.0), 0, q=5.0)
    j = joint_rg_sequence(w, s)
    assert j.expectation() == pytest.approx(w.expectation() + s.expectation(), abs=1e-9)
    assert j.n_states == w.n_states + s.n_states


# ---------------------------------------------------------------- EV fleet


def test_charge_duration_hand_value():
    assert charge_duration(0.3, 0.9, 60.0, 15.0, 0.9) == pytest.approx(8.0 / 3.0)


def test_wrapped_density_normalizes():
    val, _ = integrate.quad(
        lambda t: wrapped_normal_pdf(t, 17.6, 3.4), 0.0, 24.0, limit=400
    )
    assert val == pytest.approx(1.0, abs=1e-6)


def test_wrapped_density_branches_continuous_at_seam():
    # Density just left and right of the wrap seam mu - 12 must agree.
    mu, sigma = 17.6, 3.4
    left = wrapped_normal_pdf(mu - 12.0 - 1e-9, mu, sigma)
    right = wrapped_normal_pdf(mu - 12.0 + 1e-9, mu, sigma)
    assert left == pytest.approx(right, rel=1e-6)


def test_fleet_sample_shapes_and_bounds():
    s = sample_ev_fleet(EV, n_samples=1000, seed=7)
    assert s.profile_kw.shape == (24,)
    assert np.all(s.profile_kw >= 0)
    assert np.all((0 <= s.connected_fraction) & (s.connected_fraction <= 1))
    assert np.all(s.soc_start <= s.soc_end + 1e-12)
    assert np.all(s.soc_end <= 1.0 + 1e-12)
    assert s.plug_energy_kwh == pytest.approx(float(s.profile_kw.sum()))


def test_fleet_arrival_circular_mean():
    s = sample_ev_fleet(EV, n_samples=1000, seed=11)
    ang = s.arrival_h / 24.0 * 2.0 * math.pi
    mean = math.atan2(np.sin(ang).mean(), np.cos(ang).mean()) / (2.0 * math.pi) * 24.0 % 24.0
    assert 17.1 <= mean <= 18.1


def test_fleet_energy_scales_with_fleet_size():
    # Plug energy equals fleet_size * mean per-vehicle demand / eta.
    s = sample_ev_fleet(EV, n_samples=2000, seed=3)
    per_vehicle = (s.soc_end - s.soc_start) * EV.battery_kwh / EV.eta_ch
    assert s.plug_energy_kwh == pytest.approx(
        float(per_vehicle.mean()) * EV.fleet_size, rel=1e-9
    )


def test_zero_mileage_means_zero_profile():
    quiet = EvBehaviorModel(
        fleet_size=15, battery_kwh=20.0, energy_per_100km_kwh=15.0,
        p_rated_kw=15.0, eta_ch=0.9, eta_dc=0.9, mileage_log_mean=-30.0,
        mileage_log_std=0.01,
    )
    s = sample_ev_fleet(quiet, n_samples=500, seed=5)
    assert float(s.profile_kw.sum()) == pytest.approx(0.0, abs=1e-6)


def test_fleet_sample_reproducible():
    a = sample_ev_fleet(EV, n_samples=500, seed=42)
    b = sample_ev_fleet(EV, n_samples=500, seed=42)
    assert a.profile_kw.tobytes() == b.profile_kw.tobytes()
    assert a.arrival_h.tobytes() == b.arrival_h.tobytes()
    c = sample_ev_fleet(EV, n_samples=500, seed=43)
    assert a.profile_kw.tobytes() != c.profile_kw.tobytes()


def test_clamp_counted():
    greedy = EvBehaviorModel(
        fleet_size=15, battery_kwh=20.0, energy_per_100km_kwh=15.0,
        p_rated_kw=15.0, eta_ch=0.9, eta_dc=0.9, mileage_log_mean=6.0,
        soc_initial_low=0.5, soc_initial_high=0.9,
    )
    s = sample_ev_fleet(greedy, n_samples=200, seed=1)
    assert s.clamp_count > 0
    assert np.all(s.soc_end <= 1.0)


def test_profile_wraps_midnight():
    late = EvBehaviorModel(
        fleet_size=1, battery_kwh=20.0, energy_per_100km_kwh=15.0,
        p_rated_kw=15.0, eta_ch=0.9, eta_dc=0.9, arrival_mean_h=23.5,
        arrival_std_h=0.01, mileage_log_mean=3.2,
    )
    s = sample_ev_fleet(late, n_samples=50, seed=9)
    assert s.profile_kw[0] > 0  # charging spills past midnight


# ---------------------------------------------------------------- moment fits


def test_weibull_fit_round_trip():
    from scipy.special import gamma

    k, c = 2.2, 9.0
    mean = c * gamma(1 + 1 / k)
    var = c * c * (gamma(1 + 2 / k) - gamma(1 + 1 / k) ** 2)
    k2, c2 = fit_weibull_moments(mean, math.sqrt(var))
    assert k2 == pytest.approx(k, abs=1e-9)
    assert c2 == pytest.approx(c, abs=1e-9)


def test_beta_fit_round_trip():
    a, b = 3.5, 2.0
    mean = a / (a + b)
    var = a * b / ((a + b) ** 2 * (a + b + 1))
    a2, b2 = fit_beta_moments(mean, math.sqrt(var))
    assert a2 == pytest.approx(a, abs=1e-9)
    assert b2 == pytest.approx(b, abs=1e-9)


def test_beta_fit_zero_mean_is_dark():
    assert fit_beta_moments(0.0, 0.1) == (0.0, 1.0)


def test_invalid_models_rejected():
    with pytest.raises(ValueError):
        WindModel(3.0, 2.0, 25.0, 500.0, (2.0,), (8.0,))
    with pytest.raises(ValueError):
        PvModel(0.093, 3900.0, 360.0, 1.0, (1.0,), (-1.0,))
    with pytest.raises(ValueError):
        EvBehaviorModel(
            fleet_size=0, battery_kwh=20.0, energy_per_100km_kwh=15.0,
            p_rated_kw=15.0, eta_ch=0.9, eta_dc=0.9,
        )

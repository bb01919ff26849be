"""Renewable output distributions and EV fleet Monte Carlo.

Wind speed is Weibull per period and pushed through a cut-in / rated /
cut-out power curve; irradiance is Beta per period, scaled by panel
efficiency and area and capped at the PV rating.  Both come out as
probability sequences on the dispatch step.  The EV side samples
arrival, departure, mileage and state of charge per vehicle and
aggregates a disordered charging profile plus availability shares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, special, stats

from cies_dispatch.probseq import ProbSeq, discretize_pdf

__all__ = [
    "WindModel",
    "PvModel",
    "EvBehaviorModel",
    "EvFleetSample",
    "wind_power_sequence",
    "pv_power_sequence",
    "joint_rg_sequence",
    "sample_ev_fleet",
    "wrapped_normal_pdf",
    "fit_weibull_moments",
    "fit_beta_moments",
    "charge_duration",
]


@dataclass(frozen=True)
class WindModel:
    """Per-period Weibull wind speed and a shared turbine power curve."""

    v_in: float
    v_rated: float
    v_out: float
    p_rated: float
    shape: tuple[float, ...]
    scale: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.v_in < self.v_rated < self.v_out:
            raise ValueError("speed thresholds must satisfy v_in < v_rated < v_out")
        if self.p_rated <= 0:
            raise ValueError("rated power must be positive")
        if len(self.shape) != len(self.scale):
            raise ValueError("shape and scale arrays differ in length")
        for k, c in zip(self.shape, self.scale):
            if k <= 0 or c <= 0:
                raise ValueError("Weibull parameters must be positive")

    @property
    def horizon(self) -> int:
        return len(self.shape)


@dataclass(frozen=True)
class PvModel:
    """Per-period Beta irradiance behind an efficiency*area plant.

    A non-positive ``alpha`` marks a dark period (all mass at zero output).
    """

    efficiency: float
    area: float
    p_max: float
    g_max: float
    alpha: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.efficiency <= 0 or self.area <= 0 or self.p_max <= 0:
            raise ValueError("efficiency, area and rating must be positive")
        if self.g_max <= 0:
            raise ValueError("irradiance ceiling must be positive")
        if len(self.alpha) != len(self.beta):
            raise ValueError("alpha and beta arrays differ in length")
        for a, b in zip(self.alpha, self.beta):
            if b <= 0 or (a < 0):
                raise ValueError("Beta parameters must be positive (alpha 0 = dark)")

    @property
    def horizon(self) -> int:
        return len(self.alpha)


def wind_power_sequence(model: WindModel, period: int, q: float) -> ProbSeq:
    """Discretized turbine output for one period.

    Speeds below cut-in or above cut-out contribute an atom at zero; the
    rated band contributes an atom at rated power; the ramp between maps
    linearly, so continuous bin masses are Weibull CDF differences.
    """
    k, c = model.shape[period], model.scale[period]
    speed = stats.weibull_min(k, scale=c)
    mass_zero = float(speed.cdf(model.v_in) + speed.sf(model.v_out))
    mass_rated = float(speed.cdf(model.v_out) - speed.cdf(model.v_rated))
    dv = (model.v_rated - model.v_in) / model.p_rated

    def cdf(p: float) -> float:
        # CDF of the continuous ramp part expressed on the power axis.
        return float(speed.cdf(model.v_in + p * dv))

    return discretize_pdf(
        None,
        p_max=model.p_rated,
        q=q,
        cdf=cdf,
        point_masses={0.0: mass_zero, model.p_rated: mass_rated},
    )


def pv_power_sequence(model: PvModel, period: int, q: float) -> ProbSeq:
    """Discretized PV output for one period; dark periods collapse to zero."""
    a, b = model.alpha[period], model.beta[period]
    if a <= 0:
        return ProbSeq(q, np.array([1.0]))
    plant = model.efficiency * model.area * model.g_max
    top = min(plant, model.p_max)
    irr = stats.beta(a, b)
    atoms = {}
    if plant > model.p_max:
        atoms[top] = float(irr.sf(model.p_max / plant))
    return discretize_pdf(
        None,
        p_max=top,
        q=q,
        cdf=lambda p: float(irr.cdf(p / plant)),
        point_masses=atoms,
    )


def joint_rg_sequence(wind: ProbSeq, pv: ProbSeq) -> ProbSeq:
    """Joint renewable output: convolution of the two sequences."""
    return wind.convolve(pv)


# ---------------------------------------------------------------- EV fleet


@dataclass(frozen=True)
class EvBehaviorModel:
    """Population statistics used to synthesize EV charging demand."""

    fleet_size: int
    battery_kwh: float
    energy_per_100km_kwh: float
    p_rated_kw: float
    eta_ch: float
    eta_dc: float
    arrival_mean_h: float = 17.6
    arrival_std_h: float = 3.4
    departure_mean_h: float = 8.5
    departure_std_h: float = 3.3
    mileage_log_mean: float = 3.2
    mileage_log_std: float = 0.88
    soc_initial_low: float = 0.2
    soc_initial_high: float = 0.5

    def __post_init__(self) -> None:
        if self.fleet_size <= 0:
            raise ValueError("fleet size must be positive")
        if self.battery_kwh <= 0 or self.p_rated_kw <= 0:
            raise ValueError("battery capacity and rated power must be positive")
        if not 0 < self.eta_ch <= 1 or not 0 < self.eta_dc <= 1:
            raise ValueError("efficiencies must lie in (0, 1]")
        if self.arrival_std_h <= 0 or self.departure_std_h <= 0:
            raise ValueError("arrival/departure spreads must be positive")
        if not 0 <= self.soc_initial_low <= self.soc_initial_high <= 1:
            raise ValueError("initial SOC window must satisfy 0 <= lo <= hi <= 1")


@dataclass(frozen=True)
class EvFleetSample:
    """Monte Carlo draw of the fleet, aggregated to the dispatch grid."""

    arrival_h: np.ndarray = field(repr=False)
    departure_h: np.ndarray = field(repr=False)
    soc_start: np.ndarray = field(repr=False)
    soc_end: np.ndarray = field(repr=False)
    charge_hours: np.ndarray = field(repr=False)
    profile_kw: np.ndarray = field(repr=False)
    connected_fraction: np.ndarray = field(repr=False)
    plug_energy_kwh: float
    clamp_count: int
    fleet_size: int
    n_samples: int

    @property
    def horizon(self) -> int:
        return self.profile_kw.size


def wrapped_normal_pdf(
    t, mu: float, sigma: float, period: float = 24.0, n_wraps: int = 8
):
    """Density of a normal wrapped onto (0, period]."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for j in range(-n_wraps, n_wraps + 1):
        z = (t + j * period - mu) / sigma
        total += np.exp(-0.5 * z * z)
    out = total / (math.sqrt(2.0 * math.pi) * sigma)
    return float(out) if out.ndim == 0 else out


def charge_duration(
    soc_start: float, soc_end: float, capacity_kwh: float, power_kw: float, eta: float
) -> float:
    """Hours of rated-power charging lifting the SOC from start to end."""
    return (soc_end - soc_start) * capacity_kwh / (power_kw * eta)


def _hour_overlap(start: float, length: float, horizon: int) -> np.ndarray:
    """Hours of [start, start+length) inside each period, wrapping midnight."""
    out = np.zeros(horizon)
    if length <= 0:
        return out
    remaining = length
    pos = start % horizon
    while remaining > 1e-12:
        h = int(pos)
        room = (h + 1) - pos
        step = min(room, remaining)
        out[h % horizon] += step
        pos = (h + 1) % horizon
        remaining -= step
    return out


def sample_ev_fleet(
    model: EvBehaviorModel, n_samples: int, seed: int, horizon: int = 24
) -> EvFleetSample:
    """Draw a fleet, apply the disordered plug-on-arrival policy, aggregate.

    Arrivals/departures are normals wrapped onto (0, 24]; daily mileage is
    lognormal; the SOC gained back equals the driving energy over battery
    capacity, clamped into [start, 1].  Each vehicle charges at rated
    power from arrival until its demand is met (wrapping midnight).  The
    aggregate profile is scaled from the sample count to the fleet size.
    """
    if n_samples <= 0:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    arrival = rng.normal(model.arrival_mean_h, model.arrival_std_h, n_samples) % horizon
    departure = (
        rng.normal(model.departure_mean_h, model.departure_std_h, n_samples) % horizon
    )
    mileage = rng.lognormal(model.mileage_log_mean, model.mileage_log_std, n_samples)
    soc_start = rng.uniform(model.soc_initial_low, model.soc_initial_high, n_samples)

    gain = mileage * model.energy_per_100km_kwh / (100.0 * model.battery_kwh)
    soc_end_raw = soc_start + gain
    soc_end = np.minimum(soc_end_raw, 1.0)
    clamp_count = int(np.count_nonzero(soc_end_raw > 1.0))
    hours = (soc_end - soc_start) * model.battery_kwh / (
        model.p_rated_kw * model.eta_ch
    )

    scale = model.fleet_size / n_samples
    profile = np.zeros(horizon)
    connected = np.zeros(horizon)
    for a, d, h in zip(arrival, departure, hours):
        profile += _hour_overlap(a, h, horizon) * model.p_rated_kw
        parked = (d - a) % horizon
        if parked == 0.0:
            parked = float(horizon)
        connected += _hour_overlap(a, parked, horizon)
    profile *= scale
    connected /= n_samples

    return EvFleetSample(
        arrival_h=arrival,
        departure_h=departure,
        soc_start=soc_start,
        soc_end=soc_end,
        charge_hours=hours,
        profile_kw=profile,
        connected_fraction=connected,
        plug_energy_kwh=float(profile.sum()),
        clamp_count=clamp_count,
        fleet_size=model.fleet_size,
        n_samples=n_samples,
    )


# ---------------------------------------------------------------- moment fits


def fit_weibull_moments(mean: float, std: float) -> tuple[float, float]:
    """Weibull (shape, scale) matching a mean and standard deviation."""
    if mean <= 0 or std <= 0:
        raise ValueError("mean and std must be positive")
    cv2 = (std / mean) ** 2

    def gap(k: float) -> float:
        g1 = special.gamma(1.0 + 1.0 / k)
        g2 = special.gamma(1.0 + 2.0 / k)
        return g2 / (g1 * g1) - 1.0 - cv2

    k = optimize.brentq(gap, 0.15, 60.0, xtol=1e-12)
    scale = mean / special.gamma(1.0 + 1.0 / k)
    return float(k), float(scale)


def fit_beta_moments(mean: float, std: float) -> tuple[float, float]:
    """Beta (alpha, beta) on [0, 1] matching a mean and standard deviation.

    A zero mean returns the dark-period sentinel (0, 1).
    """
    if mean < 0 or mean > 1:
        raise ValueError("mean must lie in [0, 1]")
    if mean == 0.0:
        return 0.0, 1.0
    var = std * std
    cap = mean * (1.0 - mean)
    if var <= 0 or var >= cap:
        raise ValueError("std incompatible with a Beta on [0, 1]")
    nu = cap / var - 1.0
    return float(mean * nu), float((1.0 - mean) * nu)

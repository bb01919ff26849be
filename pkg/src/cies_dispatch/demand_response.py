"""Integrated demand response: comfort bounds, flexible envelopes, satisfaction.

Electric load can be shifted (zero-sum over the day) or interrupted up to a
cap; heat load can be interrupted within a thermal-comfort band derived from
a predicted-mean-vote expression.  User satisfaction averages the served
shares of both demands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ComfortModel",
    "LoadProfile",
    "FlexEnvelope",
    "pmv",
    "pmv_limit",
    "comfort_band",
    "heat_demand",
    "build_envelope",
    "satisfaction",
]

_PMV_BASE = 2.43
_PMV_SLOPE = 3.76


@dataclass(frozen=True)
class ComfortModel:
    """Building envelope and occupant parameters shared by heat and comfort."""

    outdoor_temp_c: tuple[float, ...]
    heat_transfer_w_per_m2k: float = 0.5
    surface_area_m2: float = 24000.0
    indoor_setpoint_c: float = 20.0
    metabolic_rate: float = 80.0
    clothing_clo: float = 1.1
    skin_temp_c: float = 33.5
    pmv_limit_day: float = 0.5
    pmv_limit_night: float = 0.9

    def __post_init__(self) -> None:
        if self.heat_transfer_w_per_m2k <= 0 or self.surface_area_m2 <= 0:
            raise ValueError("heat transfer and surface area must be positive")
        if self.metabolic_rate <= 0:
            raise ValueError("metabolic rate must be positive")
        if self.pmv_limit_day < 0 or self.pmv_limit_night < 0:
            raise ValueError("comfort limits must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.outdoor_temp_c)


def pmv(t_in: float, c: ComfortModel) -> float:
    """Predicted mean vote at an indoor temperature."""
    insulation = c.metabolic_rate * (c.clothing_clo + 0.1)
    return _PMV_BASE - _PMV_SLOPE * (c.skin_temp_c - t_in) / insulation


def pmv_limit(period: int, c: ComfortModel) -> float:
    """Comfort tolerance for a 0-based period: looser overnight (hours 1-7
    and 20-24), tighter through the working day (hours 8-19)."""
    hour = period + 1
    return c.pmv_limit_night if hour <= 7 or hour >= 20 else c.pmv_limit_day


def comfort_band(period: int, c: ComfortModel) -> tuple[float, float]:
    """Indoor temperature range keeping |PMV| within the period limit."""
    lim = pmv_limit(period, c)
    insulation = c.metabolic_rate * (c.clothing_clo + 0.1)
    t_max = c.skin_temp_c - (_PMV_BASE - lim) * insulation / _PMV_SLOPE
    t_min = c.skin_temp_c - (_PMV_BASE + lim) * insulation / _PMV_SLOPE
    return t_min, t_max


def heat_demand(period: int, t_in: float, c: ComfortModel) -> float:
    """Quasi-steady envelope loss at an indoor temperature, in kW (floored
    at zero when outdoors is warmer)."""
    loss = (
        c.heat_transfer_w_per_m2k
        * c.surface_area_m2
        * (t_in - c.outdoor_temp_c[period])
        / 1000.0
    )
    return max(0.0, loss)


@dataclass(frozen=True)
class LoadProfile:
    """Hourly demand data: fixed electric, initial electric, heat."""

    fixed_kw: tuple[float, ...]
    electric_kw: tuple[float, ...]
    heat_kw: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.electric_kw)
        if len(self.fixed_kw) != n or len(self.heat_kw) != n:
            raise ValueError("load profiles differ in length")
        for name in ("fixed_kw", "electric_kw", "heat_kw"):
            if any(v < 0 for v in getattr(self, name)):
                raise ValueError(f"{name} has negative entries")

    @property
    def horizon(self) -> int:
        return len(self.electric_kw)


@dataclass(frozen=True)
class FlexEnvelope:
    """Per-period flexibility limits handed to the dispatch model."""

    shift_min_kw: tuple[float, ...]
    shift_max_kw: tuple[float, ...]
    eil_max_kw: tuple[float, ...]
    hil_max_kw: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.shift_min_kw)
        if not (len(self.shift_max_kw) == len(self.eil_max_kw) == len(self.hil_max_kw) == n):
            raise ValueError("envelope arrays differ in length")
        for lo, hi in zip(self.shift_min_kw, self.shift_max_kw):
            if lo > 0 or hi < 0:
                raise ValueError("shift window must contain zero")
        if any(v < 0 for v in self.eil_max_kw) or any(v < 0 for v in self.hil_max_kw):
            raise ValueError("interruption caps must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.shift_min_kw)


def build_envelope(
    loads: LoadProfile,
    comfort: ComfortModel,
    shift_fraction: float = 0.15,
    eil_fraction: float = 0.10,
    hil_fraction: float = 0.10,
) -> FlexEnvelope:
    """Envelope from fractions of the initial demands.

    The heat cap is the tighter of the fraction rule and the comfort band:
    delivered heat may not drop below the envelope loss at the coolest
    comfortable indoor temperature.
    """
    if not 0 <= shift_fraction <= 1 or not 0 <= eil_fraction <= 1 or not 0 <= hil_fraction <= 1:
        raise ValueError("fractions must lie in [0, 1]")
    shift_max, eil, hil = [], [], []
    for t in range(loads.horizon):
        shift_max.append(shift_fraction * loads.electric_kw[t])
        eil.append(eil_fraction * loads.electric_kw[t])
        t_min, _ = comfort_band(t, comfort)
        floor = max(
            0.0,
            comfort.heat_transfer_w_per_m2k
            * comfort.surface_area_m2
            * (t_min - comfort.outdoor_temp_c[t])
            / 1000.0,
        )
        comfort_cap = max(0.0, loads.heat_kw[t] - floor)
        hil.append(min(hil_fraction * loads.heat_kw[t], comfort_cap))
    return FlexEnvelope(
        shift_min_kw=tuple(-v for v in shift_max),
        shift_max_kw=tuple(shift_max),
        eil_max_kw=tuple(eil),
        hil_max_kw=tuple(hil),
    )


def satisfaction(
    tsl_kw,
    eil_kw,
    hil_kw,
    loads: LoadProfile,
) -> tuple[list[float | None], float]:
    """Per-period and mean satisfaction, percent.

    Averages the served fraction of the electric demand (fixed plus shift
    minus interruption over the initial demand) and of the heat demand.
    Periods with zero demand on both sides are skipped (None).
    """
    per: list[float | None] = []
    vals = []
    for t in range(loads.horizon):
        el, hl = loads.electric_kw[t], loads.heat_kw[t]
        parts = []
        if el > 0:
            parts.append((loads.fixed_kw[t] + tsl_kw[t] - eil_kw[t]) / el)
        if hl > 0:
            parts.append((hl - hil_kw[t]) / hl)
        if not parts:
            per.append(None)
            continue
        score = 100.0 * sum(parts) / len(parts)
        per.append(score)
        vals.append(score)
    mean = float(np.mean(vals)) if vals else 100.0
    return per, mean

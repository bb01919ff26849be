"""Time-of-use tariff and the surplus-indexed real-time price overlay.

In deficit periods (total load above expected renewable output) the
station-facing price equals the TOU price.  In surplus periods it is the
valley TOU price scaled by the load-to-surplus ratio, which is what makes
absorbing surplus cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TouTariff", "PriceSignal", "total_load", "dynamic_price"]

PEAK, FLAT, VALLEY = "peak", "flat", "valley"


@dataclass(frozen=True)
class TouTariff:
    """Per-period TOU price with its period classification."""

    price: tuple[float, ...]
    kind: tuple[str, ...]
    valley_price: float

    def __post_init__(self) -> None:
        if len(self.price) != len(self.kind):
            raise ValueError("price and kind arrays differ in length")
        if any(p < 0 for p in self.price) or self.valley_price < 0:
            raise ValueError("prices must be non-negative")
        bad = {k for k in self.kind} - {PEAK, FLAT, VALLEY}
        if bad:
            raise ValueError(f"unknown period kinds: {sorted(bad)}")

    @property
    def horizon(self) -> int:
        return len(self.price)

    @classmethod
    def from_hours(
        cls,
        peak_hours,
        flat_hours,
        valley_hours,
        peak_price: float,
        flat_price: float,
        valley_price: float,
        horizon: int = 24,
    ) -> "TouTariff":
        """Build from 1-indexed hour lists; the three sets must tile 1..T."""
        sets = {
            PEAK: set(peak_hours),
            FLAT: set(flat_hours),
            VALLEY: set(valley_hours),
        }
        seen: set[int] = set()
        for s in sets.values():
            if s & seen:
                raise ValueError("tariff hour sets overlap")
            seen |= s
        if seen != set(range(1, horizon + 1)):
            raise ValueError(f"tariff hours must cover 1..{horizon} exactly")
        level = {PEAK: peak_price, FLAT: flat_price, VALLEY: valley_price}
        kind, price = [], []
        for hour in range(1, horizon + 1):
            k = next(k for k, s in sets.items() if hour in s)
            kind.append(k)
            price.append(level[k])
        return cls(price=tuple(price), kind=tuple(kind), valley_price=valley_price)


@dataclass(frozen=True)
class PriceSignal:
    """Station-facing price and the surplus ratio it came from."""

    omega_rt: tuple[float, ...]
    k: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.omega_rt) != len(self.k):
            raise ValueError("price and ratio arrays differ in length")
        if any(p < 0 for p in self.omega_rt):
            raise ValueError("prices must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.omega_rt)

    @classmethod
    def tou(cls, tariff: TouTariff) -> "PriceSignal":
        """Pure TOU signal (ratio pinned at 1)."""
        return cls(omega_rt=tariff.price, k=(1.0,) * tariff.horizon)


def total_load(
    tsl_kw,
    fixed_kw,
    eil_kw,
    ess_ch_kw,
    ess_dc_kw,
    heat_kw,
    hil_kw,
    hsd_ch_kw,
    hsd_dc_kw,
    ev_ch_kw,
    ev_dc_kw,
) -> np.ndarray:
    """Community total load: electric bracket plus heat bracket minus the
    station's net discharge."""
    tsl = np.asarray(tsl_kw, dtype=float)
    out = (
        tsl
        + np.asarray(fixed_kw, dtype=float)
        - np.asarray(eil_kw, dtype=float)
        - np.asarray(ess_dc_kw, dtype=float)
        + np.asarray(ess_ch_kw, dtype=float)
        + np.asarray(heat_kw, dtype=float)
        - np.asarray(hil_kw, dtype=float)
        - np.asarray(hsd_dc_kw, dtype=float)
        + np.asarray(hsd_ch_kw, dtype=float)
        - (np.asarray(ev_dc_kw, dtype=float) - np.asarray(ev_ch_kw, dtype=float))
    )
    return out


def dynamic_price(p_load, e_rgs, tariff: TouTariff) -> PriceSignal:
    """Surplus-indexed price: TOU in deficit, scaled valley price in surplus.

    The ratio k is total load over expected renewable output, floored at
    zero (negative loads) and capped at one; a zero renewable expectation
    counts as deficit.
    """
    p = np.asarray(p_load, dtype=float)
    e = np.asarray(e_rgs, dtype=float)
    if p.shape != e.shape or p.size != tariff.horizon:
        raise ValueError("load, expectation and tariff horizons differ")
    ks, prices = [], []
    for t in range(p.size):
        if e[t] <= 0.0 or p[t] > e[t]:
            k = 1.0
            price = tariff.price[t]
        else:
            k = max(0.0, p[t] / e[t])
            price = k * tariff.valley_price
        ks.append(k)
        prices.append(price)
    return PriceSignal(omega_rt=tuple(prices), k=tuple(ks))

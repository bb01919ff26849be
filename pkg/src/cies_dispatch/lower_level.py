"""Station-side response: the charging station re-plans against the
community's posted price, surplus offer, deficit profile and reserve
request.

The fleet is one aggregate battery with a fixed capacity window; the
connected fraction scales the power caps, since stored energy arrives and
leaves with the vehicles.  Charging is sourced from the grid at
the tariff or from offered community surplus at the posted price;
discharging earns the posted price but only up to the community's grid
deficit; reserve earns its price up to the requested amount and the idle
discharge headroom.  Pile-count integers keep simultaneous charge and
discharge within the installed hardware.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cies_dispatch.milp import INTEGER, MilpModel, solve
from cies_dispatch.pricing import PriceSignal, TouTariff
from cies_dispatch.upper_level import EvScheme

__all__ = ["EvcsAssets", "LowerSolution", "build_lower", "solve_lower"]


@dataclass(frozen=True)
class EvcsAssets:
    """Station hardware and the aggregate fleet battery."""

    pile_count: int
    pile_power_kw: float
    pile_use_max: int
    p_ch_max_kw: float
    p_dc_max_kw: float
    c_min_kwh: float
    c_max_kwh: float
    eta_ch: float
    eta_dc: float
    grid_p_max_kw: float
    reserve_price: float
    daily_energy_max_kwh: float
    daily_energy_min_kwh: float | None = None
    dt_hours: float = 1.0

    def __post_init__(self) -> None:
        if self.pile_count < 0 or self.pile_use_max < 0:
            raise ValueError("pile counts must be non-negative")
        if self.pile_power_kw < 0 or self.p_ch_max_kw < 0 or self.p_dc_max_kw < 0:
            raise ValueError("power caps must be non-negative")
        if not 0 <= self.c_min_kwh <= self.c_max_kwh:
            raise ValueError("capacity window must satisfy min <= max")
        if not 0 < self.eta_ch <= 1 or not 0 < self.eta_dc <= 1:
            raise ValueError("efficiencies must lie in (0, 1]")
        if self.grid_p_max_kw <= 0:
            raise ValueError("grid cap must be positive")
        if self.reserve_price < 0:
            raise ValueError("reserve price must be non-negative")
        if self.daily_energy_max_kwh < 0:
            raise ValueError("daily energy cap must be non-negative")
        if self.dt_hours <= 0:
            raise ValueError("period length must be positive")


@dataclass
class LowerSolution:
    """Station schedule with its cost."""

    f2: float
    charge_kw: np.ndarray
    discharge_kw: np.ndarray
    grid_buy_kw: np.ndarray
    rg_buy_kw: np.ndarray
    reserve_kw: np.ndarray
    stored_kwh: np.ndarray
    piles_charging: np.ndarray
    piles_discharging: np.ndarray
    status: str = "optimal"

    @property
    def horizon(self) -> int:
        return self.charge_kw.size

    def to_scheme(self) -> EvScheme:
        # Snap solver residuals so the split adds up to charging exactly.
        charge = np.maximum(self.charge_kw, 0.0)
        rg = np.clip(self.rg_buy_kw, 0.0, charge)
        return EvScheme(
            charge_kw=tuple(float(v) for v in charge),
            discharge_kw=tuple(max(0.0, float(v)) for v in self.discharge_kw),
            reserve_kw=tuple(max(0.0, float(v)) for v in self.reserve_kw),
            grid_buy_kw=tuple(float(v) for v in charge - rg),
            rg_buy_kw=tuple(float(v) for v in rg),
        )


def build_lower(
    assets: EvcsAssets,
    tariff: TouTariff,
    price: PriceSignal,
    availability,
    cl_cap_kw,
    deficit_kw,
    reserve_request_kw,
    plug_energy_kwh: float,
    ev_reserves: bool = True,
    initial_scheme: EvScheme | None = None,
) -> MilpModel:
    """Assemble the station MILP for one round.

    ``availability`` is the connected share of the fleet per period;
    ``cl_cap_kw`` the community surplus on offer; ``deficit_kw`` the
    community's grid purchases the station may displace; ``plug_energy_kwh``
    the fleet's own charging requirement, used as the daily-energy floor
    when the assets do not fix one.  ``initial_scheme`` is the commitment
    the community planned around; the re-plan prices the same round, so it
    carries no constraint weight and is accepted only for interface parity.
    """
    del initial_scheme
    horizon = tariff.horizon
    frac = np.asarray(availability, dtype=float)
    cl_cap = np.asarray(cl_cap_kw, dtype=float)
    deficit = np.asarray(deficit_kw, dtype=float)
    request = np.asarray(reserve_request_kw, dtype=float)
    for name, arr in (
        ("availability", frac),
        ("surplus offer", cl_cap),
        ("deficit", deficit),
        ("reserve request", request),
    ):
        if arr.size != horizon:
            raise ValueError(f"{name} horizon {arr.size} != tariff horizon {horizon}")
    if price.horizon != horizon:
        raise ValueError(f"price horizon {price.horizon} != tariff horizon {horizon}")
    if np.any(frac < 0) or np.any(frac > 1):
        raise ValueError("availability must lie in [0, 1]")
    if np.any(cl_cap < -1e-9) or np.any(deficit < -1e-9) or np.any(request < -1e-9):
        raise ValueError("offers, deficits and requests must be non-negative")

    dt = assets.dt_hours
    m = MilpModel("station-response")
    piles_cap = min(assets.pile_count, assets.pile_use_max)

    ch, dc, grid, rg, res, cap, n_ch, n_dc = {}, {}, {}, {}, {}, {}, {}, {}
    for t in range(horizon):
        ch[t] = m.add_var(f"ch[{t}]", 0.0, assets.p_ch_max_kw * frac[t])
        dc[t] = m.add_var(
            f"dc[{t}]", 0.0, min(assets.p_dc_max_kw * frac[t], max(0.0, deficit[t]))
        )
        grid[t] = m.add_var(f"grid[{t}]", 0.0, assets.grid_p_max_kw)
        rg[t] = m.add_var(f"rg[{t}]", 0.0, max(0.0, cl_cap[t]))
        res_ub = max(0.0, request[t]) if ev_reserves else 0.0
        res[t] = m.add_var(f"res[{t}]", 0.0, res_ub)
        # The capacity window stays the rated fleet window: energy walks in
        # and out with the vehicles, so shrinking the window with
        # availability would force dispatch that never happened.  The
        # connected share shapes the power side instead.
        cap[t] = m.add_var(f"cap[{t}]", assets.c_min_kwh, assets.c_max_kwh)
        n_ch[t] = m.add_var(f"n_ch[{t}]", 0.0, piles_cap, INTEGER)
        n_dc[t] = m.add_var(f"n_dc[{t}]", 0.0, piles_cap, INTEGER)

        m.add_constr(
            f"purchase[{t}]", {ch[t]: 1.0, grid[t]: -1.0, rg[t]: -1.0}, "=", 0.0
        )
        m.add_constr(
            f"reserve_headroom[{t}]",
            {res[t]: 1.0, dc[t]: 1.0},
            "<=",
            assets.p_dc_max_kw * frac[t],
        )
        row = {cap[t]: 1.0, ch[t]: -assets.eta_ch * dt, dc[t]: dt / assets.eta_dc}
        if t == 0:
            rhs = assets.c_min_kwh
        else:
            row[cap[t - 1]] = -1.0
            rhs = 0.0
        m.add_constr(f"battery_dyn[{t}]", row, "=", rhs)
        m.add_constr(
            f"pile_ch[{t}]", {ch[t]: 1.0, n_ch[t]: -assets.pile_power_kw}, "<=", 0.0
        )
        m.add_constr(
            f"pile_dc[{t}]", {dc[t]: 1.0, n_dc[t]: -assets.pile_power_kw}, "<=", 0.0
        )
        m.add_constr(
            f"pile_total[{t}]", {n_ch[t]: 1.0, n_dc[t]: 1.0}, "<=", piles_cap
        )

    e_min = (
        assets.daily_energy_min_kwh
        if assets.daily_energy_min_kwh is not None
        else plug_energy_kwh
    )
    e_min = min(e_min, assets.daily_energy_max_kwh)
    m.add_constr(
        "daily_energy_lo", {ch[t]: dt for t in range(horizon)}, ">=", e_min
    )
    m.add_constr(
        "daily_energy_hi",
        {ch[t]: dt for t in range(horizon)},
        "<=",
        assets.daily_energy_max_kwh,
    )

    obj: dict[int, float] = {}
    for t in range(horizon):
        obj[grid[t]] = tariff.price[t] * dt
        obj[rg[t]] = price.omega_rt[t] * dt
        obj[dc[t]] = -price.omega_rt[t] * dt
        obj[res[t]] = -assets.reserve_price * dt
    m.set_objective(obj)
    return m


def solve_lower(
    model: MilpModel,
    horizon: int,
    backend=None,
    rel_gap: float = 1e-6,
    time_limit: float | None = None,
) -> LowerSolution:
    """Solve the station model and unpack the schedule."""
    sol = solve(model, backend=backend, rel_gap=rel_gap, time_limit=time_limit)

    def series(name: str) -> np.ndarray:
        return np.array([sol.values[f"{name}[{t}]"] for t in range(horizon)])

    return LowerSolution(
        f2=sol.objective,
        charge_kw=series("ch"),
        discharge_kw=series("dc"),
        grid_buy_kw=series("grid"),
        rg_buy_kw=series("rg"),
        reserve_kw=series("res"),
        stored_kwh=series("cap"),
        piles_charging=np.rint(series("n_ch")).astype(int),
        piles_discharging=np.rint(series("n_dc")).astype(int),
        status=sol.status,
    )

"""Scenario files: everything a run needs, in one YAML document.

A scenario bundles the tariff, renewable statistics, loads, comfort
parameters, asset fleet and solver settings.  Loading validates the whole
document and reports every problem at once rather than the first hit.
Renewable statistics may be given directly (Weibull shape/scale, Beta
alpha/beta) or as per-period moments, which are fitted at load time.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from cies_dispatch.demand_response import ComfortModel, LoadProfile, build_envelope
from cies_dispatch.lower_level import EvcsAssets
from cies_dispatch.pricing import TouTariff
from cies_dispatch.probseq import ProbSeq
from cies_dispatch.stochastic import (
    EvBehaviorModel,
    EvFleetSample,
    PvModel,
    WindModel,
    fit_beta_moments,
    fit_weibull_moments,
    joint_rg_sequence,
    pv_power_sequence,
    sample_ev_fleet,
    wind_power_sequence,
)
from cies_dispatch.upper_level import BoilerParams, CiesAssets, StorageParams

__all__ = [
    "ScenarioError",
    "bundled_scenario_path",
    "GridConfig",
    "ReservePrices",
    "DrConfig",
    "EvcsConfig",
    "SolverConfig",
    "Scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "load_scenario",
    "save_scenario",
    "renewable_sequences",
    "fleet_sample",
    "cies_assets",
    "evcs_assets",
    "flex_envelope",
]

FILE_HORIZON = 24


def bundled_scenario_path(name: str = "north_china_winter") -> Path:
    """Path of a scenario file shipped inside the package."""
    path = Path(__file__).parent / "data" / f"{name}.yaml"
    if not path.exists():
        available = sorted(p.stem for p in path.parent.glob("*.yaml"))
        raise FileNotFoundError(f"no bundled scenario {name!r}; have {available}")
    return path


class ScenarioError(ValueError):
    """Scenario document rejected; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("\n".join(errors))


@dataclass(frozen=True)
class GridConfig:
    p_max_kw: float

    def __post_init__(self) -> None:
        if self.p_max_kw <= 0:
            raise ValueError("grid p_max_kw must be positive")


@dataclass(frozen=True)
class ReservePrices:
    grid: float
    ess: float
    ev: float

    def __post_init__(self) -> None:
        if min(self.grid, self.ess, self.ev) < 0:
            raise ValueError("reserve prices must be non-negative")


@dataclass(frozen=True)
class DrConfig:
    shift_fraction: float
    eil_fraction: float
    hil_fraction: float
    comp_electric: float = 0.4
    comp_heat: float = 0.2

    def __post_init__(self) -> None:
        for name in ("shift_fraction", "eil_fraction", "hil_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.comp_electric < 0 or self.comp_heat < 0:
            raise ValueError("compensation prices must be non-negative")


@dataclass(frozen=True)
class EvcsConfig:
    fleet_size: int
    battery_kwh: float
    soc_min: float
    soc_max: float
    pile_count: int
    pile_power_kw: float
    pile_use_max: int
    p_ch_max_kw: float
    p_dc_max_kw: float
    eta_ch: float
    eta_dc: float
    daily_energy_max_kwh: float
    daily_energy_min_kwh: float | None = None

    def __post_init__(self) -> None:
        if self.fleet_size <= 0 or self.battery_kwh <= 0:
            raise ValueError("fleet size and battery capacity must be positive")
        if not 0 <= self.soc_min <= self.soc_max <= 1:
            raise ValueError("state-of-charge window must satisfy 0 <= lo <= hi <= 1")

    @property
    def c_min_kwh(self) -> float:
        return self.soc_min * self.fleet_size * self.battery_kwh

    @property
    def c_max_kwh(self) -> float:
        return self.soc_max * self.fleet_size * self.battery_kwh


@dataclass(frozen=True)
class SolverConfig:
    step_q: float = 5.0
    alpha: float = 0.9
    max_iters: int = 10
    seed: int = 42
    mc_samples: int = 1000
    rel_gap: float = 1e-6

    def __post_init__(self) -> None:
        if self.step_q <= 0:
            raise ValueError("step_q must be positive")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.max_iters < 1 or self.mc_samples < 1:
            raise ValueError("iteration and sample counts must be positive")


@dataclass(frozen=True)
class Scenario:
    name: str
    tariff: TouTariff
    grid: GridConfig
    reserve: ReservePrices
    wind: WindModel
    pv: PvModel
    loads: LoadProfile
    comfort: ComfortModel
    ess: StorageParams
    hsd: StorageParams
    boiler: BoilerParams
    dr: DrConfig
    ev_behavior: EvBehaviorModel
    evcs: EvcsConfig
    solver: SolverConfig

    @property
    def horizon(self) -> int:
        return self.loads.horizon


# ------------------------------------------------------------------ parsing


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise KeyError(f"{where}: missing key {key!r}")
    return section[key]


def _floats(raw, where: str) -> tuple[float, ...]:
    if not isinstance(raw, (list, tuple)):
        raise ValueError(f"{where}: expected a list")
    return tuple(float(v) for v in raw)


def _parse_tariff(sec: dict) -> TouTariff:
    horizon = int(sec.get("horizon", FILE_HORIZON))
    return TouTariff.from_hours(
        _require(sec, "peak_hours", "tariff"),
        _require(sec, "flat_hours", "tariff"),
        _require(sec, "valley_hours", "tariff"),
        peak_price=float(_require(sec, "peak_price", "tariff")),
        flat_price=float(_require(sec, "flat_price", "tariff")),
        valley_price=float(_require(sec, "valley_price", "tariff")),
        horizon=horizon,
    )


def _parse_wind(sec: dict) -> WindModel:
    if "shape" in sec or "scale" in sec:
        shape = _floats(_require(sec, "shape", "wind"), "wind.shape")
        scale = _floats(_require(sec, "scale", "wind"), "wind.scale")
    else:
        mean = _floats(_require(sec, "speed_mean", "wind"), "wind.speed_mean")
        std = _floats(_require(sec, "speed_std", "wind"), "wind.speed_std")
        if len(mean) != len(std):
            raise ValueError("wind: speed_mean and speed_std differ in length")
        fitted = [fit_weibull_moments(m, s) for m, s in zip(mean, std)]
        shape = tuple(k for k, _ in fitted)
        scale = tuple(c for _, c in fitted)
    return WindModel(
        v_in=float(_require(sec, "v_in", "wind")),
        v_rated=float(_require(sec, "v_rated", "wind")),
        v_out=float(_require(sec, "v_out", "wind")),
        p_rated=float(_require(sec, "p_rated", "wind")),
        shape=shape,
        scale=scale,
    )


def _parse_pv(sec: dict) -> PvModel:
    if "alpha" in sec or "beta" in sec:
        alpha = _floats(_require(sec, "alpha", "pv"), "pv.alpha")
        beta = _floats(_require(sec, "beta", "pv"), "pv.beta")
    else:
        mean = _floats(_require(sec, "irradiance_mean", "pv"), "pv.irradiance_mean")
        std = _floats(_require(sec, "irradiance_std", "pv"), "pv.irradiance_std")
        if len(mean) != len(std):
            raise ValueError("pv: irradiance_mean and irradiance_std differ in length")
        fitted = [fit_beta_moments(m, s) for m, s in zip(mean, std)]
        alpha = tuple(a for a, _ in fitted)
        beta = tuple(b for _, b in fitted)
    return PvModel(
        efficiency=float(_require(sec, "efficiency", "pv")),
        area=float(_require(sec, "area", "pv")),
        p_max=float(_require(sec, "p_max", "pv")),
        g_max=float(_require(sec, "g_max", "pv")),
        alpha=alpha,
        beta=beta,
    )


def _parse_comfort(sec: dict) -> ComfortModel:
    kwargs = {"outdoor_temp_c": _floats(_require(sec, "outdoor_temp_c", "comfort"), "comfort")}
    for key in (
        "heat_transfer_w_per_m2k",
        "surface_area_m2",
        "indoor_setpoint_c",
        "metabolic_rate",
        "clothing_clo",
        "skin_temp_c",
        "pmv_limit_day",
        "pmv_limit_night",
    ):
        if key in sec:
            kwargs[key] = float(sec[key])
    return ComfortModel(**kwargs)


def _parse_loads(sec: dict, comfort: ComfortModel) -> LoadProfile:
    electric = _floats(_require(sec, "electric_kw", "loads"), "loads.electric_kw")
    fixed = _floats(sec.get("fixed_kw", electric), "loads.fixed_kw")
    if "heat_kw" in sec:
        heat = _floats(sec["heat_kw"], "loads.heat_kw")
    else:
        coef = comfort.heat_transfer_w_per_m2k * comfort.surface_area_m2 / 1000.0
        heat = tuple(
            max(0.0, coef * (comfort.indoor_setpoint_c - t_out))
            for t_out in comfort.outdoor_temp_c
        )
    return LoadProfile(fixed_kw=fixed, electric_kw=electric, heat_kw=heat)


def _parse_storage(sec: dict, where: str) -> StorageParams:
    return StorageParams(
        c_min_kwh=float(_require(sec, "c_min_kwh", where)),
        c_max_kwh=float(_require(sec, "c_max_kwh", where)),
        c_init_kwh=float(_require(sec, "c_init_kwh", where)),
        p_ch_max_kw=float(_require(sec, "p_ch_max_kw", where)),
        p_dc_max_kw=float(_require(sec, "p_dc_max_kw", where)),
        eta_ch=float(_require(sec, "eta_ch", where)),
        eta_dc=float(_require(sec, "eta_dc", where)),
        depreciation=float(sec.get("depreciation", 0.0)),
    )


def _parse_behavior(sec: dict, fleet_size: int) -> EvBehaviorModel:
    kwargs = dict(
        fleet_size=fleet_size,
        battery_kwh=float(_require(sec, "battery_kwh", "ev_behavior")),
        energy_per_100km_kwh=float(_require(sec, "energy_per_100km_kwh", "ev_behavior")),
        p_rated_kw=float(_require(sec, "p_rated_kw", "ev_behavior")),
        eta_ch=float(_require(sec, "eta_ch", "ev_behavior")),
        eta_dc=float(_require(sec, "eta_dc", "ev_behavior")),
    )
    for key in (
        "arrival_mean_h",
        "arrival_std_h",
        "departure_mean_h",
        "departure_std_h",
        "mileage_log_mean",
        "mileage_log_std",
        "soc_initial_low",
        "soc_initial_high",
    ):
        if key in sec:
            kwargs[key] = float(sec[key])
    return EvBehaviorModel(**kwargs)


def scenario_from_dict(doc: dict, expect_horizon: int | None = FILE_HORIZON) -> Scenario:
    """Build a scenario, collecting every violation before failing."""
    errors: list[str] = []
    parts: dict[str, object] = {}

    def section(key: str, parser, *args):
        if key not in doc:
            errors.append(f"missing section {key!r}")
            return None
        try:
            parts[key] = parser(doc[key], *args)
            return parts[key]
        except (KeyError, ValueError, TypeError) as exc:
            errors.append(f"{key}: {exc}")
            return None

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        errors.append("missing or empty scenario name")

    section("tariff", _parse_tariff)
    section("grid", lambda s: GridConfig(p_max_kw=float(_require(s, "p_max_kw", "grid"))))
    section(
        "reserve",
        lambda s: ReservePrices(
            grid=float(_require(s, "grid", "reserve")),
            ess=float(_require(s, "ess", "reserve")),
            ev=float(_require(s, "ev", "reserve")),
        ),
    )
    section("wind", _parse_wind)
    section("pv", _parse_pv)
    comfort = section("comfort", _parse_comfort)
    if comfort is not None:
        section("loads", _parse_loads, comfort)
    elif "loads" not in doc:
        errors.append("missing section 'loads'")
    section("ess", _parse_storage, "ess")
    section("hsd", _parse_storage, "hsd")
    section(
        "boiler",
        lambda s: BoilerParams(
            count=int(_require(s, "count", "boiler")),
            p_heat_max_kw=float(_require(s, "p_heat_max_kw", "boiler")),
            efficiency=float(_require(s, "efficiency", "boiler")),
        ),
    )
    section(
        "dr",
        lambda s: DrConfig(
            shift_fraction=float(_require(s, "shift_fraction", "dr")),
            eil_fraction=float(_require(s, "eil_fraction", "dr")),
            hil_fraction=float(_require(s, "hil_fraction", "dr")),
            comp_electric=float(s.get("comp_electric", 0.4)),
            comp_heat=float(s.get("comp_heat", 0.2)),
        ),
    )
    evcs = section(
        "evcs",
        lambda s: EvcsConfig(
            fleet_size=int(_require(s, "fleet_size", "evcs")),
            battery_kwh=float(_require(s, "battery_kwh", "evcs")),
            soc_min=float(_require(s, "soc_min", "evcs")),
            soc_max=float(_require(s, "soc_max", "evcs")),
            pile_count=int(_require(s, "pile_count", "evcs")),
            pile_power_kw=float(_require(s, "pile_power_kw", "evcs")),
            pile_use_max=int(_require(s, "pile_use_max", "evcs")),
            p_ch_max_kw=float(_require(s, "p_ch_max_kw", "evcs")),
            p_dc_max_kw=float(_require(s, "p_dc_max_kw", "evcs")),
            eta_ch=float(_require(s, "eta_ch", "evcs")),
            eta_dc=float(_require(s, "eta_dc", "evcs")),
            daily_energy_max_kwh=float(_require(s, "daily_energy_max_kwh", "evcs")),
            daily_energy_min_kwh=(
                float(s["daily_energy_min_kwh"])
                if s.get("daily_energy_min_kwh") is not None
                else None
            ),
        ),
    )
    if evcs is not None:
        section("ev_behavior", _parse_behavior, evcs.fleet_size)
    elif "ev_behavior" not in doc:
        errors.append("missing section 'ev_behavior'")
    if "solver" in doc:
        section("solver", lambda s: SolverConfig(**{k: v for k, v in s.items()}))
    else:
        parts["solver"] = SolverConfig()

    # Cross-section horizon agreement.
    lengths = {}
    if "tariff" in parts:
        lengths["tariff"] = parts["tariff"].horizon
    if "wind" in parts:
        lengths["wind"] = parts["wind"].horizon
    if "pv" in parts:
        lengths["pv"] = parts["pv"].horizon
    if "loads" in parts:
        lengths["loads"] = parts["loads"].horizon
    if "comfort" in parts:
        lengths["comfort"] = len(parts["comfort"].outdoor_temp_c)
    if lengths:
        horizons = set(lengths.values())
        if len(horizons) > 1:
            errors.append(f"sections disagree on horizon: {lengths}")
        elif expect_horizon is not None and horizons != {expect_horizon}:
            errors.append(
                f"scenario horizon must be {expect_horizon}, got {horizons.pop()}"
            )

    if errors:
        raise ScenarioError(errors)
    return Scenario(name=name, **parts)  # type: ignore[arg-type]


def scenario_to_dict(sc: Scenario) -> dict:
    """Plain-dict form; renewable statistics come out as fitted parameters."""
    kinds = {"peak": [], "flat": [], "valley": []}
    for h, k in enumerate(sc.tariff.kind, start=1):
        kinds[k].append(h)
    prices = {k: None for k in kinds}
    for p, k in zip(sc.tariff.price, sc.tariff.kind):
        prices[k] = p
    return {
        "name": sc.name,
        "tariff": {
            "horizon": sc.tariff.horizon,
            "peak_hours": kinds["peak"],
            "flat_hours": kinds["flat"],
            "valley_hours": kinds["valley"],
            "peak_price": prices["peak"] if prices["peak"] is not None else sc.tariff.valley_price,
            "flat_price": prices["flat"] if prices["flat"] is not None else sc.tariff.valley_price,
            "valley_price": sc.tariff.valley_price,
        },
        "grid": {"p_max_kw": sc.grid.p_max_kw},
        "reserve": {"grid": sc.reserve.grid, "ess": sc.reserve.ess, "ev": sc.reserve.ev},
        "wind": {
            "v_in": sc.wind.v_in,
            "v_rated": sc.wind.v_rated,
            "v_out": sc.wind.v_out,
            "p_rated": sc.wind.p_rated,
            "shape": list(sc.wind.shape),
            "scale": list(sc.wind.scale),
        },
        "pv": {
            "efficiency": sc.pv.efficiency,
            "area": sc.pv.area,
            "p_max": sc.pv.p_max,
            "g_max": sc.pv.g_max,
            "alpha": list(sc.pv.alpha),
            "beta": list(sc.pv.beta),
        },
        "loads": {
            "electric_kw": list(sc.loads.electric_kw),
            "fixed_kw": list(sc.loads.fixed_kw),
            "heat_kw": list(sc.loads.heat_kw),
        },
        "comfort": {
            "outdoor_temp_c": list(sc.comfort.outdoor_temp_c),
            "heat_transfer_w_per_m2k": sc.comfort.heat_transfer_w_per_m2k,
            "surface_area_m2": sc.comfort.surface_area_m2,
            "indoor_setpoint_c": sc.comfort.indoor_setpoint_c,
            "metabolic_rate": sc.comfort.metabolic_rate,
            "clothing_clo": sc.comfort.clothing_clo,
            "skin_temp_c": sc.comfort.skin_temp_c,
            "pmv_limit_day": sc.comfort.pmv_limit_day,
            "pmv_limit_night": sc.comfort.pmv_limit_night,
        },
        "ess": _storage_dict(sc.ess),
        "hsd": _storage_dict(sc.hsd),
        "boiler": {
            "count": sc.boiler.count,
            "p_heat_max_kw": sc.boiler.p_heat_max_kw,
            "efficiency": sc.boiler.efficiency,
        },
        "dr": {
            "shift_fraction": sc.dr.shift_fraction,
            "eil_fraction": sc.dr.eil_fraction,
            "hil_fraction": sc.dr.hil_fraction,
            "comp_electric": sc.dr.comp_electric,
            "comp_heat": sc.dr.comp_heat,
        },
        "evcs": {
            "fleet_size": sc.evcs.fleet_size,
            "battery_kwh": sc.evcs.battery_kwh,
            "soc_min": sc.evcs.soc_min,
            "soc_max": sc.evcs.soc_max,
            "pile_count": sc.evcs.pile_count,
            "pile_power_kw": sc.evcs.pile_power_kw,
            "pile_use_max": sc.evcs.pile_use_max,
            "p_ch_max_kw": sc.evcs.p_ch_max_kw,
            "p_dc_max_kw": sc.evcs.p_dc_max_kw,
            "eta_ch": sc.evcs.eta_ch,
            "eta_dc": sc.evcs.eta_dc,
            "daily_energy_max_kwh": sc.evcs.daily_energy_max_kwh,
            "daily_energy_min_kwh": sc.evcs.daily_energy_min_kwh,
        },
        "ev_behavior": {
            "battery_kwh": sc.ev_behavior.battery_kwh,
            "energy_per_100km_kwh": sc.ev_behavior.energy_per_100km_kwh,
            "p_rated_kw": sc.ev_behavior.p_rated_kw,
            "eta_ch": sc.ev_behavior.eta_ch,
            "eta_dc": sc.ev_behavior.eta_dc,
            "arrival_mean_h": sc.ev_behavior.arrival_mean_h,
            "arrival_std_h": sc.ev_behavior.arrival_std_h,
            "departure_mean_h": sc.ev_behavior.departure_mean_h,
            "departure_std_h": sc.ev_behavior.departure_std_h,
            "mileage_log_mean": sc.ev_behavior.mileage_log_mean,
            "mileage_log_std": sc.ev_behavior.mileage_log_std,
            "soc_initial_low": sc.ev_behavior.soc_initial_low,
            "soc_initial_high": sc.ev_behavior.soc_initial_high,
        },
        "solver": {
            "step_q": sc.solver.step_q,
            "alpha": sc.solver.alpha,
            "max_iters": sc.solver.max_iters,
            "seed": sc.solver.seed,
            "mc_samples": sc.solver.mc_samples,
            "rel_gap": sc.solver.rel_gap,
        },
    }


def _storage_dict(p: StorageParams) -> dict:
    return {
        "c_min_kwh": p.c_min_kwh,
        "c_max_kwh": p.c_max_kwh,
        "c_init_kwh": p.c_init_kwh,
        "p_ch_max_kw": p.p_ch_max_kw,
        "p_dc_max_kw": p.p_dc_max_kw,
        "eta_ch": p.eta_ch,
        "eta_dc": p.eta_dc,
        "depreciation": p.depreciation,
    }


def load_scenario(path, expect_horizon: int | None = FILE_HORIZON) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"not valid YAML: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario document must be a mapping"])
    return scenario_from_dict(doc, expect_horizon=expect_horizon)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(
        yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, width=100)
    )


# --------------------------------------------------------------- derivation


def renewable_sequences(sc: Scenario, step_q: float | None = None) -> list[ProbSeq]:
    """Joint renewable distribution per period at the dispatch step."""
    q = step_q if step_q is not None else sc.solver.step_q
    return [
        joint_rg_sequence(
            wind_power_sequence(sc.wind, t, q), pv_power_sequence(sc.pv, t, q)
        )
        for t in range(sc.horizon)
    ]


def fleet_sample(sc: Scenario, seed: int | None = None) -> EvFleetSample:
    return sample_ev_fleet(
        sc.ev_behavior,
        sc.solver.mc_samples,
        sc.solver.seed if seed is None else seed,
        horizon=sc.horizon,
    )


def cies_assets(sc: Scenario) -> CiesAssets:
    return CiesAssets(
        grid_p_max_kw=sc.grid.p_max_kw,
        reserve_price_grid=sc.reserve.grid,
        reserve_price_ess=sc.reserve.ess,
        reserve_price_ev=sc.reserve.ev,
        ess=sc.ess,
        hsd=sc.hsd,
        boiler=sc.boiler,
        comp_electric=sc.dr.comp_electric,
        comp_heat=sc.dr.comp_heat,
    )


def evcs_assets(sc: Scenario) -> EvcsAssets:
    return EvcsAssets(
        pile_count=sc.evcs.pile_count,
        pile_power_kw=sc.evcs.pile_power_kw,
        pile_use_max=sc.evcs.pile_use_max,
        p_ch_max_kw=sc.evcs.p_ch_max_kw,
        p_dc_max_kw=sc.evcs.p_dc_max_kw,
        c_min_kwh=sc.evcs.c_min_kwh,
        c_max_kwh=sc.evcs.c_max_kwh,
        eta_ch=sc.evcs.eta_ch,
        eta_dc=sc.evcs.eta_dc,
        grid_p_max_kw=sc.grid.p_max_kw,
        reserve_price=sc.reserve.ev,
        daily_energy_max_kwh=sc.evcs.daily_energy_max_kwh,
        daily_energy_min_kwh=sc.evcs.daily_energy_min_kwh,
    )


def flex_envelope(sc: Scenario):
    return build_envelope(
        sc.loads,
        sc.comfort,
        shift_fraction=sc.dr.shift_fraction,
        eil_fraction=sc.dr.eil_fraction,
        hil_fraction=sc.dr.hil_fraction,
    )

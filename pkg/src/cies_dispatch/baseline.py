"""Heuristic baseline: the same alternation with particle swarms per level.

Replaces each exact MILP solve with a PSO over a decoded particle space.
The decoder builds a feasible schedule from box-constrained positions:
shiftable load is projected onto its zero-sum hyperplane, storage is
encoded as a capacity trajectory and clipped against rate limits and the
cyclic boundary, the boiler and the purchase split follow in closed form,
and reserve is allocated in merit order.  What cannot be repaired in
closed form (bus deficits, boiler saturation, interconnection overflow,
reserve shortfall, pile and daily-energy windows) is penalized, and only
particles with zero violation are eligible for the reported schedule, so
the penalty weight only steers the search.

The chance constraint is handled by simulation instead of the exact
coverage rows: per-period shortfall samples are drawn from the discrete
renewable distribution and the reserve requirement is their empirical
confidence quantile, floored at the exact quantile so the heuristic
solves a restriction of the exact model and can never undercut it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from cies_dispatch.coordinator import DispatchInfeasible, IterationRecord, RunResult
from cies_dispatch.lower_level import EvcsAssets, LowerSolution
from cies_dispatch.pricing import PriceSignal, TouTariff, dynamic_price, total_load
from cies_dispatch.probseq import ProbSeq
from cies_dispatch.results import _atomic_write, _csv, fmt
from cies_dispatch.scenario import (
    Scenario,
    cies_assets,
    evcs_assets,
    fleet_sample,
    flex_envelope,
    renewable_sequences,
)
from cies_dispatch.upper_level import CiesAssets, EvScheme, UpperSolution

__all__ = ["PsoConfig", "HiaInfeasible", "HiaBatch", "solve_hia", "hia_batch"]

FEAS_TOL = 1e-6


class HiaInfeasible(DispatchInfeasible):
    """The swarm produced no violation-free particle within its budget."""

    def __init__(self, level: str, iteration: int, best_violation: float):
        self.best_violation = best_violation
        super().__init__(
            level,
            iteration,
            [f"no feasible particle; best remaining violation {best_violation:.3g}"],
        )


@dataclass(frozen=True)
class PsoConfig:
    """Swarm budget and dynamics; textbook settings, all overridable."""

    swarm: int = 50
    iters: int = 300
    inertia: float = 0.7
    c1: float = 1.5
    c2: float = 1.5
    mc_samples: int = 500
    penalty: float = 1e3
    vmax: float = 0.25

    def __post_init__(self) -> None:
        if self.swarm < 2 or self.iters < 1 or self.mc_samples < 1:
            raise ValueError("swarm, iteration and sample budgets must be positive")
        if not 0 < self.inertia <= 1:
            raise ValueError("inertia must lie in (0, 1]")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("acceleration coefficients must be non-negative")
        if self.penalty <= 0 or self.vmax <= 0:
            raise ValueError("penalty weight and velocity cap must be positive")


def mcs_reserve_requirement(
    seqs: list[ProbSeq], alpha: float, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-period reserve requirement from simulated shortfalls.

    Samples each period's output distribution, takes the empirical alpha
    quantile of the shortfall (expectation minus output) and floors it at
    the exact distribution quantile: the sampled estimate keeps the MCS
    character of the heuristic while the floor keeps its feasible set
    inside the exact model's.
    """
    out = np.zeros(len(seqs))
    for t, seq in enumerate(seqs):
        states = np.arange(seq.probs.size) * seq.step_q
        draws = rng.choice(states, size=n_samples, p=seq.probs / seq.probs.sum())
        shortfall = np.sort(seq.expectation() - draws)
        k = min(n_samples - 1, max(0, math.ceil(alpha * n_samples) - 1))
        empirical = shortfall[k]
        out[t] = max(0.0, empirical, seq.reserve_quantile(alpha))
    return out


def project_zero_sum(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Clip rows of ``x`` to [lo, hi] and shift them onto sum zero.

    The shift is proportional to each entry's remaining slack in the
    needed direction, which lands exactly on the hyperplane in one pass
    without leaving the box (the box contains zero, so the plane is
    always reachable).
    """
    x = np.clip(x, lo, hi)
    excess = x.sum(axis=1)
    slack_dn = x - lo
    slack_up = hi - x
    total_dn = slack_dn.sum(axis=1)
    total_up = slack_up.sum(axis=1)
    shrink = np.where((excess > 0) & (total_dn > 0), excess / np.maximum(total_dn, 1e-12), 0.0)
    grow = np.where((excess < 0) & (total_up > 0), -excess / np.maximum(total_up, 1e-12), 0.0)
    return x - shrink[:, None] * slack_dn + grow[:, None] * slack_up


def decode_trajectory(
    raw: np.ndarray,
    c_start: float,
    c_min: float,
    c_max: float,
    up: np.ndarray,
    down: np.ndarray,
    c_end: float | None = None,
) -> np.ndarray:
    """Clip a raw capacity trajectory against rate limits per period.

    ``up``/``down`` are the largest per-period energy gains and drops,
    either (T,) or per-particle (S, T).  With ``c_end`` set, a backward
    reachability envelope pins the final period, and staying put is always
    admissible, so the clip window never empties.
    """
    swarm, horizon = raw.shape
    up = np.broadcast_to(up, raw.shape)
    down = np.broadcast_to(down, raw.shape)
    lo_env = np.full(raw.shape, c_min)
    hi_env = np.full(raw.shape, c_max)
    if c_end is not None:
        lo_env[:, -1] = c_end
        hi_env[:, -1] = c_end
        for t in range(horizon - 1, 0, -1):
            lo_env[:, t - 1] = np.maximum(c_min, lo_env[:, t] - up[:, t])
            hi_env[:, t - 1] = np.minimum(c_max, hi_env[:, t] + down[:, t])
    traj = np.empty_like(raw)
    prev = np.full(swarm, c_start)
    for t in range(horizon):
        lo = np.maximum(prev - down[:, t], lo_env[:, t])
        hi = np.minimum(prev + up[:, t], hi_env[:, t])
        traj[:, t] = np.clip(raw[:, t], lo, np.maximum(lo, hi))
        prev = traj[:, t]
    return traj


def _steps_to_flows(
    traj: np.ndarray, c_start: float, eta_ch: float, eta_dc: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    prev = np.concatenate([np.full((traj.shape[0], 1), c_start), traj[:, :-1]], axis=1)
    delta = traj - prev
    charge = np.maximum(delta, 0.0) / (eta_ch * dt)
    discharge = np.maximum(-delta, 0.0) * eta_dc / dt
    return charge, discharge


@dataclass
class UpperContext:
    """Fixed data for one round of the community decode."""

    assets: CiesAssets
    fixed_kw: np.ndarray
    heat_kw: np.ndarray
    shift_min: np.ndarray
    shift_max: np.ndarray
    eil_max: np.ndarray
    hil_max: np.ndarray
    tariff_price: np.ndarray
    omega_prev: np.ndarray
    e_rgs: np.ndarray
    requirement: np.ndarray
    ev_cap: np.ndarray
    scheme: EvScheme

    @property
    def horizon(self) -> int:
        return self.fixed_kw.size

    @property
    def dims(self) -> int:
        # tsl, eil, hil boxes plus both storage trajectories with their
        # final period pinned by the cyclic boundary.
        return 5 * self.horizon - 2

    def seed_particle(self) -> np.ndarray:
        """Raw position decoding to the do-nothing dispatch."""
        span = self.shift_max - self.shift_min
        tsl = np.where(span > 0, -self.shift_min / np.maximum(span, 1e-12), 0.5)
        n = self.horizon
        raw = np.zeros(self.dims)
        raw[:n] = tsl
        ess, hsd = self.assets.ess, self.assets.hsd
        ess_raw = (ess.c_init_kwh - ess.c_min_kwh) / max(ess.c_max_kwh - ess.c_min_kwh, 1e-12)
        hsd_raw = (hsd.c_init_kwh - hsd.c_min_kwh) / max(hsd.c_max_kwh - hsd.c_min_kwh, 1e-12)
        raw[3 * n : 4 * n - 1] = ess_raw
        raw[4 * n - 1 :] = hsd_raw
        return raw


def decode_upper(raw: np.ndarray, ctx: UpperContext) -> dict:
    """Map raw positions to community schedules, costs and violations."""
    a = ctx.assets
    n = ctx.horizon
    dt = a.dt_hours
    swarm = raw.shape[0]
    scheme_dc = np.asarray(ctx.scheme.discharge_kw)
    scheme_ch = np.asarray(ctx.scheme.charge_kw)

    tsl = project_zero_sum(
        ctx.shift_min + raw[:, :n] * (ctx.shift_max - ctx.shift_min),
        ctx.shift_min,
        ctx.shift_max,
    )
    eil = raw[:, n : 2 * n] * ctx.eil_max
    hil = raw[:, 2 * n : 3 * n] * ctx.hil_max

    # Heat side first: the boiler's electric draw feeds the electric bus.
    # The particle carries T-1 free capacity points; the last column is a
    # dummy pinned to the cyclic boundary by the decoder's envelope.
    hsd = a.hsd
    hsd_raw = np.concatenate(
        [
            hsd.c_min_kwh + raw[:, 4 * n - 1 :] * (hsd.c_max_kwh - hsd.c_min_kwh),
            np.full((swarm, 1), hsd.c_init_kwh),
        ],
        axis=1,
    )
    hsd_traj = decode_trajectory(
        hsd_raw,
        hsd.c_init_kwh,
        hsd.c_min_kwh,
        hsd.c_max_kwh,
        np.full(n, hsd.eta_ch * hsd.p_ch_max_kw * dt),
        np.full(n, hsd.p_dc_max_kw * dt / hsd.eta_dc),
        c_end=hsd.c_init_kwh,
    )
    hsd_ch, hsd_dc = _steps_to_flows(hsd_traj, hsd.c_init_kwh, hsd.eta_ch, hsd.eta_dc, dt)

    boiler_cap = a.boiler.count * a.boiler.p_heat_max_kw / a.boiler.efficiency
    dhp_raw = (ctx.heat_kw - hil - hsd_dc + hsd_ch) / a.boiler.efficiency
    dhp = np.clip(dhp_raw, 0.0, boiler_cap)
    heat_viol = a.boiler.efficiency * np.abs(dhp - dhp_raw)

    # Electric bus demand before storage; its sign limits battery discharge.
    d0 = ctx.fixed_kw + tsl - eil + dhp - scheme_dc
    ess = a.ess
    ess_raw = np.concatenate(
        [
            ess.c_min_kwh + raw[:, 3 * n : 4 * n - 1] * (ess.c_max_kwh - ess.c_min_kwh),
            np.full((swarm, 1), ess.c_init_kwh),
        ],
        axis=1,
    )
    ess_traj = decode_trajectory(
        ess_raw,
        ess.c_init_kwh,
        ess.c_min_kwh,
        ess.c_max_kwh,
        np.full((swarm, n), ess.eta_ch * ess.p_ch_max_kw * dt),
        np.minimum(ess.p_dc_max_kw, np.maximum(d0, 0.0)) * dt / ess.eta_dc,
        c_end=ess.c_init_kwh,
    )
    ess_ch, ess_dc = _steps_to_flows(ess_traj, ess.c_init_kwh, ess.eta_ch, ess.eta_dc, dt)

    demand = d0 - ess_dc
    bus_viol = np.maximum(-demand, 0.0)
    demand = np.maximum(demand, 0.0)

    # Own renewables are free; spend them on the bus, then storage, then
    # the station, and only buy the remainder.
    if ctx.scheme.rg_buy_kw is not None:
        rg_ev = np.broadcast_to(np.asarray(ctx.scheme.rg_buy_kw), demand.shape).copy()
        rg_avail = np.maximum(ctx.e_rgs - rg_ev, 0.0)
    else:
        rg_ev = None
        rg_avail = np.broadcast_to(ctx.e_rgs, demand.shape).copy()
    rg_load = np.minimum(demand, rg_avail)
    grid_bus = demand - rg_load
    rg_left = rg_avail - rg_load
    rg_ess = np.minimum(ess_ch, rg_left)
    grid_ess = ess_ch - rg_ess
    rg_left = rg_left - rg_ess
    if rg_ev is None:
        rg_ev = np.minimum(scheme_ch, rg_left)
        rg_left = rg_left - rg_ev
    surplus = rg_left

    relay = scheme_ch - rg_ev
    grid_cap_viol = np.maximum(grid_bus + grid_ess + relay - a.grid_p_max_kw, 0.0)

    # Merit-order reserve: the station's offer is cheapest but shrinks by
    # this period's own purchases (the purchase is re-offered as deficit
    # and the station sells energy into it before reserve), then grid,
    # then the battery's unused discharge headroom and stored energy.
    need = np.broadcast_to(ctx.requirement, demand.shape)
    r_ev = np.minimum(need, np.maximum(ctx.ev_cap - grid_bus, 0.0))
    rem = need - r_ev
    r_grid = np.minimum(rem, np.maximum(a.grid_p_max_kw - relay - grid_bus - grid_ess, 0.0))
    rem = rem - r_grid
    c_prev = np.concatenate([np.full((swarm, 1), ess.c_init_kwh), ess_traj[:, :-1]], axis=1)
    r_ess_cap = np.minimum(
        ess.p_dc_max_kw - ess_dc, ess.eta_dc * (c_prev - ess.c_min_kwh) / dt
    )
    r_ess = np.minimum(rem, np.maximum(r_ess_cap, 0.0))
    reserve_gap = rem - r_ess

    f1 = dt * (
        (ctx.tariff_price * (grid_bus + grid_ess)).sum(axis=1)
        + a.reserve_price_grid * r_grid.sum(axis=1)
        + a.reserve_price_ess * r_ess.sum(axis=1)
        + a.reserve_price_ev * r_ev.sum(axis=1)
        + ess.depreciation * ess_ch.sum(axis=1)
        + a.comp_electric * eil.sum(axis=1)
        + a.comp_heat * hil.sum(axis=1)
        + (ctx.omega_prev * (scheme_dc - rg_ev)).sum(axis=1)
    )
    viol = dt * (bus_viol + heat_viol + grid_cap_viol + reserve_gap).sum(axis=1)
    return {
        "cost": f1,
        "viol": viol,
        "tsl": tsl,
        "eil": eil,
        "hil": hil,
        "grid_bus": grid_bus,
        "grid_ess": grid_ess,
        "rg_load": rg_load,
        "rg_ess": rg_ess,
        "rg_ev": rg_ev,
        "surplus": surplus,
        "ess_ch": ess_ch,
        "ess_dc": ess_dc,
        "ess_traj": ess_traj,
        "hsd_ch": hsd_ch,
        "hsd_dc": hsd_dc,
        "hsd_traj": hsd_traj,
        "dhp": dhp,
        "r_grid": r_grid,
        "r_ess": r_ess,
        "r_ev": r_ev,
    }


def upper_solution_from(decoded: dict, idx: int, ctx: UpperContext) -> UpperSolution:
    """Unpack one particle into the community schedule record."""

    def pick(key: str) -> np.ndarray:
        return np.asarray(decoded[key][idx], dtype=float).copy()

    grid_bus = pick("grid_bus")
    dhp = pick("dhp")
    grid_hl = np.minimum(grid_bus, dhp)
    return UpperSolution(
        f1=float(decoded["cost"][idx]),
        tsl_kw=pick("tsl"),
        eil_kw=pick("eil"),
        hil_kw=pick("hil"),
        grid_tsl_kw=np.zeros(ctx.horizon),
        grid_gl_kw=grid_bus - grid_hl,
        grid_hl_kw=grid_hl,
        grid_ess_kw=pick("grid_ess"),
        rg_load_kw=pick("rg_load"),
        rg_hl_kw=np.zeros(ctx.horizon),
        rg_ess_kw=pick("rg_ess"),
        rg_ev_kw=pick("rg_ev"),
        surplus_kw=pick("surplus"),
        ess_ch_kw=pick("ess_ch"),
        ess_dc_kw=pick("ess_dc"),
        ess_kwh=pick("ess_traj"),
        hsd_ch_kw=pick("hsd_ch"),
        hsd_dc_kw=pick("hsd_dc"),
        hsd_kwh=pick("hsd_traj"),
        boiler_elec_kw=dhp,
        boiler_heat_kw=ctx.assets.boiler.efficiency * dhp,
        r_grid_kw=pick("r_grid"),
        r_ess_kw=pick("r_ess"),
        r_ev_kw=pick("r_ev"),
        status="pso",
    )


@dataclass
class LowerContext:
    """Fixed data for one round of the station decode."""

    station: EvcsAssets
    tariff_price: np.ndarray
    omega_rt: np.ndarray
    frac: np.ndarray
    cl_cap: np.ndarray
    deficit: np.ndarray
    request: np.ndarray
    plug_energy_kwh: float
    ev_reserves: bool

    @property
    def horizon(self) -> int:
        return self.frac.size

    @property
    def dims(self) -> int:
        return self.horizon

    def seed_particle(self) -> np.ndarray:
        """Raw trajectory charging early until the daily floor is met."""
        s = self.station
        e_min = (
            s.daily_energy_min_kwh
            if s.daily_energy_min_kwh is not None
            else self.plug_energy_kwh
        )
        e_min = min(e_min, s.daily_energy_max_kwh)
        up = s.eta_ch * s.p_ch_max_kw * self.frac * s.dt_hours
        target = s.c_min_kwh + min(
            s.eta_ch * e_min * 1.02, s.c_max_kwh - s.c_min_kwh, up.sum()
        )
        traj = np.minimum(s.c_min_kwh + np.cumsum(up), target)
        return (traj - s.c_min_kwh) / max(s.c_max_kwh - s.c_min_kwh, 1e-12)


def decode_lower(raw: np.ndarray, ctx: LowerContext) -> dict:
    """Map raw positions to station schedules, costs and violations."""
    s = ctx.station
    dt = s.dt_hours
    piles_cap = min(s.pile_count, s.pile_use_max)
    up = s.eta_ch * s.p_ch_max_kw * ctx.frac * dt
    down = np.minimum(s.p_dc_max_kw * ctx.frac, np.maximum(ctx.deficit, 0.0)) * dt / s.eta_dc
    traj = decode_trajectory(
        s.c_min_kwh + raw * (s.c_max_kwh - s.c_min_kwh),
        s.c_min_kwh,
        s.c_min_kwh,
        s.c_max_kwh,
        up,
        down,
        c_end=None,
    )
    charge, discharge = _steps_to_flows(traj, s.c_min_kwh, s.eta_ch, s.eta_dc, dt)

    # Buy each period from the cheaper source first.
    rg_first = ctx.omega_rt <= ctx.tariff_price
    rg = np.where(rg_first, np.minimum(charge, ctx.cl_cap), 0.0)
    grid = charge - rg
    spill = np.maximum(grid - s.grid_p_max_kw, 0.0)
    grid = grid - spill
    rg2 = np.minimum(spill, ctx.cl_cap - rg)
    rg = rg + rg2
    grid_viol = spill - rg2

    if ctx.ev_reserves:
        res = np.minimum(ctx.request, s.p_dc_max_kw * ctx.frac - discharge)
        res = np.maximum(res, 0.0)
    else:
        res = np.zeros_like(charge)

    n_ch = np.ceil(np.maximum(charge, 0.0) / s.pile_power_kw - 1e-9)
    n_dc = np.ceil(np.maximum(discharge, 0.0) / s.pile_power_kw - 1e-9)
    pile_viol = np.maximum(n_ch + n_dc - piles_cap, 0.0) * s.pile_power_kw

    e_min = (
        s.daily_energy_min_kwh
        if s.daily_energy_min_kwh is not None
        else ctx.plug_energy_kwh
    )
    e_min = min(e_min, s.daily_energy_max_kwh)
    energy = charge.sum(axis=1) * dt
    energy_viol = np.maximum(e_min - energy, 0.0) + np.maximum(
        energy - s.daily_energy_max_kwh, 0.0
    )

    f2 = dt * (
        (ctx.tariff_price * grid).sum(axis=1)
        + (ctx.omega_rt * (rg - discharge)).sum(axis=1)
        - s.reserve_price * res.sum(axis=1)
    )
    viol = dt * (grid_viol + pile_viol).sum(axis=1) + energy_viol
    return {
        "cost": f2,
        "viol": viol,
        "charge": charge,
        "discharge": discharge,
        "grid": grid,
        "rg": rg,
        "res": res,
        "traj": traj,
        "n_ch": n_ch,
        "n_dc": n_dc,
    }


def lower_solution_from(decoded: dict, idx: int) -> LowerSolution:
    """Unpack one particle into the station schedule record."""

    def pick(key: str) -> np.ndarray:
        return np.asarray(decoded[key][idx], dtype=float).copy()

    return LowerSolution(
        f2=float(decoded["cost"][idx]),
        charge_kw=pick("charge"),
        discharge_kw=pick("discharge"),
        grid_buy_kw=pick("grid"),
        rg_buy_kw=pick("rg"),
        reserve_kw=pick("res"),
        stored_kwh=pick("traj"),
        piles_charging=pick("n_ch").astype(int),
        piles_discharging=pick("n_dc").astype(int),
        status="pso",
    )


def pso_minimize(
    decode,
    dims: int,
    cfg: PsoConfig,
    rng: np.random.Generator,
    seeds: list[np.ndarray] | None = None,
) -> tuple[np.ndarray, float]:
    """Run one swarm and return the best feasible raw position and cost.

    Fitness is cost plus ``cfg.penalty`` times the violation, so the
    penalized value grows without bound in the violation and an
    infeasible particle can never displace a feasible incumbent; the
    reported position is additionally restricted to zero-violation
    particles at their true cost.
    """
    x = rng.random((cfg.swarm, dims))
    for i, seed in enumerate(seeds or []):
        if i < cfg.swarm:
            x[i] = np.clip(seed, 0.0, 1.0)
    v = np.zeros_like(x)
    best_x = None
    best_cost = math.inf
    least_viol = math.inf

    def scan(decoded, positions):
        nonlocal best_x, best_cost, least_viol
        least_viol = min(least_viol, float(decoded["viol"].min()))
        feas = decoded["viol"] <= FEAS_TOL
        if feas.any():
            costs = np.where(feas, decoded["cost"], math.inf)
            i = int(np.argmin(costs))
            if costs[i] < best_cost:
                best_cost = float(costs[i])
                best_x = positions[i].copy()

    decoded = decode(x)
    fitness = decoded["cost"] + cfg.penalty * decoded["viol"]
    scan(decoded, x)
    pbest_x = x.copy()
    pbest_f = fitness.copy()
    g = int(np.argmin(fitness))
    gbest_x = x[g].copy()
    gbest_f = float(fitness[g])

    for _ in range(cfg.iters):
        r1 = rng.random((cfg.swarm, dims))
        r2 = rng.random((cfg.swarm, dims))
        v = (
            cfg.inertia * v
            + cfg.c1 * r1 * (pbest_x - x)
            + cfg.c2 * r2 * (gbest_x[None, :] - x)
        )
        v = np.clip(v, -cfg.vmax, cfg.vmax)
        x = np.clip(x + v, 0.0, 1.0)
        decoded = decode(x)
        fitness = decoded["cost"] + cfg.penalty * decoded["viol"]
        scan(decoded, x)
        improved = fitness < pbest_f
        pbest_x[improved] = x[improved]
        pbest_f[improved] = fitness[improved]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest_f = float(pbest_f[g])
            gbest_x = pbest_x[g].copy()

    if best_x is None:
        raise _NoFeasible(least_viol)
    return best_x, best_cost


class _NoFeasible(Exception):
    def __init__(self, best_violation: float):
        self.best_violation = best_violation
        super().__init__()


def solve_hia(
    scenario: Scenario,
    *,
    pricing: str = "tou-rt",
    ev_reserves: bool = True,
    alpha: float | None = None,
    step_q: float | None = None,
    max_iters: int | None = None,
    seed: int | None = None,
    cfg: PsoConfig | None = None,
) -> RunResult:
    """Run the alternation with swarm solves and pick the joint optimum.

    Mirrors the exact coordinator round for round: same seeding scheme,
    same price signal and reserve request handoffs, same selection rule,
    so the result record is interchangeable with an exact run's.
    """
    from dataclasses import replace as _replace

    if pricing not in ("tou", "tou-rt"):
        raise ValueError(f"pricing must be 'tou' or 'tou-rt', got {pricing!r}")
    cfg = cfg or PsoConfig()
    alpha = scenario.solver.alpha if alpha is None else float(alpha)
    step_q = scenario.solver.step_q if step_q is None else float(step_q)
    max_iters = scenario.solver.max_iters if max_iters is None else int(max_iters)
    seed = scenario.solver.seed if seed is None else int(seed)
    if max_iters < 1:
        raise ValueError("at least one iteration is required")

    start = time.perf_counter()
    assets = cies_assets(scenario)
    station = evcs_assets(scenario)
    if not ev_reserves:
        assets = _replace(assets, reserve_price_ev=0.0)
        station = _replace(station, reserve_price=0.0)
    envelope = flex_envelope(scenario)
    tariff = scenario.tariff
    loads = scenario.loads
    horizon = scenario.horizon
    seqs = renewable_sequences(scenario, step_q=step_q)
    e_rgs = np.array([s.expectation() for s in seqs])
    fleet = fleet_sample(scenario, seed=seed)
    frac = np.asarray(fleet.connected_fraction, dtype=float)
    tariff_price = np.asarray(tariff.price, dtype=float)

    streams = np.random.SeedSequence(seed).spawn(2 * max_iters + 1)
    requirement = mcs_reserve_requirement(
        seqs, alpha, cfg.mc_samples, np.random.default_rng(streams[0])
    )

    scheme = EvScheme.disordered(fleet.profile_kw)
    price_prev = PriceSignal.tou(tariff)
    trace: list[IterationRecord] = []

    for n in range(1, max_iters + 1):
        if ev_reserves:
            ev_cap = np.maximum(
                0.0, station.p_dc_max_kw * frac - np.asarray(scheme.discharge_kw)
            )
        else:
            ev_cap = np.zeros(horizon)
        uctx = UpperContext(
            assets=assets,
            fixed_kw=np.asarray(loads.fixed_kw, dtype=float),
            heat_kw=np.asarray(loads.heat_kw, dtype=float),
            shift_min=np.asarray(envelope.shift_min_kw, dtype=float),
            shift_max=np.asarray(envelope.shift_max_kw, dtype=float),
            eil_max=np.asarray(envelope.eil_max_kw, dtype=float),
            hil_max=np.asarray(envelope.hil_max_kw, dtype=float),
            tariff_price=tariff_price,
            omega_prev=np.asarray(price_prev.omega_rt, dtype=float),
            e_rgs=e_rgs,
            requirement=requirement,
            ev_cap=ev_cap,
            scheme=scheme,
        )
        t0 = time.perf_counter()
        try:
            raw, _ = pso_minimize(
                lambda x: decode_upper(x, uctx),
                uctx.dims,
                cfg,
                np.random.default_rng(streams[2 * n - 1]),
                seeds=[uctx.seed_particle()],
            )
        except _NoFeasible as exc:
            raise HiaInfeasible("community", n, exc.best_violation) from None
        udec = decode_upper(raw[None, :], uctx)
        usol = upper_solution_from(udec, 0, uctx)
        upper_seconds = time.perf_counter() - t0

        p_load = total_load(
            usol.tsl_kw,
            loads.fixed_kw,
            usol.eil_kw,
            usol.ess_ch_kw,
            usol.ess_dc_kw,
            loads.heat_kw,
            usol.hil_kw,
            usol.hsd_ch_kw,
            usol.hsd_dc_kw,
            scheme.charge_kw,
            scheme.discharge_kw,
        )
        if pricing == "tou-rt":
            price = dynamic_price(p_load, e_rgs, tariff)
        else:
            price = PriceSignal.tou(tariff)

        if ev_reserves:
            request = np.maximum(
                0.0, requirement - usol.r_grid_kw - usol.r_ess_kw
            )
        else:
            request = np.zeros(horizon)
        deficits = (
            usol.deficit_el_kw
            + usol.deficit_hl_kw
            + np.asarray(scheme.discharge_kw, dtype=float)
        )
        lctx = LowerContext(
            station=station,
            tariff_price=tariff_price,
            omega_rt=np.asarray(price.omega_rt, dtype=float),
            frac=frac,
            cl_cap=np.asarray(usol.cl_cap_kw, dtype=float),
            deficit=deficits,
            request=request,
            plug_energy_kwh=fleet.plug_energy_kwh,
            ev_reserves=ev_reserves,
        )
        t0 = time.perf_counter()
        try:
            raw, _ = pso_minimize(
                lambda x: decode_lower(x, lctx),
                lctx.dims,
                cfg,
                np.random.default_rng(streams[2 * n]),
                seeds=[lctx.seed_particle()],
            )
        except _NoFeasible as exc:
            raise HiaInfeasible("station", n, exc.best_violation) from None
        ldec = decode_lower(raw[None, :], lctx)
        lsol = lower_solution_from(ldec, 0)
        lower_seconds = time.perf_counter() - t0

        record = IterationRecord(
            iteration=n,
            f1=usol.f1,
            f2=lsol.f2,
            joint=math.hypot(usol.f1, lsol.f2),
            price=price,
            upper=usol,
            lower=lsol,
            scheme_in=scheme,
            scheme_out=lsol.to_scheme(),
            reserve_request_kw=request,
            upper_seconds=upper_seconds,
            lower_seconds=lower_seconds,
        )
        trace.append(record)
        scheme = record.scheme_out
        price_prev = price

    selected = trace[0]
    for record in trace[1:]:
        if record.joint < selected.joint:
            selected = record

    config = {
        "scenario": scenario.name,
        "pricing": pricing,
        "ev_reserves": ev_reserves,
        "alpha": alpha,
        "step_q": step_q,
        "max_iters": max_iters,
        "seed": seed,
        "mc_samples": cfg.mc_samples,
        "method": "hia",
        "swarm": cfg.swarm,
        "pso_iters": cfg.iters,
    }
    return RunResult(
        selected=selected,
        trace=trace,
        config=config,
        wall_seconds=time.perf_counter() - start,
        seqs=seqs,
        scenario=scenario,
    )


@dataclass
class HiaBatch:
    """Repeated heuristic runs with their summary statistics."""

    results: list[RunResult] = field(repr=False, default_factory=list)
    seeds: list[int] = field(default_factory=list)

    @property
    def joints(self) -> np.ndarray:
        return np.array([r.joint for r in self.results])

    @property
    def mean_joint(self) -> float:
        return float(self.joints.mean())

    @property
    def best_joint(self) -> float:
        return float(self.joints.min())

    @property
    def mean_seconds(self) -> float:
        return float(np.mean([r.wall_seconds for r in self.results]))

    def emit(self, out_dir) -> "Path":
        """Write one row per run; returns the file path."""
        from pathlib import Path

        out = Path(out_dir)
        header = ["run", "seed", "f1_yuan", "f2_yuan", "joint_yuan", "iteration", "seconds"]
        rows = []
        for i, (res, sd) in enumerate(zip(self.results, self.seeds), start=1):
            rows.append(
                [
                    str(i),
                    str(sd),
                    fmt(res.f1),
                    fmt(res.f2),
                    fmt(res.joint),
                    str(res.selected.iteration),
                    fmt(res.wall_seconds),
                ]
            )
        path = out / "hia_runs.csv"
        _atomic_write(path, _csv(header, rows))
        return path


def hia_batch(
    scenario: Scenario,
    runs: int = 20,
    cfg: PsoConfig | None = None,
    **overrides,
) -> HiaBatch:
    """Run the heuristic ``runs`` times on derived seeds."""
    if runs < 1:
        raise ValueError("at least one run is required")
    cfg = cfg or PsoConfig()
    base = overrides.pop("seed", scenario.solver.seed)
    batch = HiaBatch()
    for i in range(runs):
        sd = int(base) + 1000 * (i + 1)
        batch.results.append(solve_hia(scenario, seed=sd, cfg=cfg, **overrides))
        batch.seeds.append(sd)
    return batch

"""Alternating dispatch between the community and the charging station.

Each round the community solves its chance-constrained model against the
station's latest committed scheme, derives the station-facing price signal
and a reserve request from that dispatch, and the station re-optimizes
against both.  Round one seeds the loop with the plug-on-arrival fleet
profile.  The loop runs a fixed budget of rounds; the reported solution is
the round minimizing sqrt(F1^2 + F2^2), earliest round on ties.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from cies_dispatch.lower_level import LowerSolution, build_lower, solve_lower
from cies_dispatch.milp import InfeasibleError, diagnose_infeasibility
from cies_dispatch.pricing import PriceSignal, dynamic_price, total_load
from cies_dispatch.probseq import ProbSeq
from cies_dispatch.scenario import (
    Scenario,
    cies_assets,
    evcs_assets,
    fleet_sample,
    flex_envelope,
    renewable_sequences,
)
from cies_dispatch.upper_level import (
    EvScheme,
    UpperSolution,
    build_upper,
    extract_reserve_request,
    solve_upper,
)

__all__ = [
    "PRICING_MODES",
    "DispatchInfeasible",
    "IterationRecord",
    "RunResult",
    "run",
    "compare_modes",
    "sweep",
    "audit_reserve",
]

PRICING_MODES = ("tou", "tou-rt")


class DispatchInfeasible(RuntimeError):
    """A level's model admitted no solution; carries the violated rows."""

    def __init__(self, level: str, iteration: int, rows: list[str]):
        self.level = level
        self.iteration = iteration
        self.rows = rows
        detail = ", ".join(rows[:6]) if rows else "no single row isolated"
        super().__init__(
            f"{level} model infeasible at iteration {iteration}: {detail}"
        )


@dataclass
class IterationRecord:
    """One round of the alternation, with both solves and the handoffs."""

    iteration: int
    f1: float
    f2: float
    joint: float
    price: PriceSignal
    upper: UpperSolution
    lower: LowerSolution
    scheme_in: EvScheme
    scheme_out: EvScheme
    reserve_request_kw: np.ndarray
    upper_seconds: float
    lower_seconds: float

    def recompute_joint(self) -> float:
        return math.hypot(self.f1, self.f2)


@dataclass
class RunResult:
    """Full trace of a coordinated run plus the selected round."""

    selected: IterationRecord
    trace: list[IterationRecord]
    config: dict
    wall_seconds: float
    seqs: list[ProbSeq] = field(repr=False, default_factory=list)
    scenario: Scenario | None = field(repr=False, default=None)

    @property
    def joint(self) -> float:
        return self.selected.joint

    @property
    def f1(self) -> float:
        return self.selected.f1

    @property
    def f2(self) -> float:
        return self.selected.f2


def _dump(model, dump_dir, name):
    if dump_dir is None:
        return
    from pathlib import Path

    path = Path(dump_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / f"{name}.lp").write_text(model.export_lp())


def run(
    scenario: Scenario,
    *,
    pricing: str = "tou-rt",
    ev_reserves: bool = True,
    alpha: float | None = None,
    step_q: float | None = None,
    max_iters: int | None = None,
    seed: int | None = None,
    backend=None,
    time_limit: float | None = None,
    dump_lp_dir=None,
) -> RunResult:
    """Run the alternation on a scenario and pick the joint optimum.

    Keyword overrides fall back to the scenario's solver block.  The run
    is deterministic in (scenario, seed, overrides).
    """
    if pricing not in PRICING_MODES:
        raise ValueError(f"pricing must be one of {PRICING_MODES}, got {pricing!r}")
    alpha = scenario.solver.alpha if alpha is None else float(alpha)
    step_q = scenario.solver.step_q if step_q is None else float(step_q)
    max_iters = scenario.solver.max_iters if max_iters is None else int(max_iters)
    seed = scenario.solver.seed if seed is None else int(seed)
    if max_iters < 1:
        raise ValueError("at least one iteration is required")
    rel_gap = scenario.solver.rel_gap

    start = time.perf_counter()
    assets = cies_assets(scenario)
    station = evcs_assets(scenario)
    if not ev_reserves:
        assets = replace(assets, reserve_price_ev=0.0)
        station = replace(station, reserve_price=0.0)
    envelope = flex_envelope(scenario)
    tariff = scenario.tariff
    loads = scenario.loads
    horizon = scenario.horizon
    seqs = renewable_sequences(scenario, step_q=step_q)
    e_rgs = np.array([s.expectation() for s in seqs])
    fleet = fleet_sample(scenario, seed=seed)
    frac = np.asarray(fleet.connected_fraction, dtype=float)

    scheme = EvScheme.disordered(fleet.profile_kw)
    price_prev = PriceSignal.tou(tariff)
    trace: list[IterationRecord] = []

    for n in range(1, max_iters + 1):
        if ev_reserves:
            ev_cap = np.maximum(
                0.0, station.p_dc_max_kw * frac - np.asarray(scheme.discharge_kw)
            )
        else:
            ev_cap = None
        upper_model = build_upper(
            assets, loads, envelope, tariff, price_prev, seqs, scheme, alpha,
            ev_reserve_cap_kw=ev_cap,
        )
        _dump(upper_model, dump_lp_dir, f"upper_{n:02d}")
        t0 = time.perf_counter()
        try:
            usol = solve_upper(
                upper_model, assets, scheme, horizon,
                backend=backend, rel_gap=rel_gap, time_limit=time_limit,
            )
        except InfeasibleError:
            rows = diagnose_infeasibility(upper_model)
            raise DispatchInfeasible("community", n, rows) from None
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

        request = (
            extract_reserve_request(usol, seqs, alpha)
            if ev_reserves
            else np.zeros(horizon)
        )
        # The deficit offered to the station is the shortfall the community
        # could not cover from its own assets: residual grid purchases plus
        # the station discharge the upper already absorbed.  Netting that
        # discharge out would shrink the station's market by its own prior
        # action and set off a buy/discharge oscillation.
        deficits = (
            usol.deficit_el_kw
            + usol.deficit_hl_kw
            + np.asarray(scheme.discharge_kw, dtype=float)
        )
        lower_model = build_lower(
            station,
            tariff,
            price,
            frac,
            usol.cl_cap_kw,
            deficits,
            request,
            fleet.plug_energy_kwh,
            ev_reserves=ev_reserves,
            initial_scheme=scheme,
        )
        _dump(lower_model, dump_lp_dir, f"lower_{n:02d}")
        t0 = time.perf_counter()
        try:
            lsol = solve_lower(
                lower_model, horizon,
                backend=backend, rel_gap=rel_gap, time_limit=time_limit,
            )
        except InfeasibleError:
            rows = diagnose_infeasibility(lower_model)
            raise DispatchInfeasible("station", n, rows) from None
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
        "mc_samples": scenario.solver.mc_samples,
        "rel_gap": rel_gap,
    }
    return RunResult(
        selected=selected,
        trace=trace,
        config=config,
        wall_seconds=time.perf_counter() - start,
        seqs=seqs,
        scenario=scenario,
    )


def compare_modes(scenario: Scenario, *, backend=None, **overrides) -> list[dict]:
    """The four-way grid: pricing mode x station reserves, identical seeds."""
    rows = []
    for pricing in PRICING_MODES:
        for reserves in (True, False):
            result = run(
                scenario,
                pricing=pricing,
                ev_reserves=reserves,
                backend=backend,
                **overrides,
            )
            rows.append(
                {
                    "pricing": pricing,
                    "ev_reserves": "on" if reserves else "off",
                    "f1": result.f1,
                    "f2": result.f2,
                    "joint": result.joint,
                    "iteration": result.selected.iteration,
                    "seconds": result.wall_seconds,
                }
            )
    return rows


def sweep(
    scenario: Scenario,
    alphas: list[float],
    steps_q: list[float],
    *,
    backend=None,
    workers: int = 1,
    **overrides,
) -> list[dict]:
    """One run per (alpha, step) grid point.

    Grid points are independent runs, so ``workers`` > 1 solves them in a
    thread pool (the solver releases the GIL); row order stays the grid
    order either way.
    """
    if not alphas or not steps_q:
        raise ValueError("sweep needs at least one alpha and one step size")
    grid = [(float(a), float(q)) for a in alphas for q in steps_q]

    def _point(point):
        alpha, q = point
        result = run(scenario, alpha=alpha, step_q=q, backend=backend, **overrides)
        return {
            "alpha": alpha,
            "step_q": q,
            "f1": result.f1,
            "f2": result.f2,
            "joint": result.joint,
            "iteration": result.selected.iteration,
            "seconds": result.wall_seconds,
        }

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point, grid))
    return [_point(p) for p in grid]


def audit_reserve(
    record: IterationRecord, seqs: list[ProbSeq], alpha: float
) -> list[dict]:
    """Re-check coverage of the shortfall distribution, per period.

    Counts the probability mass of states whose shortfall is within the
    procured reserve: community grid and battery reserve plus what the
    station actually committed (not the request).  Independent of the
    model's binaries.
    """
    out = []
    for t, seq in enumerate(seqs):
        reserve = (
            record.upper.r_grid_kw[t]
            + record.upper.r_ess_kw[t]
            + record.lower.reserve_kw[t]
        )
        mean = seq.expectation()
        covered = sum(
            float(p)
            for u, p in enumerate(seq.probs)
            if mean - u * seq.step_q <= reserve + 1e-9
        )
        out.append(
            {
                "period": t,
                "reserve_kw": float(reserve),
                "covered": covered,
                "ok": covered >= alpha - 1e-9,
            }
        )
    return out

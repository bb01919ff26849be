"""Result persistence: CSV tables and run metadata, written atomically.

A run emits five files into its output directory:

``run_meta.json``
    config echo, selected iteration, per-iteration objective values and
    any interface overrides.  Wall-clock numbers stay off disk so a
    re-run with the same seed reproduces every byte.
``trace.csv``
    ``iteration,f1_yuan,f2_yuan,joint_yuan,price_00..price_23`` - one row
    per iteration with the station-facing price it transacted under.
``schedule.csv``
    per-period dispatch of the selected iteration, every decision column
    of both levels plus the price signal and three balance-residual
    columns (electric bus, heat bus, station purchase split).
``cost_summary.csv``
    ``pricing,ev_reserves,f1_yuan,f2_yuan,joint_yuan,iteration`` - one
    row here; four-row tables come from ``emit_cost_summary`` on a
    mode-comparison grid.
``satisfaction.csv``
    ``period,band,us_percent`` for the selected dispatch (blank where
    the period has no demand to score).

Sweep grids go through ``emit_sweep`` (``sweep.csv``).  All numbers are
printed to six significant digits; every write lands on a temp file in
the target directory and is renamed into place.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cies_dispatch.coordinator import IterationRecord, RunResult
from cies_dispatch.demand_response import satisfaction

__all__ = [
    "ResultBundle",
    "emit_results",
    "emit_cost_summary",
    "emit_sweep",
    "fmt",
]

SCHEDULE_COLUMNS = [
    "period",
    "band",
    "omega_rt",
    "k",
    "fixed_kw",
    "electric_kw",
    "heat_kw",
    "tsl_kw",
    "eil_kw",
    "hil_kw",
    "grid_tsl_kw",
    "grid_gl_kw",
    "grid_hl_kw",
    "grid_ess_kw",
    "rg_load_kw",
    "rg_hl_kw",
    "rg_ess_kw",
    "rg_ev_kw",
    "surplus_kw",
    "ess_ch_kw",
    "ess_dc_kw",
    "ess_kwh",
    "hsd_ch_kw",
    "hsd_dc_kw",
    "hsd_kwh",
    "boiler_elec_kw",
    "boiler_heat_kw",
    "r_grid_kw",
    "r_ess_kw",
    "r_ev_kw",
    "ev_charge_kw",
    "ev_discharge_kw",
    "ev_grid_kw",
    "ev_rg_kw",
    "ev_reserve_kw",
    "ev_stored_kwh",
    "piles_charging",
    "piles_discharging",
    "balance_elec_kw",
    "balance_heat_kw",
    "balance_rg_kw",
    "balance_station_kw",
]


def fmt(value) -> str:
    """Six significant digits; integers stay bare."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value) + 0.0:.6g}"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResultBundle:
    """Paths of one run's emitted tables plus the metadata echo."""

    directory: Path
    meta_path: Path
    trace_path: Path
    schedule_path: Path
    cost_path: Path
    satisfaction_path: Path
    metadata: dict

    @property
    def paths(self) -> list[Path]:
        return [
            self.meta_path,
            self.trace_path,
            self.schedule_path,
            self.cost_path,
            self.satisfaction_path,
        ]


def _trace_rows(result: RunResult) -> tuple[list[str], list[list[str]]]:
    horizon = result.selected.price.horizon
    header = ["iteration", "f1_yuan", "f2_yuan", "joint_yuan"]
    header += [f"price_{t:02d}" for t in range(horizon)]
    rows = []
    for rec in result.trace:
        row = [str(rec.iteration), fmt(rec.f1), fmt(rec.f2), fmt(rec.joint)]
        row += [fmt(p) for p in rec.price.omega_rt]
        rows.append(row)
    return header, rows


def _schedule_rows(result: RunResult) -> list[list[str]]:
    scenario = result.scenario
    if scenario is None:
        raise ValueError("result carries no scenario; cannot emit a schedule")
    rec: IterationRecord = result.selected
    u, l = rec.upper, rec.lower
    loads = scenario.loads
    e_rgs = [seq.expectation() for seq in result.seqs]
    rows = []
    for t in range(loads.horizon):
        balance_elec = (
            u.grid_tsl_kw[t]
            + u.grid_gl_kw[t]
            + u.grid_hl_kw[t]
            + u.rg_load_kw[t]
            + u.rg_hl_kw[t]
            + u.ess_dc_kw[t]
            - u.tsl_kw[t]
            + u.eil_kw[t]
            - u.boiler_elec_kw[t]
            - (loads.fixed_kw[t] - rec.scheme_in.discharge_kw[t])
        )
        balance_heat = (
            u.boiler_heat_kw[t]
            + u.hsd_dc_kw[t]
            - u.hsd_ch_kw[t]
            + u.hil_kw[t]
            - loads.heat_kw[t]
        )
        balance_rg = (
            u.rg_load_kw[t]
            + u.rg_hl_kw[t]
            + u.rg_ess_kw[t]
            + u.rg_ev_kw[t]
            + u.surplus_kw[t]
            - e_rgs[t]
        )
        balance_station = l.charge_kw[t] - l.grid_buy_kw[t] - l.rg_buy_kw[t]
        values = [
            t,
            scenario.tariff.kind[t],
            rec.price.omega_rt[t],
            rec.price.k[t],
            loads.fixed_kw[t],
            loads.electric_kw[t],
            loads.heat_kw[t],
            u.tsl_kw[t],
            u.eil_kw[t],
            u.hil_kw[t],
            u.grid_tsl_kw[t],
            u.grid_gl_kw[t],
            u.grid_hl_kw[t],
            u.grid_ess_kw[t],
            u.rg_load_kw[t],
            u.rg_hl_kw[t],
            u.rg_ess_kw[t],
            u.rg_ev_kw[t],
            u.surplus_kw[t],
            u.ess_ch_kw[t],
            u.ess_dc_kw[t],
            u.ess_kwh[t],
            u.hsd_ch_kw[t],
            u.hsd_dc_kw[t],
            u.hsd_kwh[t],
            u.boiler_elec_kw[t],
            u.boiler_heat_kw[t],
            u.r_grid_kw[t],
            u.r_ess_kw[t],
            u.r_ev_kw[t],
            l.charge_kw[t],
            l.discharge_kw[t],
            l.grid_buy_kw[t],
            l.rg_buy_kw[t],
            l.reserve_kw[t],
            l.stored_kwh[t],
            l.piles_charging[t],
            l.piles_discharging[t],
            balance_elec,
            balance_heat,
            balance_rg,
            balance_station,
        ]
        row = []
        for name, v in zip(SCHEDULE_COLUMNS, values):
            if name in ("band",):
                row.append(str(v))
            elif name in ("period", "piles_charging", "piles_discharging"):
                row.append(str(int(round(float(v)))))
            else:
                row.append(fmt(v))
        rows.append(row)
    return rows


def _satisfaction_rows(result: RunResult) -> list[list[str]]:
    scenario = result.scenario
    rec = result.selected
    per, _ = satisfaction(
        rec.upper.tsl_kw, rec.upper.eil_kw, rec.upper.hil_kw, scenario.loads
    )
    rows = []
    for t, score in enumerate(per):
        rows.append(
            [str(t), scenario.tariff.kind[t], "" if score is None else fmt(score)]
        )
    return rows


def _meta(result: RunResult, overrides: dict | None) -> dict:
    meta = {
        "config": dict(result.config),
        "selected_iteration": result.selected.iteration,
        "iterations": [
            {
                "iteration": rec.iteration,
                "f1_yuan": float(rec.f1),
                "f2_yuan": float(rec.f2),
                "joint_yuan": float(rec.joint),
            }
            for rec in result.trace
        ],
        "overrides": dict(overrides or {}),
    }
    return meta


def emit_results(
    result: RunResult, out_dir, *, overrides: dict | None = None
) -> ResultBundle:
    """Write one run's bundle into ``out_dir`` and return the paths.

    ``overrides`` records interface-level settings (CLI flags) in the
    metadata.  Identical runs re-emit byte-identical files; timing stays
    on the in-memory result only.
    """
    out = Path(out_dir)
    meta = _meta(result, overrides)
    meta_path = out / "run_meta.json"
    _atomic_write(meta_path, json.dumps(meta, indent=2, sort_keys=True) + "\n")

    header, rows = _trace_rows(result)
    trace_path = out / "trace.csv"
    _atomic_write(trace_path, _csv(header, rows))

    schedule_path = out / "schedule.csv"
    _atomic_write(schedule_path, _csv(SCHEDULE_COLUMNS, _schedule_rows(result)))

    cost_path = out / "cost_summary.csv"
    cost_row = [
        result.config["pricing"],
        "on" if result.config["ev_reserves"] else "off",
        fmt(result.f1),
        fmt(result.f2),
        fmt(result.joint),
        str(result.selected.iteration),
    ]
    _atomic_write(
        cost_path,
        _csv(
            ["pricing", "ev_reserves", "f1_yuan", "f2_yuan", "joint_yuan", "iteration"],
            [cost_row],
        ),
    )

    satisfaction_path = out / "satisfaction.csv"
    _atomic_write(
        satisfaction_path,
        _csv(["period", "band", "us_percent"], _satisfaction_rows(result)),
    )

    return ResultBundle(
        directory=out,
        meta_path=meta_path,
        trace_path=trace_path,
        schedule_path=schedule_path,
        cost_path=cost_path,
        satisfaction_path=satisfaction_path,
        metadata=meta,
    )


def emit_cost_summary(rows: list[dict], out_dir) -> Path:
    """Four-mode comparison table (one row per completed run)."""
    path = Path(out_dir) / "cost_summary.csv"
    table = [
        [
            row["pricing"],
            row["ev_reserves"],
            fmt(row["f1"]),
            fmt(row["f2"]),
            fmt(row["joint"]),
            str(row["iteration"]),
        ]
        for row in rows
    ]
    _atomic_write(
        path,
        _csv(
            ["pricing", "ev_reserves", "f1_yuan", "f2_yuan", "joint_yuan", "iteration"],
            table,
        ),
    )
    return path


def emit_sweep(rows: list[dict], out_dir) -> Path:
    """Grid results with runtimes (the one table that keeps wall-clock)."""
    path = Path(out_dir) / "sweep.csv"
    table = [
        [
            fmt(row["alpha"]),
            fmt(row["step_q"]),
            fmt(row["f1"]),
            fmt(row["f2"]),
            fmt(row["joint"]),
            str(row["iteration"]),
            fmt(row["seconds"]),
        ]
        for row in rows
    ]
    _atomic_write(
        path,
        _csv(
            ["alpha", "step_q", "f1_yuan", "f2_yuan", "joint_yuan", "iteration", "seconds"],
            table,
        ),
    )
    return path

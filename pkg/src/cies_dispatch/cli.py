"""Command-line surface: run, sweep, compare, baseline, validate.

Exit codes: 0 success, 2 scenario validation failure, 3 model
infeasibility, 4 solver limit or a solution that fails verification.
Every flag override is recorded in the emitted run metadata.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from cies_dispatch.coordinator import DispatchInfeasible, compare_modes, run, sweep
from cies_dispatch.milp import SolverError
from cies_dispatch.results import (
    emit_cost_summary,
    emit_results,
    emit_sweep,
    fmt,
)
from cies_dispatch.scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cies-dispatch",
        description="Bi-level stochastic dispatch for a community energy "
        "system coordinating with an EV charging station.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_arg(p):
        p.add_argument("scenario", help="path to a scenario YAML file")

    p_run = sub.add_parser("run", help="run the alternation and emit tables")
    scenario_arg(p_run)
    p_run.add_argument("--pricing", choices=["tou", "tou-rt"], default=None)
    p_run.add_argument("--ev-reserves", choices=["on", "off"], default=None)
    p_run.add_argument("--alpha", type=float, default=None)
    p_run.add_argument("--step-q", type=float, default=None)
    p_run.add_argument("--max-iters", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument(
        "--dump-lp", action="store_true", help="write each round's LP file"
    )

    p_sweep = sub.add_parser("sweep", help="grid of runs over alpha and step size")
    scenario_arg(p_sweep)
    p_sweep.add_argument("--alphas", type=float, nargs="+", required=True)
    p_sweep.add_argument("--steps", type=float, nargs="+", required=True)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", default="out")

    p_cmp = sub.add_parser("compare", help="four-mode cost table")
    scenario_arg(p_cmp)
    p_cmp.add_argument("--out", default="out")

    p_base = sub.add_parser("baseline", help="particle-swarm baseline batch")
    scenario_arg(p_base)
    p_base.add_argument("--runs", type=int, default=20)
    p_base.add_argument("--out", default="out")

    p_val = sub.add_parser("validate", help="schema-check a scenario file")
    scenario_arg(p_val)

    return parser


def _load(path: str):
    try:
        return load_scenario(path), None
    except FileNotFoundError as err:
        return None, [str(err)]
    except ScenarioError as err:
        return None, err.errors


def _overrides(args, keys) -> dict:
    out = {}
    for key in keys:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            out[key] = value
    return out


def cmd_run(args) -> int:
    scenario, errors = _load(args.scenario)
    if errors:
        for line in errors:
            print(line, file=sys.stderr)
        return EXIT_VALIDATION
    overrides = _overrides(
        args, ["pricing", "ev-reserves", "alpha", "step-q", "max-iters", "seed"]
    )
    kwargs = {}
    if args.pricing is not None:
        kwargs["pricing"] = args.pricing
    if args.ev_reserves is not None:
        kwargs["ev_reserves"] = args.ev_reserves == "on"
    for flag in ("alpha", "step_q", "max_iters", "seed"):
        value = getattr(args, flag)
        if value is not None:
            kwargs[flag] = value
    out = Path(args.out)
    if args.dump_lp:
        kwargs["dump_lp_dir"] = out / "lp"
        overrides["dump-lp"] = True
    result = run(scenario, **kwargs)
    bundle = emit_results(result, out, overrides=overrides)
    sel = result.selected
    print(
        f"selected iteration {sel.iteration}: "
        f"F1 {fmt(sel.f1)} F2 {fmt(sel.f2)} joint {fmt(sel.joint)} yuan"
    )
    print(f"wall {result.wall_seconds:.2f}s over {len(result.trace)} iterations")
    for path in bundle.paths:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario, errors = _load(args.scenario)
    if errors:
        for line in errors:
            print(line, file=sys.stderr)
        return EXIT_VALIDATION
    rows = sweep(scenario, args.alphas, args.steps, workers=args.workers)
    path = emit_sweep(rows, args.out)
    for row in rows:
        print(
            f"alpha {fmt(row['alpha'])} q {fmt(row['step_q'])}: "
            f"joint {fmt(row['joint'])} yuan in {row['seconds']:.2f}s"
        )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario, errors = _load(args.scenario)
    if errors:
        for line in errors:
            print(line, file=sys.stderr)
        return EXIT_VALIDATION
    rows = compare_modes(scenario)
    path = emit_cost_summary(rows, args.out)
    for row in rows:
        print(
            f"{row['pricing']:>6s} reserves {row['ev_reserves']:>3s}: "
            f"F1 {fmt(row['f1'])} F2 {fmt(row['f2'])} joint {fmt(row['joint'])}"
        )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    from cies_dispatch.baseline import PsoConfig, hia_batch

    scenario, errors = _load(args.scenario)
    if errors:
        for line in errors:
            print(line, file=sys.stderr)
        return EXIT_VALIDATION
    batch = hia_batch(scenario, runs=args.runs, cfg=PsoConfig())
    path = batch.emit(args.out)
    print(
        f"{args.runs} runs: mean joint {fmt(batch.mean_joint)} yuan, "
        f"best {fmt(batch.best_joint)}, mean wall {batch.mean_seconds:.2f}s"
    )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario, errors = _load(args.scenario)
    if errors:
        for line in errors:
            print(line, file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{scenario.name}: ok ({scenario.horizon} periods)")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "baseline": cmd_baseline,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DispatchInfeasible as err:
        print(f"infeasible: {err}", file=sys.stderr)
        for row in err.rows:
            print(f"  {row}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as err:
        print(f"solver: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())

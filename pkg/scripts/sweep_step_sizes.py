"""Discretization-step and confidence-level sweep.

The chance constraint is built from discretized forecast-error
distributions, so the step size trades model size (and wall time)
against reserve granularity, while alpha moves the whole reserve
envelope.  One run per grid point; prints cost and wall time and the
cost spread across step sizes at each alpha.
"""

import argparse

from cies_dispatch import coordinator
from cies_dispatch.results import emit_sweep, fmt
from cies_dispatch.scenario import bundled_scenario_path, load_scenario


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("scenario", nargs="?", default=str(bundled_scenario_path()))
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.90, 0.95, 1.00])
    ap.add_argument("--steps", type=float, nargs="+", default=[4.0, 5.0, 10.0])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/sweep")
    args = ap.parse_args()

    scenario = load_scenario(args.scenario)
    rows = coordinator.sweep(
        scenario, args.alphas, args.steps, workers=args.workers
    )

    print(f"{'alpha':>5s} {'step':>5s} {'joint':>9s} {'it':>3s} {'wall':>7s}")
    for r in rows:
        print(f"{r['alpha']:5.2f} {r['step_q']:5.1f} {fmt(r['joint']):>9s} "
              f"{r['iteration']:3d} {r['seconds']:6.2f}s")

    for alpha in args.alphas:
        sub = [r for r in rows if r["alpha"] == alpha]
        spread = max(r["joint"] for r in sub) - min(r["joint"] for r in sub)
        fastest = min(sub, key=lambda r: r["seconds"])
        print(f"alpha {alpha:.2f}: cost spread {spread:.2f} across steps, "
              f"fastest step {fastest['step_q']:g} at {fastest['seconds']:.2f}s")

    path = emit_sweep(rows, args.out)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()

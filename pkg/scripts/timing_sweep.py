#!/usr/bin/env python3
"""Plan time versus branches sampled, from a frozen mid-episode state.

Single-process on purpose: run it on an otherwise idle machine. Prints
time-per-branch for both planners so the parity ratio is visible directly.
"""
import argparse
import pathlib
import sys

from hexevade.bench import sweep_timing
from hexevade.cli import write_sweep_csv
from hexevade.sim import EpisodeConfig
from hexevade.world import builtin_world_path


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--world", default=str(builtin_world_path("arena_paper")))
    ap.add_argument("--budgets", default="30,100,300,1000,3000")
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--out", default="results/fig_timing")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    budgets = sorted(int(b) for b in args.budgets.split(","))
    base = EpisodeConfig(world=args.world)
    for planner in ("tlppo", "pomcp"):
        records = sweep_timing(planner, budgets, args.reps, base)
        path = out / f"timing_{planner}.csv"
        write_sweep_csv(path, records, base.config_hash(), 0)
        for r in records:
            print(
                f"{planner} @{r.budget_branches}: {r.mean_plan_time_s * 1e3:.2f} ms "
                f"({r.time_per_branch_s * 1e6:.1f} us/branch)"
            )
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

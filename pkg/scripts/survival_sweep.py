#!/usr/bin/env python3
"""Survival rate versus branches sampled, for both planners.

Runs turn-based sweeps over log-spaced branch budgets with paired episode
seeds and writes one sweep.csv per planner. The macro planner's default
grid tops out at 10,000 branches; the baseline extends to the 175,000
parity point (expect that last point to run overnight at desk scale).
"""
import argparse
import pathlib
import sys

from hexevade.bench import sweep_survival
from hexevade.cli import (
    DEFAULT_SWEEP_BUDGETS_POMCP,
    DEFAULT_SWEEP_BUDGETS_TLPPO,
    write_sweep_csv,
)
from hexevade.sim import EpisodeConfig
from hexevade.world import builtin_world_path


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--world", default=str(builtin_world_path("arena_paper")))
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--out", default="results/fig_survival")
    ap.add_argument(
        "--max-budget", type=int, default=None,
        help="truncate both budget grids (e.g. 1000 for a quick pass)",
    )
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = EpisodeConfig(world=args.world)
    for planner, budgets in (
        ("tlppo", DEFAULT_SWEEP_BUDGETS_TLPPO),
        ("pomcp", DEFAULT_SWEEP_BUDGETS_POMCP),
    ):
        if args.max_budget:
            budgets = [b for b in budgets if b <= args.max_budget]
        records = sweep_survival(
            planner, budgets, args.episodes, base, args.seed,
            workers=args.workers, out_dir=out,
        )
        path = out / f"sweep_{planner}.csv"
        write_sweep_csv(path, records, base.config_hash(), args.seed)
        for r in records:
            print(
                f"{planner} @{r.budget_branches}: {r.survival:.3f} "
                f"[{r.survival_ci95[0]:.3f}, {r.survival_ci95[1]:.3f}]"
            )
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Real-time survival comparison: both planners under the wall-clock budget
derived from prey speed and cell spacing, against the recorded live-subject
reference line (0.86 over 230 runs).

Budget = (0.11 m / 0.76 m/s) x 0.75 ~ 109 ms per move, branch cap 1000.
"""
import argparse
import pathlib
import sys

from hexevade.bench import compare_realtime
from hexevade.sim import EpisodeConfig, real_time_budget
from hexevade.world import builtin_world_path


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--world", default=str(builtin_world_path("arena_paper")))
    ap.add_argument("--episodes", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/fig_realtime")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = EpisodeConfig(world=args.world)
    rows = compare_realtime(base, episodes=args.episodes, master_seed=args.seed)
    import csv

    with open(out / "hist.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "survival", "episodes", "ci95_lo", "ci95_hi"])
        for row in rows:
            writer.writerow(
                [row["agent"], f"{row['survival']:.6f}", row["episodes"],
                 f"{row['ci95'][0]:.6f}", f"{row['ci95'][1]:.6f}"]
            )
    budget = real_time_budget(0.11, 0.76, 0.75)
    print(f"per-move budget: {budget * 1e3:.1f} ms, cap 1000 branches")
    for row in rows:
        print(f"{row['agent']}: {row['survival']:.3f} (n={row['episodes']})")
    print(f"wrote {out / 'hist.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: analyze -> run -> sweep -> compare -> replay.

Every output file starts with a metadata header (tool version, config hash,
master seed) so any result is reproducible from its own header. Exit codes:
0 success, 1 runtime failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import pathlib
import sys

def _default_workers() -> int:
    return os.cpu_count() or 1

from . import __version__
from .bench import (
    REAL_TIME_BRANCH_CAP,
    SweepRecord,
    compare_realtime,
    summarize,
    sweep_survival,
    sweep_timing,
)
from .connectivity import derivative_product, eigencentrality, extract_lppo
from .sim import (
    REAL_TIME,
    TURN_BASED,
    EpisodeConfig,
    EpisodeResult,
    TraceRow,
    run_episode,
)
from .world import HexCoord, WorldError, load_grid

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

DEFAULT_SWEEP_BUDGETS_TLPPO = [1, 3, 10, 30, 100, 300, 1000, 3000, 10000]
DEFAULT_SWEEP_BUDGETS_POMCP = DEFAULT_SWEEP_BUDGETS_TLPPO + [30000, 100000, 175000]


def _out_dir(args) -> pathlib.Path:
    root = args.out or os.environ.get("LPPO_OUT_DIR") or "."
    p = pathlib.Path(root)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _meta_lines(config_hash: str, master_seed: int) -> list[str]:
    return [
        f"# hexevade {__version__}",
        f"# config_hash={config_hash}",
        f"# master_seed={master_seed}",
    ]


def _coord_str(c: HexCoord | None) -> str:
    return "" if c is None else f"{c.q}:{c.r}"


def _parse_coord(s: str) -> HexCoord | None:
    if not s:
        return None
    q, r = s.split(":")
    return HexCoord(int(q), int(r))


def _episode_config_from_args(args) -> EpisodeConfig:
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
    if args.world:
        base["world"] = args.world
    if "world" not in base:
        raise ValueError("a world file is required (--world or config file)")
    cfg = EpisodeConfig.from_json(base)
    if getattr(args, "planner", None):
        cfg = dataclasses.replace(cfg, planner=args.planner)
    if getattr(args, "budget", None) is not None:
        cfg = dataclasses.replace(cfg, budget_branches=args.budget)
    if getattr(args, "mode", None):
        mode = TURN_BASED if args.mode == "turn" else REAL_TIME
        cfg = dataclasses.replace(cfg, mode=mode)
    if getattr(args, "budget_s", None) is not None:
        cfg = dataclasses.replace(cfg, budget_s=args.budget_s)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "percentile", None) is not None:
        cfg = dataclasses.replace(cfg, percentile=args.percentile)
    return cfg


def write_trace_csv(path: pathlib.Path, cfg: EpisodeConfig, result: EpisodeResult) -> None:
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(cfg.config_hash(), cfg.seed):
            fh.write(line + "\n")
        fh.write(f"# config={json.dumps(cfg.to_json(), sort_keys=True)}\n")
        fh.write(f"# outcome={result.outcome} ticks={result.ticks}\n")
        writer = csv.writer(fh)
        writer.writerow(
            [
                "tick",
                "prey",
                "predator",
                "observation",
                "planned_action",
                "branches_used",
                "plan_time_s",
            ]
        )
        for row in result.trace:
            writer.writerow(
                [
                    row.tick,
                    _coord_str(row.prey_pos),
                    _coord_str(row.predator_pos),
                    _coord_str(row.observation),
                    _coord_str(row.planned_action),
                    row.branches_used,
                    f"{row.plan_time_s:.6f}",
                ]
            )


def read_trace_csv(path: pathlib.Path) -> tuple[EpisodeConfig, EpisodeResult]:
    cfg = None
    outcome = None
    ticks = 0
    rows = []
    with open(path, newline="") as fh:
        header_done = False
        reader = None
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("config="):
                    cfg = EpisodeConfig.from_json(json.loads(body[len("config="):]))
                elif body.startswith("outcome="):
                    parts = dict(p.split("=") for p in body.split())
                    outcome = parts["outcome"]
                    ticks = int(parts["ticks"])
                continue
            cells = next(csv.reader([line]))
            if not header_done:
                header_done = True
                continue
            rows.append(
                TraceRow(
                    tick=int(cells[0]),
                    prey_pos=_parse_coord(cells[1]),
                    predator_pos=_parse_coord(cells[2]),
                    observation=_parse_coord(cells[3]),
                    planned_action=_parse_coord(cells[4]),
                    branches_used=int(cells[5]),
                    plan_time_s=float(cells[6]),
                )
            )
    if cfg is None or outcome is None:
        raise ValueError(f"{path} is missing its config/outcome header")
    return cfg, EpisodeResult(outcome, ticks, rows, seed=cfg.seed)


def write_sweep_csv(
    path: pathlib.Path, records: list[SweepRecord], config_hash: str, master_seed: int
) -> None:
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(config_hash, master_seed):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            [
                "planner",
                "budget_branches",
                "episodes",
                "survival",
                "ci95_lo",
                "ci95_hi",
                "mean_plan_time_s",
                "time_per_branch_s",
                "censored",
            ]
        )
        for r in records:
            writer.writerow(
                [
                    r.planner,
                    r.budget_branches,
                    r.episodes,
                    f"{r.survival:.6f}",
                    f"{r.survival_ci95[0]:.6f}",
                    f"{r.survival_ci95[1]:.6f}",
                    f"{r.mean_plan_time_s:.9f}",
                    f"{r.time_per_branch_s:.9f}",
                    r.censored,
                ]
            )


def _pgm_matrix(grid, values: dict, lppo=None) -> str:
    """Plain-text PGM (P2): rows are r, columns are q over the bounding box.
    0 marks out-of-arena, 1 occluded; free cells map to 2..255."""
    qs = [c.q for c in grid.coords]
    rs = [c.r for c in grid.coords]
    qmin, qmax, rmin, rmax = min(qs), max(qs), min(rs), max(rs)
    vmax = max(values.values()) if values else 0.0
    lines = [f"P2", f"{qmax - qmin + 1} {rmax - rmin + 1}", "255"]
    for r in range(rmin, rmax + 1):
        row = []
        for q in range(qmin, qmax + 1):
            c = HexCoord(q, r)
            if c not in grid.cells:
                row.append(0)
            elif c in grid.occluded:
                row.append(1)
            elif lppo is not None:
                row.append(255 if c in lppo else 64)
            else:
                v = values.get(c, 0.0)
                scale = v / vmax if vmax > 0 else 0.0
                row.append(2 + int(round(scale * 253)))
        lines.append(" ".join(map(str, row)))
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    grid = load_grid(args.world)
    if not (0.0 < args.percentile < 100.0):
        raise ValueError(f"percentile must be in (0, 100), got {args.percentile}")
    out = _out_dir(args)
    field = eigencentrality(grid)
    dfield = derivative_product(field, grid)
    lppo = extract_lppo(dfield, args.percentile)
    cfg_hash = f"analyze-p{args.percentile}"
    with open(out / "analysis.csv", "w", newline="") as fh:
        for line in _meta_lines(cfg_hash, 0):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["coord", "ec", "dprod", "is_lppo"])
        for c in sorted(field.values, key=lambda c: (c.q, c.r)):
            writer.writerow(
                [
                    _coord_str(c),
                    f"{field.values[c]:.12g}",
                    f"{dfield.values[c]:.12g}",
                    int(c in lppo.locations),
                ]
            )
    (out / "ec.pgm").write_text(_pgm_matrix(grid, field.values))
    (out / "dprod.pgm").write_text(_pgm_matrix(grid, dfield.values))
    (out / "lppo.pgm").write_text(_pgm_matrix(grid, {}, lppo=lppo.locations))
    if lppo.warning:
        print(f"warning: {lppo.warning}", file=sys.stderr)
    print(
        f"analyzed {args.world}: {len(field.values)} free cells, "
        f"{len(lppo.locations)} payoff locations (threshold {lppo.threshold:.3g})"
    )
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _episode_config_from_args(args)
    out = _out_dir(args)
    result = run_episode(cfg)
    episodes_dir = out / "episodes"
    episodes_dir.mkdir(exist_ok=True)
    trace_path = episodes_dir / f"ep_{cfg.planner}_s{cfg.seed}.csv"
    write_trace_csv(trace_path, cfg, result)
    print(
        f"{cfg.planner} seed={cfg.seed}: {result.outcome} in {result.ticks} ticks "
        f"(trace: {trace_path})"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _episode_config_from_args(args)
    out = _out_dir(args)
    if args.budgets:
        budgets = sorted(int(b) for b in args.budgets.split(","))
    elif cfg.planner == "pomcp":
        budgets = DEFAULT_SWEEP_BUDGETS_POMCP
    else:
        budgets = DEFAULT_SWEEP_BUDGETS_TLPPO
    master = args.seed if args.seed is not None else 0
    if args.timing:
        records = sweep_timing(cfg.planner, budgets, args.reps, cfg, master)
        path = out / "timing.csv"
    else:
        workers = args.workers if args.workers is not None else _default_workers()
        records = sweep_survival(
            cfg.planner, budgets, args.episodes, cfg, master,
            workers=workers, out_dir=out,
        )
        path = out / "sweep.csv"
    write_sweep_csv(path, records, cfg.config_hash(), master)
    for r in records:
        print(
            f"{r.planner} budget={r.budget_branches}: survival={r.survival:.3f} "
            f"time/branch={r.time_per_branch_s * 1e6:.1f}us"
        )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _episode_config_from_args(args)
    out = _out_dir(args)
    master = args.seed if args.seed is not None else 0
    rows = compare_realtime(
        cfg,
        episodes=args.episodes,
        master_seed=master,
        budget_s=args.budget_s,
        branch_cap=args.branch_cap,
        workers=args.workers if args.workers is not None else _default_workers(),
    )
    path = out / "hist.csv"
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(cfg.config_hash(), master):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["agent", "survival", "episodes", "ci95_lo", "ci95_hi"])
        for row in rows:
            writer.writerow(
                [
                    row["agent"],
                    f"{row['survival']:.6f}",
                    row["episodes"],
                    f"{row['ci95'][0]:.6f}",
                    f"{row['ci95'][1]:.6f}",
                ]
            )
    for row in rows:
        print(f"{row['agent']}: survival={row['survival']:.3f} (n={row['episodes']})")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg, recorded = read_trace_csv(pathlib.Path(args.trace))
    schedule = [row.branches_used for row in recorded.trace]
    fresh = run_episode(
        cfg, branch_schedule=schedule if cfg.mode == REAL_TIME else None
    )
    if fresh.trace_hash() == recorded.trace_hash():
        print(f"replay verified: {args.trace} ({recorded.outcome} in {recorded.ticks} ticks)")
        return EXIT_OK
    print(f"replay MISMATCH for {args.trace}", file=sys.stderr)
    return EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexevade",
        description="Predator-evasion planning: analyze, simulate, benchmark.",
    )
    parser.add_argument("--version", action="version", version=f"hexevade {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--world", help="world file (.world)")
        if config:
            p.add_argument("--config", help="episode config JSON")
        p.add_argument("--out", help="output directory (default $LPPO_OUT_DIR or .)")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("analyze", help="centrality + payoff-location maps")
    p.add_argument("--world", required=True)
    p.add_argument("--percentile", type=float, default=95.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="run one episode and write its trace")
    common(p)
    p.add_argument("--planner", choices=["pomcp", "tlppo"])
    p.add_argument("--budget", type=int)
    p.add_argument("--mode", choices=["turn", "real"])
    p.add_argument("--budget-s", dest="budget_s", type=float)
    p.add_argument("--percentile", type=float)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="survival or timing sweep over budgets")
    common(p)
    p.add_argument("--planner", choices=["pomcp", "tlppo"])
    p.add_argument("--budgets", help="comma-separated branch budgets")
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--workers", type=int, default=None,
                   help="episode parallelism (default: all cores; timing sweeps always run single-process)")
    p.add_argument("--timing", action="store_true", help="time plan calls instead")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--percentile", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="real-time three-way survival comparison")
    common(p)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--workers", type=int, default=None,
                   help="episode parallelism (default: all cores)")
    p.add_argument("--budget-s", dest="budget_s", type=float, default=None)
    p.add_argument("--branch-cap", dest="branch_cap", type=int, default=REAL_TIME_BRANCH_CAP)
    p.add_argument("--percentile", type=float)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("replay", help="verify a recorded trace reproduces")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WorldError, ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failures keep a distinct exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

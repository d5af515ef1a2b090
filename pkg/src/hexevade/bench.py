"""Benchmark harness: survival-vs-budget sweeps, plan-time scaling, and the
real-time three-way comparison (both planners plus the recorded live-subject
reference line).

Sweeps are exactly reproducible from (master seed, config hash): per-episode
seeds derive from the master seed by index, and the same seed set is used
for every planner and budget so comparisons are paired.
"""
from __future__ import annotations

import dataclasses
import json
import math
import pathlib
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import belief as belief_mod
from .belief import Observation
from .predator import PredatorState, predator_step, spawn_cell
from .sim import (
    REAL_TIME,
    TURN_BASED,
    EpisodeConfig,
    EpisodeResult,
    make_planner,
    real_time_budget,
    run_episode,
    _episode_rngs,
    _resolve_grid,
)

MOUSE_REFERENCE_SURVIVAL = 0.86
MOUSE_REFERENCE_EPISODES = 230
PREY_SPEED_MPS = 0.76
REAL_TIME_SAFETY_FRACTION = 0.75
REAL_TIME_BRANCH_CAP = 1000


@dataclass
class EpisodeSummary:
    """Slim per-episode record (traces stay in the worker unless asked for)."""

    outcome: str
    ticks: int
    plan_calls: int
    total_plan_time_s: float
    total_branches: int
    depletions: int
    overruns: int
    seed: int
    trace_hash: str


@dataclass
class SweepRecord:
    planner: str
    budget_branches: int
    episodes: int
    survival: float
    survival_ci95: tuple[float, float]
    mean_plan_time_s: float
    time_per_branch_s: float
    censored: int = 0


def wilson_ci(successes: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score 95% interval for a binomial proportion."""
    if total == 0:
        raise ValueError("wilson_ci needs total > 0")
    p = successes / total
    denom = 1 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def paired_binomial_pvalue(x_only: int, y_only: int) -> float:
    """Exact two-sided sign test on discordant pairs."""
    n = x_only + y_only
    if n == 0:
        return 1.0
    k = min(x_only, y_only)
    tail = sum(math.comb(n, i) for i in range(k + 1)) / 2.0**n
    return min(1.0, 2.0 * tail)


def derive_seed(master_seed: int, index: int) -> int:
    """Stable per-episode seed shared across planners and budgets."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def summarize(result: EpisodeResult) -> EpisodeSummary:
    return EpisodeSummary(
        outcome=result.outcome,
        ticks=result.ticks,
        plan_calls=len(result.trace),
        total_plan_time_s=sum(r.plan_time_s for r in result.trace),
        total_branches=sum(r.branches_used for r in result.trace),
        depletions=result.depletions,
        overruns=result.overruns,
        seed=result.seed,
        trace_hash=result.trace_hash(),
    )


def _worker_episode(cfg_json: dict) -> dict:
    cfg = EpisodeConfig.from_json(cfg_json)
    return dataclasses.asdict(summarize(run_episode(cfg)))


def run_episode_batch(
    base_cfg: EpisodeConfig, seeds: list[int], workers: int = 1
) -> list[EpisodeSummary]:
    """Run one episode per seed, optionally across a process pool."""
    jobs = []
    for seed in seeds:
        cfg = dataclasses.replace(base_cfg, seed=seed)
        jobs.append(cfg.to_json())
    if workers <= 1:
        raw = [_worker_episode(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_worker_episode, jobs, chunksize=4))
    return [EpisodeSummary(**r) for r in raw]


def _point_record(
    planner: str, budget: int, summaries: list[EpisodeSummary]
) -> SweepRecord:
    n = len(summaries)
    survived = sum(1 for s in summaries if s.outcome == "survived")
    censored = sum(1 for s in summaries if s.outcome == "censored")
    plan_calls = sum(s.plan_calls for s in summaries)
    total_time = sum(s.total_plan_time_s for s in summaries)
    mean_time = total_time / plan_calls if plan_calls else 0.0
    return SweepRecord(
        planner=planner,
        budget_branches=budget,
        episodes=n,
        survival=survived / n,
        survival_ci95=wilson_ci(survived, n),
        mean_plan_time_s=mean_time,
        time_per_branch_s=mean_time / budget if budget else 0.0,
        censored=censored,
    )


def _point_cache_path(
    out_dir: pathlib.Path, planner: str, budget: int, cfg_hash: str, master_seed: int
) -> pathlib.Path:
    return out_dir / "points" / f"{planner}_b{budget}_{cfg_hash}_s{master_seed}.json"


def sweep_survival(
    planner: str,
    budgets: list[int],
    episodes_per_point: int,
    base_cfg: EpisodeConfig,
    master_seed: int,
    workers: int = 1,
    out_dir: str | pathlib.Path | None = None,
) -> list[SweepRecord]:
    """Turn-based survival at each branch budget (ascending), with Wilson
    intervals. Completed points are cached per (config hash, master seed)
    when an output directory is given, so interrupted sweeps resume
    idempotently."""
    if sorted(budgets) != list(budgets):
        raise ValueError("budgets must be sorted ascending")
    if episodes_per_point < 1:
        raise ValueError("episodes_per_point must be >= 1")
    seeds = [derive_seed(master_seed, i) for i in range(episodes_per_point)]
    records = []
    for budget in budgets:
        cfg = dataclasses.replace(
            base_cfg, planner=planner, budget_branches=budget, mode=TURN_BASED,
            budget_s=None,
        )
        cache = None
        if out_dir is not None:
            cache = _point_cache_path(
                pathlib.Path(out_dir), planner, budget, cfg.config_hash(), master_seed
            )
            if cache.exists():
                data = json.loads(cache.read_text())
                data["survival_ci95"] = tuple(data["survival_ci95"])
                records.append(SweepRecord(**data))
                continue
        summaries = run_episode_batch(cfg, seeds, workers)
        rec = _point_record(planner, budget, summaries)
        if cache is not None:
            cache.parent.mkdir(parents=True, exist_ok=True)
            cache.write_text(json.dumps(dataclasses.asdict(rec)))
        records.append(rec)
    return records


def mid_episode_state(
    base_cfg: EpisodeConfig, grid=None, settle_ticks: int = 8, seed: int = 1234
):
    """A frozen mid-episode snapshot (prey position + belief) for timing
    runs: both planners get measured from the identical state."""
    if grid is None:
        grid = _resolve_grid(base_cfg.world)
    rng_world, rng_belief, _ = _episode_rngs(seed)
    prey = grid.start_gate
    spawn = spawn_cell(grid, prey, rng_world)
    predator = PredatorState(spawn, spawn, None)
    belief = belief_mod.init_belief(grid, base_cfg.particles, rng_belief, prey_entry=prey)
    goal_chain = grid.chain_path(grid.start_gate, grid.goal).steps
    for tick in range(settle_ticks):
        seen = predator.position if grid.line_of_sight(prey, predator.position) else None
        belief = belief_mod.update_belief(
            belief, prey, Observation(seen), grid, rng_belief, advance=(tick > 0)
        )
        prey = goal_chain[min(tick + 1, len(goal_chain) - 1)]
        predator = predator_step(predator, prey, grid, rng_world)
    return grid, prey, belief


def sweep_timing(
    planner: str,
    budgets: list[int],
    reps: int,
    base_cfg: EpisodeConfig,
    master_seed: int = 0,
) -> list[SweepRecord]:
    """Wall-clock plan time per budget, measured over ``reps`` plan calls
    from the fixed mid-episode state. Always single-process."""
    if sorted(budgets) != list(budgets):
        raise ValueError("budgets must be sorted ascending")
    grid, prey, belief = mid_episode_state(base_cfg)
    records = []
    for budget in budgets:
        cfg = dataclasses.replace(
            base_cfg, planner=planner, budget_branches=budget, mode=TURN_BASED,
            budget_s=None,
        )
        pl = make_planner(grid, cfg, cfg.world if isinstance(cfg.world, str) else None)
        times = []
        for rep in range(reps):
            rng = random.Random(derive_seed(master_seed, rep))
            t0 = time.perf_counter()
            res = pl.plan(belief, prey, rng, budget=budget)
            times.append(time.perf_counter() - t0)
            assert res.branches == budget
        mean_time = sum(times) / len(times)
        records.append(
            SweepRecord(
                planner=planner,
                budget_branches=budget,
                episodes=reps,
                survival=0.0,
                survival_ci95=(0.0, 0.0),
                mean_plan_time_s=mean_time,
                time_per_branch_s=mean_time / budget,
            )
        )
    return records


def compare_realtime(
    base_cfg: EpisodeConfig,
    episodes: int = 100,
    master_seed: int = 0,
    budget_s: float | None = None,
    branch_cap: int = REAL_TIME_BRANCH_CAP,
    workers: int = 1,
) -> list[dict]:
    """Real-time survival for both planners over paired seeds, plus the
    fixed live-subject reference row."""
    if episodes < 1:
        raise ValueError("compare_realtime needs episodes >= 1")
    if budget_s is None:
        budget_s = real_time_budget(
            _resolve_grid(base_cfg.world).cell_spacing_m,
            PREY_SPEED_MPS,
            REAL_TIME_SAFETY_FRACTION,
        )
    seeds = [derive_seed(master_seed, i) for i in range(episodes)]
    rows = []
    for planner in ("tlppo", "pomcp"):
        cfg = dataclasses.replace(
            base_cfg,
            planner=planner,
            mode=REAL_TIME,
            budget_s=budget_s,
            budget_branches=branch_cap,
        )
        summaries = run_episode_batch(cfg, seeds, workers)
        survived = sum(1 for s in summaries if s.outcome == "survived")
        rows.append(
            {
                "agent": planner,
                "survival": survived / episodes,
                "episodes": episodes,
                "ci95": wilson_ci(survived, episodes),
                "summaries": summaries,
            }
        )
    rows.append(
        {
            "agent": "reference_mice",
            "survival": MOUSE_REFERENCE_SURVIVAL,
            "episodes": MOUSE_REFERENCE_EPISODES,
            "ci95": wilson_ci(
                round(MOUSE_REFERENCE_SURVIVAL * MOUSE_REFERENCE_EPISODES),
                MOUSE_REFERENCE_EPISODES,
            ),
            "summaries": [],
        }
    )
    return rows

"""Episode engine: the task rules, in turn-based and real-time modes.

Turn-based mode freezes the world while the planner runs (isolating policy
quality from compute speed); real-time mode grants the planner a wall-clock
deadline per move and the world ticks on regardless, so a planner that
commits nothing in time forfeits its move.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import pathlib
import random
import time
from dataclasses import dataclass, field

import numpy as np

from . import belief as belief_mod
from .belief import Observation
from .connectivity import lppo_pipeline
from .engine import CAPTURE_RADIUS_CELLS, RewardModel
from .planners.pomcp import PomcpConfig, PomcpPlanner
from .planners.tlppo import TlppoConfig, TlppoPlanner, build_lppo_graph
from .predator import PredatorState, predator_step, spawn_cell
from .world import HexCoord, HexGrid, WorldSpec, build_grid, load_grid

TURN_BASED = "turn_based"
REAL_TIME = "real_time"


@dataclass(frozen=True, slots=True)
class WorldState:
    """Joint state at a tick boundary."""

    prey_pos: HexCoord
    predator: PredatorState
    tick: int
    status: str = "running"  # running | captured | reached_goal


@dataclass(frozen=True, slots=True)
class TraceRow:
    """One tick of an episode, recorded before the moves execute."""

    tick: int
    prey_pos: HexCoord
    predator_pos: HexCoord
    observation: HexCoord | None
    planned_action: HexCoord | None
    branches_used: int
    plan_time_s: float


@dataclass
class EpisodeResult:
    outcome: str  # survived | captured | censored
    ticks: int
    trace: list[TraceRow]
    depletions: int = 0
    overruns: int = 0
    seed: int = 0

    def trace_hash(self) -> str:
        """Digest over the deterministic trace fields (timing excluded)."""
        h = hashlib.sha256()
        for row in self.trace:
            h.update(
                (
                    f"{row.tick};{row.prey_pos};{row.predator_pos};"
                    f"{row.observation};{row.planned_action};{row.branches_used}\n"
                ).encode()
            )
        h.update(f"{self.outcome};{self.ticks}".encode())
        return h.hexdigest()


@dataclass
class EpisodeConfig:
    """Everything needed to reproduce one episode."""

    world: str | WorldSpec
    planner: str = "tlppo"  # pomcp | tlppo
    budget_branches: int = 100
    mode: str = TURN_BASED
    budget_s: float | None = None
    max_ticks: int = 1000
    particles: int = 1000
    seed: int = 0
    percentile: float = 80.0
    c_explore: float | None = None  # None -> per-planner default
    horizon: int = 50
    rollout_horizon: int = 20
    max_macro_hops: int = 6
    max_sim_ticks: int = 120
    rollout_goal_bias: float = 0.7
    goal_reward: float = 1.0
    capture_reward: float = -1.0
    step_reward: float = -0.005
    discount: float = 0.98

    def __post_init__(self):
        if self.planner not in ("pomcp", "tlppo"):
            raise ValueError(f"unknown planner {self.planner!r}")
        if self.mode not in (TURN_BASED, REAL_TIME):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == REAL_TIME and (self.budget_s is None or self.budget_s <= 0):
            raise ValueError("real_time mode requires budget_s > 0")
        if self.max_ticks < 1:
            raise ValueError("max_ticks must be >= 1")
        if self.particles < 1:
            raise ValueError("particles must be >= 1")

    def reward_model(self) -> RewardModel:
        return RewardModel(
            self.goal_reward, self.capture_reward, self.step_reward, self.discount
        )

    def to_json(self) -> dict:
        data = dataclasses.asdict(self)
        if isinstance(self.world, WorldSpec):
            data["world"] = {"spec": self.world.to_json()}
        return data

    @classmethod
    def from_json(cls, data: dict) -> "EpisodeConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        data = dict(data)
        world = data.get("world")
        if isinstance(world, dict) and "spec" in world:
            data["world"] = WorldSpec.from_json(world["spec"])
        return cls(**data)

    def config_hash(self) -> str:
        payload = {k: v for k, v in self.to_json().items() if k != "seed"}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


_GRID_CACHE: dict[str, HexGrid] = {}
_GRAPH_CACHE: dict[tuple[str, float], object] = {}


def _resolve_grid(world: str | WorldSpec | HexGrid) -> HexGrid:
    if isinstance(world, HexGrid):
        return world
    if isinstance(world, WorldSpec):
        return build_grid(world)
    key = str(pathlib.Path(world).resolve())
    grid = _GRID_CACHE.get(key)
    if grid is None:
        grid = load_grid(world)
        grid.ensure_tables()
        _GRID_CACHE[key] = grid
    return grid


def make_planner(grid: HexGrid, cfg: EpisodeConfig, world_key: str | None = None):
    """Construct the configured planner (waypoint graphs are cached per
    world file and percentile)."""
    rm = cfg.reward_model()
    if cfg.planner == "pomcp":
        c = cfg.c_explore if cfg.c_explore is not None else PomcpConfig.c_explore
        return PomcpPlanner(
            grid,
            PomcpConfig(
                cfg.budget_branches, c, cfg.horizon, cfg.rollout_goal_bias, rm
            ),
        )
    cache_key = (world_key, cfg.percentile) if world_key else None
    graph = _GRAPH_CACHE.get(cache_key) if cache_key else None
    if graph is None:
        graph = build_lppo_graph(grid, lppo_pipeline(grid, cfg.percentile))
        if cache_key:
            _GRAPH_CACHE[cache_key] = graph
    c = cfg.c_explore if cfg.c_explore is not None else TlppoConfig.c_explore
    tcfg = TlppoConfig(
        cfg.budget_branches,
        c,
        cfg.rollout_horizon,
        cfg.max_macro_hops,
        cfg.max_sim_ticks,
        cfg.rollout_goal_bias,
        rm,
    )
    return TlppoPlanner(grid, graph, tcfg)


def _episode_rngs(seed: int) -> tuple[random.Random, np.random.Generator, random.Random]:
    ss = np.random.SeedSequence(seed)
    world_ss, belief_ss, plan_ss = ss.spawn(3)
    rng_world = random.Random(int(world_ss.generate_state(1)[0]))
    rng_belief = np.random.default_rng(belief_ss)
    rng_plan = random.Random(int(plan_ss.generate_state(1)[0]))
    return rng_world, rng_belief, rng_plan


def run_episode(
    cfg: EpisodeConfig,
    grid: HexGrid | None = None,
    planner=None,
    branch_schedule: list[int] | None = None,
) -> EpisodeResult:
    """Play one episode to termination.

    ``branch_schedule`` replays a recorded run: per-tick branch budgets
    replace both the branch cap and (in real-time mode) the wall clock, so
    the decision sequence reproduces exactly.
    """
    if grid is None:
        grid = _resolve_grid(cfg.world)
    if planner is None:
        world_key = cfg.world if isinstance(cfg.world, str) else None
        planner = make_planner(grid, cfg, world_key)
    rng_world, rng_belief, rng_plan = _episode_rngs(cfg.seed)

    prey = grid.start_gate
    spawn = spawn_cell(grid, prey, rng_world)
    predator = PredatorState(spawn, spawn, None)
    belief = belief_mod.init_belief(grid, cfg.particles, rng_belief, prey_entry=prey)

    trace: list[TraceRow] = []
    overruns = 0
    outcome = "censored"

    # Placement check: an opponent spawned within the capture radius ends
    # the episode before anyone moves.
    if grid.distance_cells(prey, predator.position) < CAPTURE_RADIUS_CELLS:
        return EpisodeResult("captured", 0, trace, belief.depletions, 0, cfg.seed)

    for tick in range(cfg.max_ticks):
        seen = (
            predator.position
            if grid.line_of_sight(prey, predator.position)
            else None
        )
        obs = Observation(seen)
        belief = belief_mod.update_belief(
            belief, prey, obs, grid, rng_belief, advance=(tick > 0)
        )
        if branch_schedule is not None:
            budget = branch_schedule[tick] if tick < len(branch_schedule) else 0
            if budget <= 0:
                result = None
                plan_time = 0.0
            else:
                result = planner.plan(belief, prey, rng_plan, budget=budget)
                plan_time = result.elapsed_s
        elif cfg.mode == REAL_TIME:
            deadline = time.perf_counter() + cfg.budget_s
            result = planner.plan(
                belief, prey, rng_plan, budget=cfg.budget_branches, deadline=deadline
            )
            plan_time = result.elapsed_s
        else:
            result = planner.plan(belief, prey, rng_plan, budget=cfg.budget_branches)
            plan_time = result.elapsed_s
        if result is None or result.action is None:
            action = None
            branches = 0 if result is None else result.branches
            overruns += 1
        else:
            action = result.action
            branches = result.branches
        trace.append(
            TraceRow(tick, prey, predator.position, seen, action, branches, plan_time)
        )
        if action is not None:
            prey = action
        if grid.distance_cells(prey, predator.position) < CAPTURE_RADIUS_CELLS:
            outcome = "captured"
            break
        if prey == grid.goal:
            outcome = "survived"
            break
        predator = predator_step(predator, prey, grid, rng_world)
        if grid.distance_cells(prey, predator.position) < CAPTURE_RADIUS_CELLS:
            outcome = "captured"
            break
    return EpisodeResult(
        outcome, len(trace), trace, belief.depletions, overruns, cfg.seed
    )


def survival_rate(results: list[EpisodeResult]) -> float:
    """Fraction of episodes that reached the goal; censored episodes stay in
    the denominator."""
    if not results:
        raise ValueError("survival_rate needs at least one episode")
    survived = sum(1 for r in results if r.outcome == "survived")
    return survived / len(results)


def real_time_budget(
    cell_spacing_m: float, prey_speed_mps: float, safety_fraction: float
) -> float:
    """Per-move planning budget in seconds: cell spacing over speed, scaled
    by the safety fraction."""
    if cell_spacing_m <= 0 or prey_speed_mps <= 0 or safety_fraction < 0:
        raise ValueError("spacing and speed must be positive, fraction nonnegative")
    return cell_spacing_m / prey_speed_mps * safety_fraction


def replay_episode(cfg: EpisodeConfig, recorded: EpisodeResult) -> bool:
    """Re-simulate from the recorded config and compare decision-relevant
    trace fields. Real-time runs replay with the recorded per-tick branch
    counts standing in for the wall clock."""
    schedule = [row.branches_used for row in recorded.trace]
    fresh = run_episode(cfg, branch_schedule=schedule if cfg.mode == REAL_TIME else None)
    return fresh.trace_hash() == recorded.trace_hash()

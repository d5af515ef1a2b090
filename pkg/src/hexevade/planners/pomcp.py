"""Baseline online planner: UCB1-guided Monte-Carlo tree search over
primitive moves with belief-state root sampling.

Each plan call builds a fresh tree (stored policies go stale faster than
they can be computed against a mobile opponent, and fresh trees keep branch
accounting exact). One "branch" is one root-to-termination simulation:
sample an opponent hypothesis from the belief, descend the action tree
under UCB1, expand one leaf, evaluate it with a uniform-random rollout, and
back the discounted return up the path.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

from ..belief import Belief
from ..engine import RewardModel, SimCore
from ..predator import PredatorState
from ..world import HexCoord, HexGrid

__all__ = [
    "PlanNode",
    "PlanResult",
    "PomcpConfig",
    "PomcpPlanner",
    "RewardModel",
    "pomcp_plan",
    "rollout",
    "ucb1_select",
]


@dataclass
class PlanNode:
    """Search-tree node statistics: visits, mean return, children by action."""

    visit_count: int = 0
    value: float = 0.0
    children: dict = field(default_factory=dict)


def ucb1_select(node: PlanNode, c_explore: float):
    """The child action maximizing mean value plus exploration bonus.

    Unvisited children are taken first, in child insertion order; ties on
    the UCB score also resolve to the earlier child.
    """
    if not node.children:
        raise ValueError("ucb1_select requires at least one child")
    for action, child in node.children.items():
        if child.visit_count == 0:
            return action
    log_n = math.log(node.visit_count)
    best_action = None
    best_score = -math.inf
    for action, child in node.children.items():
        score = child.value + c_explore * math.sqrt(log_n / child.visit_count)
        if score > best_score:
            best_score = score
            best_action = action
    return best_action


def _best_root_index(counts: list[int], wsums: list[float]) -> int:
    """Most-visited root action; ties break on mean return, then order.

    The value tie-break matters when the budget barely covers the root
    seeding pass and every action holds one visit."""
    best_i = 0
    best_key = (-1, -math.inf)
    for i, cnt in enumerate(counts):
        key = (cnt, wsums[i] / cnt if cnt else -math.inf)
        if key > best_key:
            best_key = key
            best_i = i
    return best_i


@dataclass(frozen=True)
class PomcpConfig:
    budget_branches: int = 1000
    c_explore: float = 0.7
    horizon: int = 50
    rollout_goal_bias: float = 0.7
    reward: RewardModel = field(default_factory=RewardModel)


@dataclass(frozen=True)
class PlanResult:
    """Outcome of one plan call. ``action`` is the target cell (the current
    cell means stay); ``None`` means the deadline expired before a single
    simulation finished. ``root_visits`` pairs each root candidate's target
    cell with its visit count (diagnostics and accounting checks)."""

    action: HexCoord | None
    branches: int
    elapsed_s: float
    root_visits: tuple[tuple[HexCoord, int], ...] = ()


class PomcpPlanner:
    """Holds the per-grid simulation tables; one instance per episode."""

    kind = "pomcp"

    def __init__(self, grid: HexGrid, config: PomcpConfig | None = None):
        self.grid = grid
        self.config = config or PomcpConfig()
        self.core = SimCore(
            grid,
            self.config.reward,
            self.config.horizon,
            self.config.rollout_goal_bias,
        )

    def plan(
        self,
        belief: Belief,
        prey_pos: HexCoord,
        rng: random.Random,
        budget: int | None = None,
        deadline: float | None = None,
    ) -> PlanResult:
        cfg = self.config
        core = self.core
        n = core.n
        moves = core.moves
        capture = core.capture
        gammas = core.gammas
        goal = core.goal
        r_step = core.r_step
        r_capture = core.r_capture
        r_goal = core.r_goal
        horizon = cfg.horizon
        c_explore = cfg.c_explore
        budget = cfg.budget_branches if budget is None else budget
        randrange = rng.randrange
        perf = time.perf_counter

        prey0 = self.grid.index[prey_pos]
        ppos_all = belief.positions.tolist()
        pdest_all = belief.destinations.tolist()
        k_particles = belief.capacity

        acts0 = moves[prey0]
        node_acts = [acts0]
        node_children: list[list[int]] = [[-1] * len(acts0)]
        node_counts: list[list[int]] = [[0] * len(acts0)]
        node_wsum: list[list[float]] = [[0.0] * len(acts0)]
        node_total = [0]
        node_prey = [prey0]

        t_start = perf()
        sims = 0
        while sims < budget:
            if deadline is not None and perf() >= deadline:
                break
            k = randrange(k_particles)
            ppos = ppos_all[k]
            pdest = pdest_all[k]
            if capture[prey0 * n + ppos]:
                node_total[0] += 1
                sims += 1
                continue
            nid = 0
            t = 0
            acc = 0.0
            path: list[tuple[int, int]] = []
            ret = 0.0
            while True:
                counts = node_counts[nid]
                ai = -1
                for i, cnt in enumerate(counts):
                    if cnt == 0:
                        ai = i
                        break
                if ai < 0:
                    log_n = math.log(node_total[nid])
                    wsum = node_wsum[nid]
                    best = -math.inf
                    for i, cnt in enumerate(counts):
                        score = wsum[i] / cnt + c_explore * math.sqrt(log_n / cnt)
                        if score > best:
                            best = score
                            ai = i
                path.append((nid, ai))
                gt = gammas[t]
                acc += gt * r_step
                prey = node_acts[nid][ai]
                if capture[prey * n + ppos]:
                    ret = acc + gt * r_capture
                    break
                if prey == goal:
                    ret = acc + gt * r_goal
                    break
                ppos, pdest, _ = core.advance_predator(ppos, pdest, 0, prey, rng)
                if capture[prey * n + ppos]:
                    ret = acc + gt * r_capture
                    break
                t += 1
                if t >= horizon:
                    ret = acc
                    break
                child = node_children[nid][ai]
                if child < 0:
                    child = len(node_acts)
                    node_children[nid][ai] = child
                    cacts = moves[prey]
                    node_acts.append(cacts)
                    node_children.append([-1] * len(cacts))
                    node_counts.append([0] * len(cacts))
                    node_wsum.append([0.0] * len(cacts))
                    node_total.append(0)
                    node_prey.append(prey)
                    path.append((child, -1))
                    ret = acc + core.rollout(prey, ppos, pdest, 0, t, horizon, rng)
                    break
                nid = child
            for b_nid, b_ai in path:
                node_total[b_nid] += 1
                if b_ai >= 0:
                    node_counts[b_nid][b_ai] += 1
                    node_wsum[b_nid][b_ai] += ret
            sims += 1

        elapsed = perf() - t_start
        coords = self.grid.coords
        visits = tuple((coords[a], c) for a, c in zip(acts0, node_counts[0]))
        if sims == 0:
            return PlanResult(None, 0, elapsed, visits)
        best_i = _best_root_index(node_counts[0], node_wsum[0])
        return PlanResult(coords[acts0[best_i]], sims, elapsed, visits)


def pomcp_plan(
    belief: Belief,
    prey_pos: HexCoord,
    grid: HexGrid,
    budget_branches: int,
    reward: RewardModel,
    rng: random.Random,
    c_explore: float = 0.7,
    horizon: int = 50,
) -> PlanResult:
    """One-shot functional wrapper around :class:`PomcpPlanner`."""
    cfg = PomcpConfig(budget_branches, c_explore, horizon, reward=reward)
    return PomcpPlanner(grid, cfg).plan(belief, prey_pos, rng)


def rollout(
    grid: HexGrid,
    prey_pos: HexCoord,
    predator: PredatorState,
    depth: int,
    reward: RewardModel,
    rng: random.Random,
    goal_bias: float = 0.0,
) -> float:
    """Discounted return of a random prey walk to ``depth`` ticks.

    ``goal_bias`` is the per-tick probability of stepping along the shortest
    path to the goal instead of uniformly."""
    core = SimCore(grid, reward, depth, goal_bias)
    idx = grid.index
    return core.rollout(
        idx[prey_pos],
        idx[predator.position],
        idx[predator.destination],
        0,
        0,
        depth,
        rng,
    )

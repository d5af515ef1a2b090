"""Integer-indexed simulation kernels shared by both planners.

Planner inner loops execute these paths hundreds of thousands of times per
move, so everything is flat Python lists indexed by ``cell * n + cell``:
no objects, no numpy scalars. The semantics must stay in lockstep with
``predator.predator_step`` (there is an equivalence test).
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .world import HexGrid

CAPTURE_RADIUS_CELLS = 2.5


@dataclass(frozen=True)
class RewardModel:
    """Reward scheme for simulated futures.

    Reaching the goal must dominate dawdling and getting captured must
    dominate everything, which the defaults guarantee for any episode
    shorter than a few hundred ticks.
    """

    goal_reward: float = 1.0
    capture_reward: float = -1.0
    step_reward: float = -0.005
    discount: float = 0.98

    def __post_init__(self):
        if not (self.goal_reward > 0 > self.capture_reward):
            raise ValueError("need goal_reward > 0 > capture_reward")
        if not (0 < self.discount <= 1.0):
            raise ValueError("discount must be in (0, 1]")


class SimCore:
    """Flattened lookup tables plus reward bookkeeping for one grid.

    ``rollout_goal_bias`` sets the probability that a rollout step follows
    the shortest path toward the goal instead of a uniform random legal
    move. Pure uniform rollouts carry no goal gradient at a few hundred
    cells (a 50-step random walk essentially never crosses the arena), which
    leaves tree search unable to improve with budget; the agent holds a full
    map, so a map-following rollout prior is the natural default.
    """

    __slots__ = (
        "n",
        "los",
        "nxt",
        "capture",
        "moves",
        "invisible",
        "free",
        "goal",
        "goal_next",
        "goal_bias",
        "reward",
        "gammas",
        "r_goal",
        "r_capture",
        "r_step",
    )

    def __init__(
        self,
        grid: HexGrid,
        reward: RewardModel,
        max_ticks: int,
        rollout_goal_bias: float = 0.7,
    ):
        grid.ensure_tables()
        self.n = grid.n_cells
        self.los = grid.los_table.ravel().tolist()
        self.nxt = [int(v) for v in grid.next_hop.ravel()]
        self.capture = (grid.dist_table < CAPTURE_RADIUS_CELLS).ravel().tolist()
        self.moves = grid.moves_idx
        self.invisible = grid.invisible_free_idx
        self.free = tuple(int(i) for i in grid.free_indices)
        self.goal = grid.goal_idx
        self.goal_next = [int(v) for v in grid.next_hop[:, grid.goal_idx]]
        self.goal_bias = float(rollout_goal_bias)
        self.reward = reward
        g = reward.discount
        self.gammas = [g**t for t in range(max_ticks + 2)]
        self.r_goal = reward.goal_reward
        self.r_capture = reward.capture_reward
        self.r_step = reward.step_reward

    def advance_predator(
        self,
        ppos: int,
        pdest: int,
        plast: int,
        prey: int,
        rng: random.Random,
    ) -> tuple[int, int, int]:
        """One opponent step; mirrors ``predator.predator_step`` exactly."""
        n = self.n
        if self.los[ppos * n + prey]:
            if ppos != prey:
                ppos = self.nxt[ppos * n + prey]
            return ppos, prey, prey
        if ppos == pdest:
            pool = self.invisible[ppos]
            if pool:
                pdest = pool[rng.randrange(len(pool))]
            else:
                pdest = self.free[rng.randrange(len(self.free))]
        return self.nxt[ppos * n + pdest], pdest, plast

    def rollout(
        self,
        prey: int,
        ppos: int,
        pdest: int,
        plast: int,
        t: int,
        t_end: int,
        rng: random.Random,
    ) -> float:
        """Uniform-random prey walk from tick ``t`` until terminal or ``t_end``.

        Returns the discounted return contribution (discount powers are
        absolute tick indices, so the value adds directly onto a running
        simulation total).
        """
        n = self.n
        cap = self.capture
        los = self.los
        nxt = self.nxt
        moves = self.moves
        gam = self.gammas
        r_step = self.r_step
        goal = self.goal
        goal_next = self.goal_next
        bias = self.goal_bias
        randrange = rng.randrange
        random_unit = rng.random
        if cap[prey * n + ppos]:
            return gam[t] * self.r_capture
        if prey == goal:
            return gam[t] * self.r_goal
        acc = 0.0
        while t < t_end:
            gt = gam[t]
            acc += gt * r_step
            if bias > 0.0 and random_unit() < bias:
                prey = goal_next[prey]
            else:
                opts = moves[prey]
                prey = opts[randrange(len(opts))]
            if cap[prey * n + ppos]:
                return acc + gt * self.r_capture
            if prey == goal:
                return acc + gt * self.r_goal
            # inline advance_predator (hot loop)
            if los[ppos * n + prey]:
                if ppos != prey:
                    ppos = nxt[ppos * n + prey]
                pdest = prey
            else:
                if ppos == pdest:
                    pool = self.invisible[ppos]
                    if pool:
                        pdest = pool[randrange(len(pool))]
                    else:
                        pdest = self.free[randrange(len(self.free))]
                ppos = nxt[ppos * n + pdest]
            if cap[prey * n + ppos]:
                return acc + gt * self.r_capture
            t += 1
        return acc

"""Particle-filter estimate of the unobserved opponent.

Particles are stored as parallel integer arrays (position, destination,
last-seen) so that the per-tick update is a handful of vectorized
operations even at tens of thousands of particles. Dynamics follow
``predator.predator_step``; an exact enumeration filter in the test suite
checks the two stay in distributional agreement.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .predator import PredatorState, SpawnError, spawn_support
from .world import HexCoord, HexGrid


@dataclass(frozen=True, slots=True)
class Observation:
    """What the prey saw this tick: the opponent's cell, or nothing."""

    predator_seen: HexCoord | None = None


class Belief:
    """Fixed-capacity multiset of opponent hypotheses."""

    __slots__ = ("positions", "destinations", "last_seen", "capacity", "depletions")

    def __init__(
        self,
        positions: np.ndarray,
        destinations: np.ndarray,
        last_seen: np.ndarray,
        depletions: int = 0,
    ):
        self.positions = positions
        self.destinations = destinations
        self.last_seen = last_seen
        self.capacity = len(positions)
        self.depletions = depletions

    def particles(self, grid: HexGrid) -> list[PredatorState]:
        """Materialize particles as predator states (test/debug aid)."""
        coords = grid.coords
        return [
            PredatorState(
                coords[p], coords[d], coords[s] if s >= 0 else None
            )
            for p, d, s in zip(self.positions, self.destinations, self.last_seen)
        ]

    def position_counts(self) -> dict[int, int]:
        idx, counts = np.unique(self.positions, return_counts=True)
        return {int(i): int(c) for i, c in zip(idx, counts)}


def init_belief(
    grid: HexGrid,
    capacity: int,
    rng: np.random.Generator,
    prey_entry: HexCoord | None = None,
    sampler: Callable[[np.random.Generator], HexCoord] | None = None,
) -> Belief:
    """Draw ``capacity`` particles from the opponent's spawn distribution.

    By default the prior is uniform over the spawn support for
    ``prey_entry`` (the start gate when omitted); pass ``sampler`` to use a
    custom spawn draw instead.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if sampler is not None:
        pos = np.fromiter(
            (grid.index[sampler(rng)] for _ in range(capacity)),
            dtype=np.int32,
            count=capacity,
        )
    else:
        entry = prey_entry if prey_entry is not None else grid.start_gate
        support = spawn_support(grid, entry)
        if not support:
            raise SpawnError(f"no hidden furthest-third cell exists for {entry}")
        support_idx = np.array([grid.index[c] for c in support], dtype=np.int32)
        pos = support_idx[rng.integers(0, len(support_idx), size=capacity)]
    dest = pos.copy()
    last = np.full(capacity, -1, dtype=np.int32)
    return Belief(pos, dest, last)


def update_belief(
    belief: Belief,
    prey_pos: HexCoord,
    obs: Observation,
    grid: HexGrid,
    rng: np.random.Generator,
    advance: bool = True,
) -> Belief:
    """One filter step: advance every particle, condition on the observation,
    and resample back to capacity.

    ``advance=False`` skips the motion step (used for the tick-0 update,
    before the opponent has moved). Total inconsistency with the observation
    reinitializes the particle set over observation-consistent cells and
    bumps the depletion counter.
    """
    prey = grid.index[prey_pos]
    pos = belief.positions.copy()
    dest = belief.destinations.copy()
    last = belief.last_seen.copy()
    depletions = belief.depletions
    if advance:
        pos, dest, last = _advance_particles(pos, dest, last, prey, grid, rng)

    los = grid.los_table
    if obs.predator_seen is not None:
        seen = grid.index[obs.predator_seen]
        if not los[prey, seen]:
            raise ValueError("observation reports a cell not visible from the prey")
        survivors = np.flatnonzero(pos == seen)
        if survivors.size == 0:
            depletions += 1
            k = belief.capacity
            pos = np.full(k, seen, dtype=np.int32)
            dest = pos.copy()
            last = np.full(k, prey, dtype=np.int32)
            return Belief(pos, dest, last, depletions)
    else:
        visible_now = los[pos, prey]
        survivors = np.flatnonzero(~visible_now)
        if survivors.size == 0:
            depletions += 1
            pool = grid.invisible_free_idx[prey]
            if not pool:
                raise SpawnError(
                    "belief depleted and every free cell is visible from the prey"
                )
            k = belief.capacity
            pos = np.array(pool, dtype=np.int32)[rng.integers(0, len(pool), size=k)]
            dest = pos.copy()
            last = np.full(k, -1, dtype=np.int32)
            return Belief(pos, dest, last, depletions)
    picks = survivors[_systematic_slots(survivors.size, belief.capacity, rng)]
    return Belief(pos[picks], dest[picks], last[picks], depletions)


def _systematic_slots(m: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Low-variance resampling: k equally spaced picks over m equal-weight
    survivors (each survivor appears floor(k/m) or ceil(k/m) times), which
    keeps the resample step's contribution to filter error at rounding
    level instead of multinomial noise."""
    offsets = (rng.random() + np.arange(k)) / k
    return np.floor(offsets * m).astype(np.int64)


def sample_state(belief: Belief, grid: HexGrid, rng: np.random.Generator) -> PredatorState:
    """Uniform draw of one hypothesis."""
    k = int(rng.integers(belief.capacity))
    coords = grid.coords
    s = int(belief.last_seen[k])
    return PredatorState(
        coords[int(belief.positions[k])],
        coords[int(belief.destinations[k])],
        coords[s] if s >= 0 else None,
    )


def _advance_particles(
    pos: np.ndarray,
    dest: np.ndarray,
    last: np.ndarray,
    prey: int,
    grid: HexGrid,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized generative step for every particle."""
    los = grid.los_table
    nxt = grid.next_hop
    sees = los[pos, prey]
    hidden = ~sees
    needs_dest = hidden & (pos == dest)
    if needs_dest.any():
        idxs = np.flatnonzero(needs_dest)
        cells = pos[idxs]
        for cell in np.unique(cells):
            members = idxs[cells == cell]
            pool = grid.invisible_free_idx[int(cell)]
            if pool:
                pool_arr = np.asarray(pool, dtype=np.int32)
            else:
                pool_arr = grid.free_indices.astype(np.int32)
            dest[members] = pool_arr[rng.integers(0, len(pool_arr), size=members.size)]
    new_pos = pos.copy()
    new_pos[hidden] = nxt[pos[hidden], dest[hidden]]
    if sees.any():
        vis = np.flatnonzero(sees)
        new_pos[vis] = nxt[pos[vis], prey]
        dest[vis] = prey
        last[vis] = prey
    return new_pos, dest, last

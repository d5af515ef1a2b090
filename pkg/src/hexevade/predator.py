"""Reactive pursuit opponent: spawn rule and per-tick chase behavior.

The same step function drives the live opponent in episodes and the
generative model sampled inside the planners, so it is pure: given the same
rng stream it always produces the same trajectory.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .world import HexCoord, HexGrid


class SpawnError(ValueError):
    """No cell satisfies the spawn constraints (arena misconfiguration)."""


@dataclass(frozen=True, slots=True)
class PredatorState:
    """Value-type snapshot of the opponent.

    ``destination == position`` means the current path is exhausted and a
    new hidden destination will be chosen on the next step without a
    sighting.
    """

    position: HexCoord
    destination: HexCoord
    last_seen_prey: HexCoord | None = None

    def pending_path(self, grid: HexGrid) -> tuple[HexCoord, ...]:
        """Remaining steps toward the destination (empty when exhausted or
        the destination is unreachable)."""
        if self.position == self.destination:
            return ()
        if grid.hop_dist[grid.index[self.position], grid.index[self.destination]] < 0:
            return ()
        return grid.chain_path(self.position, self.destination).steps[1:]


def spawn_support(grid: HexGrid, prey_entry: HexCoord) -> tuple[HexCoord, ...]:
    """Cells eligible as spawn points: furthest third, hidden from the prey."""
    entry_idx = grid.index[prey_entry]
    los = grid.los_table
    return tuple(
        grid.coords[i] for i in grid.furthest_third_idx if not los[entry_idx, i]
    )


def spawn_cell(grid: HexGrid, prey_entry: HexCoord, rng: random.Random) -> HexCoord:
    """Uniform draw from the spawn support; raises SpawnError when empty."""
    support = spawn_support(grid, prey_entry)
    if not support:
        raise SpawnError(
            "no free cell is both in the furthest third and hidden from "
            f"{prey_entry}"
        )
    return support[rng.randrange(len(support))]


def predator_step(
    state: PredatorState, prey_pos: HexCoord, grid: HexGrid, rng: random.Random
) -> PredatorState:
    """Advance the opponent one cell.

    On a sighting the destination snaps to the prey's cell and the chase
    path restarts from scratch; otherwise the opponent commits to its
    current path, drawing a fresh hidden destination only when the path is
    exhausted.
    """
    idx = grid.index
    los = grid.los_table
    nxt = grid.next_hop
    pos_i = idx[state.position]
    prey_i = idx[prey_pos]
    if los[pos_i, prey_i]:
        if pos_i != prey_i:
            new_pos = grid.coords[int(nxt[pos_i, prey_i])]
        else:
            new_pos = state.position
        return PredatorState(new_pos, prey_pos, prey_pos)
    dest = state.destination
    if state.position == dest:
        pool = grid.invisible_free_idx[pos_i]
        if pool:
            dest_i = pool[rng.randrange(len(pool))]
        else:
            free = grid.free_indices
            dest_i = int(free[rng.randrange(len(free))])
        dest = grid.coords[dest_i]
    else:
        dest_i = idx[dest]
    new_pos = grid.coords[int(nxt[pos_i, dest_i])]
    return PredatorState(new_pos, dest, state.last_seen_prey)


# The planners sample predator behavior with their own randomness; the
# dynamics are identical to the live opponent's.
generative_step = predator_step

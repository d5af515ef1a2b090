"""Hexagonal arena model: axial coordinates, occlusions, visibility, paths.

Cells are flat-top hexagons addressed by axial ``(q, r)`` integer pairs.
Adjacent cell centers sit exactly one *cell unit* apart; metric distances
scale by ``cell_spacing_m``. A :class:`HexGrid` is immutable once built and
precomputes lookup tables (pairwise distance, line of sight, hop distance,
next-hop routing) so that everything queried inside simulation inner loops
is a plain array read.
"""
from __future__ import annotations

import heapq
import json
import math
import pathlib
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SQRT3 = math.sqrt(3.0)

# The six axial neighbor offsets, in fixed order. This order doubles as the
# planners' action order, so it must never change.
AXIAL_DIRECTIONS: tuple[tuple[int, int], ...] = (
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
)

# Sampling resolution (in cell units) along sight segments.
LOS_SAMPLE_STEP = 0.1
_EDGE_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class HexCoord:
    """Axial coordinate of one hexagon cell."""

    q: int
    r: int

    def __repr__(self) -> str:
        return f"({self.q},{self.r})"

    def neighbors(self) -> list[HexCoord]:
        """The six axial neighbors, in fixed direction order."""
        return [HexCoord(self.q + dq, self.r + dr) for dq, dr in AXIAL_DIRECTIONS]


def axial_distance(a: HexCoord, b: HexCoord) -> int:
    """Hop distance between two cells ignoring occlusions."""
    dq = a.q - b.q
    dr = a.r - b.r
    return max(abs(dq), abs(dr), abs(dq + dr))


def center_xy(c: HexCoord) -> tuple[float, float]:
    """Cell center in cell units (adjacent centers are distance 1 apart)."""
    return (SQRT3 / 2.0 * c.q, 0.5 * c.q + c.r)


def cell_at_point(x: float, y: float) -> HexCoord:
    """The cell whose hexagon contains the point (nearest center)."""
    qf = 2.0 * x / SQRT3
    rf = y - x / SQRT3
    return _cube_round(qf, rf)


def _cube_round(qf: float, rf: float) -> HexCoord:
    sf = -qf - rf
    q = round(qf)
    r = round(rf)
    s = round(sf)
    dq = abs(q - qf)
    dr = abs(r - rf)
    ds = abs(s - sf)
    if dq > dr and dq > ds:
        q = -r - s
    elif dr > ds:
        r = -q - s
    return HexCoord(int(q), int(r))


def hexagon_region(radius: int) -> list[HexCoord]:
    """All cells within ``radius`` hops of the origin (a hexagonal region)."""
    cells = []
    for q in range(-radius, radius + 1):
        for r in range(max(-radius, -q - radius), min(radius, -q + radius) + 1):
            cells.append(HexCoord(q, r))
    return cells


@dataclass(frozen=True)
class CellPath:
    """An ordered walk over adjacent free cells."""

    steps: tuple[HexCoord, ...]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def start(self) -> HexCoord:
        return self.steps[0]

    @property
    def end(self) -> HexCoord:
        return self.steps[-1]


class WorldError(ValueError):
    """Base class for arena validation failures."""


class MalformedWorldError(WorldError):
    """The world description itself does not parse or is inconsistent."""


class EndpointOccludedError(WorldError):
    """Start gate or goal lies on an occluded cell."""


class DisconnectedWorldError(WorldError):
    """Occlusions split the free cells into multiple components."""


class UnreachableCellError(WorldError):
    """No path exists between the requested cells."""


@dataclass
class WorldSpec:
    """Declarative arena description (the on-disk ``.world`` format).

    Cells are given either implicitly as a hexagonal region radius (optionally
    minus ``exclude`` cells) or as an explicit coordinate list.
    """

    cell_spacing_m: float
    start_gate: HexCoord
    goal: HexCoord
    occlusions: tuple[HexCoord, ...] = ()
    hex_radius: int | None = None
    exclude: tuple[HexCoord, ...] = ()
    explicit_cells: tuple[HexCoord, ...] | None = None
    long_diagonal_m: float | None = None

    def cell_set(self) -> set[HexCoord]:
        if self.explicit_cells is not None:
            cells = set(self.explicit_cells)
        elif self.hex_radius is not None:
            cells = set(hexagon_region(self.hex_radius))
        else:
            raise MalformedWorldError("world declares neither hex_radius nor explicit cells")
        cells -= set(self.exclude)
        if not cells:
            raise MalformedWorldError("world declares no cells")
        return cells

    @classmethod
    def from_json(cls, data: dict) -> WorldSpec:
        try:
            spacing = float(data["cell_spacing_m"])
            cells_decl = data["cells"]
            start = HexCoord(*map(int, data["start_gate"]))
            goal = HexCoord(*map(int, data["goal"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedWorldError(f"bad world file: {exc}") from None
        occ = tuple(HexCoord(*map(int, qr)) for qr in data.get("occlusions", ()))
        hex_radius = None
        exclude: tuple[HexCoord, ...] = ()
        explicit = None
        if isinstance(cells_decl, int):
            hex_radius = cells_decl
        elif isinstance(cells_decl, dict):
            try:
                hex_radius = int(cells_decl["hex_radius"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedWorldError(f"bad cells declaration: {exc}") from None
            exclude = tuple(HexCoord(*map(int, qr)) for qr in cells_decl.get("exclude", ()))
        elif isinstance(cells_decl, list):
            explicit = tuple(HexCoord(*map(int, qr)) for qr in cells_decl)
        else:
            raise MalformedWorldError(f"bad cells declaration: {cells_decl!r}")
        return cls(
            cell_spacing_m=spacing,
            start_gate=start,
            goal=goal,
            occlusions=occ,
            hex_radius=hex_radius,
            exclude=exclude,
            explicit_cells=explicit,
            long_diagonal_m=(
                float(data["long_diagonal_m"]) if "long_diagonal_m" in data else None
            ),
        )

    def to_json(self) -> dict:
        if self.explicit_cells is not None:
            cells_decl: object = [[c.q, c.r] for c in self.explicit_cells]
        elif self.exclude:
            cells_decl = {
                "hex_radius": self.hex_radius,
                "exclude": [[c.q, c.r] for c in self.exclude],
            }
        else:
            cells_decl = self.hex_radius
        data: dict = {
            "cell_spacing_m": self.cell_spacing_m,
            "cells": cells_decl,
            "occlusions": [[c.q, c.r] for c in self.occlusions],
            "start_gate": [self.start_gate.q, self.start_gate.r],
            "goal": [self.goal.q, self.goal.r],
        }
        if self.long_diagonal_m is not None:
            data["long_diagonal_m"] = self.long_diagonal_m
        return data


def load_world(path: str | pathlib.Path) -> WorldSpec:
    """Parse a ``.world`` file into a :class:`WorldSpec`."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise MalformedWorldError(f"cannot read world file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise MalformedWorldError(f"world file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise MalformedWorldError(f"world file {path} must contain a JSON object")
    return WorldSpec.from_json(data)


class HexGrid:
    """Immutable arena: cells, occlusions, and precomputed lookup tables.

    The raw constructor performs only lightweight checks; :func:`build_grid`
    is the validating factory. Cell indices (``grid.index``) order cells by
    ``(q, r)`` so that every derived table is reproducible.
    """

    def __init__(
        self,
        cells: set[HexCoord],
        occluded: set[HexCoord],
        cell_spacing_m: float,
        start_gate: HexCoord,
        goal: HexCoord,
        long_diagonal_m: float | None = None,
    ):
        if start_gate not in cells or goal not in cells:
            raise MalformedWorldError("start_gate and goal must be declared cells")
        self.cells = frozenset(cells)
        self.occluded = frozenset(occluded)
        self.cell_spacing_m = float(cell_spacing_m)
        self.start_gate = start_gate
        self.goal = goal
        self.long_diagonal_m = long_diagonal_m
        self.coords: tuple[HexCoord, ...] = tuple(sorted(cells, key=lambda c: (c.q, c.r)))
        self.index: dict[HexCoord, int] = {c: i for i, c in enumerate(self.coords)}
        self.n_cells = len(self.coords)
        self.occluded_mask = np.array([c in self.occluded for c in self.coords], dtype=bool)
        self.free_indices = np.flatnonzero(~self.occluded_mask)
        self.centers = np.array([center_xy(c) for c in self.coords], dtype=np.float64)
        self.start_idx = self.index[start_gate]
        self.goal_idx = self.index[goal]

    # -- basic queries -----------------------------------------------------

    def __contains__(self, c: HexCoord) -> bool:
        return c in self.cells

    def is_free(self, c: HexCoord) -> bool:
        return c in self.cells and c not in self.occluded

    def neighbors(self, c: HexCoord) -> list[HexCoord]:
        """Adjacent free in-bounds cells (0 to 6 of them)."""
        if c not in self.cells:
            raise WorldError(f"{c} is not a cell of this grid")
        return [n for n in c.neighbors() if self.is_free(n)]

    def distance_cells(self, a: HexCoord, b: HexCoord) -> float:
        """Euclidean distance between cell centers, in cell units."""
        ax, ay = center_xy(a)
        bx, by = center_xy(b)
        return math.hypot(ax - bx, ay - by)

    def distance_m(self, a: HexCoord, b: HexCoord) -> float:
        return self.distance_cells(a, b) * self.cell_spacing_m

    # -- indexed tables (hot-path machinery) -------------------------------

    @cached_property
    def free_neighbor_idx(self) -> tuple[tuple[int, ...], ...]:
        """Per cell: indices of adjacent free cells, in direction order."""
        out = []
        for c in self.coords:
            row = []
            for dq, dr in AXIAL_DIRECTIONS:
                n = HexCoord(c.q + dq, c.r + dr)
                if self.is_free(n):
                    row.append(self.index[n])
            out.append(tuple(row))
        return tuple(out)

    @cached_property
    def moves_idx(self) -> tuple[tuple[int, ...], ...]:
        """Per cell: legal planner moves = free neighbors plus stay (last)."""
        return tuple(row + (i,) for i, row in enumerate(self.free_neighbor_idx))

    @cached_property
    def dist_table(self) -> np.ndarray:
        """Pairwise Euclidean center distance in cell units, shape (N, N)."""
        diff = self.centers[:, None, :] - self.centers[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    @cached_property
    def _coord_lookup(self) -> tuple[int, int, np.ndarray]:
        qs = [c.q for c in self.coords]
        rs = [c.r for c in self.coords]
        qmin, qmax = min(qs), max(qs)
        rmin, rmax = min(rs), max(rs)
        table = np.full((qmax - qmin + 3, rmax - rmin + 3), -1, dtype=np.int32)
        for i, c in enumerate(self.coords):
            table[c.q - qmin + 1, c.r - rmin + 1] = i
        return qmin - 1, rmin - 1, table

    def _lookup_indices(self, qs: np.ndarray, rs: np.ndarray) -> np.ndarray:
        """Vectorized coord -> cell index; -1 for out-of-bounds."""
        qoff, roff, table = self._coord_lookup
        qi = qs - qoff
        ri = rs - roff
        inside = (
            (qi >= 0) & (qi < table.shape[0]) & (ri >= 0) & (ri < table.shape[1])
        )
        out = np.full(qs.shape, -1, dtype=np.int32)
        out[inside] = table[qi[inside], ri[inside]]
        return out

    @cached_property
    def los_table(self) -> np.ndarray:
        """Boolean (N, N) line-of-sight table over free cell pairs.

        Sight is blocked when the center-to-center segment, sampled every
        0.1 cell units, enters the interior of the union of occluded (or
        out-of-bounds) hexagons. Grazing a boundary between an occluded and
        a free hexagon does not block.
        """
        n = self.n_cells
        los = np.zeros((n, n), dtype=bool)
        free = self.free_indices
        los[free, free] = True
        occ_flag = np.ones(n + 1, dtype=bool)
        occ_flag[: n][~self.occluded_mask] = False
        centers = self.centers
        for pos, a in enumerate(free):
            targets = free[pos + 1 :]
            if targets.size == 0:
                continue
            blocked = self._blocked_segments(a, targets, occ_flag)
            ok = targets[~blocked]
            los[a, ok] = True
            los[ok, a] = True
        return los

    def _blocked_segments(
        self, a: int, targets: np.ndarray, occ_flag: np.ndarray
    ) -> np.ndarray:
        centers = self.centers
        ca = centers[a]
        vec = centers[targets] - ca
        dist = np.hypot(vec[:, 0], vec[:, 1])
        n_steps = int(dist.max() / LOS_SAMPLE_STEP) + 1
        s = (np.arange(n_steps) + 1.0) * LOS_SAMPLE_STEP
        valid = s[None, :] < dist[:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = vec / dist[:, None]
        px = ca[0] + unit[:, 0:1] * s[None, :]
        py = ca[1] + unit[:, 1:2] * s[None, :]
        qf = 2.0 * px / SQRT3
        rf = py - px / SQRT3
        qc, rc = _cube_round_arrays(qf, rf)
        idx = self._lookup_indices(qc, rc)
        idx_flag = np.where(idx < 0, self.n_cells, idx)
        hit = occ_flag[idx_flag] & valid
        if not hit.any():
            return np.zeros(targets.shape, dtype=bool)
        # Strict-interior test for candidate samples: distance to the owning
        # center must clear all three hexagon edge axes.
        hi, hj = np.nonzero(hit)
        cx = SQRT3 / 2.0 * qc[hi, hj]
        cy = 0.5 * qc[hi, hj] + rc[hi, hj]
        dx = px[hi, hj] - cx
        dy = py[hi, hj] - cy
        a1 = np.abs(dx * (SQRT3 / 2.0) + dy * 0.5)
        a2 = np.abs(dx * (SQRT3 / 2.0) - dy * 0.5)
        a3 = np.abs(dy)
        interior = np.maximum(np.maximum(a1, a2), a3) < 0.5 - _EDGE_TOL
        blocked = np.zeros(targets.shape, dtype=bool)
        blocked_targets = np.unique(hi[interior])
        blocked[blocked_targets] = True
        # Boundary grazes: blocked only when every hexagon sharing the touched
        # edge/corner is occluded or out of bounds.
        graze = ~interior
        if graze.any():
            for k in np.flatnonzero(graze):
                t = hi[k]
                if blocked[t]:
                    continue
                q0, r0 = int(qc[hi[k], hj[k]]), int(rc[hi[k], hj[k]])
                tie_all_occluded = True
                axes = (
                    (a1[k], (1, 0), (-1, 0)),
                    (a2[k], (1, -1), (-1, 1)),
                    (a3[k], (0, 1), (0, -1)),
                )
                signs = (
                    dx[k] * (SQRT3 / 2.0) + dy[k] * 0.5,
                    dx[k] * (SQRT3 / 2.0) - dy[k] * 0.5,
                    dy[k],
                )
                for (val, pos_dir, neg_dir), sgn in zip(axes, signs):
                    if val >= 0.5 - _EDGE_TOL:
                        dq, dr = pos_dir if sgn > 0 else neg_dir
                        other = HexCoord(q0 + dq, r0 + dr)
                        if self.is_free(other):
                            tie_all_occluded = False
                            break
                if tie_all_occluded:
                    blocked[t] = True
        return blocked

    def line_of_sight(self, a: HexCoord, b: HexCoord) -> bool:
        """True when nothing occluded lies between the two cell centers."""
        if not (self.is_free(a) and self.is_free(b)):
            raise WorldError("line_of_sight requires free in-bounds cells")
        return bool(self.los_table[self.index[a], self.index[b]])

    @cached_property
    def hop_dist(self) -> np.ndarray:
        """All-pairs hop distance over free cells (int32; -1 unreachable)."""
        n = self.n_cells
        nbrs = self.free_neighbor_idx
        out = np.full((n, n), -1, dtype=np.int32)
        for src in self.free_indices:
            row = out[src]
            row[src] = 0
            queue = deque([int(src)])
            while queue:
                u = queue.popleft()
                du = row[u] + 1
                for v in nbrs[u]:
                    if row[v] < 0:
                        row[v] = du
                        queue.append(v)
        return out

    @cached_property
    def next_hop(self) -> np.ndarray:
        """next_hop[i, j]: the cell after ``i`` on the canonical shortest
        path toward ``j`` (ties broken by (q, r) order); ``i`` when i == j
        or j is unreachable."""
        n = self.n_cells
        hop = self.hop_dist
        out = np.tile(np.arange(n, dtype=np.int32), (n, 1)).T.copy()
        big = np.int64(1) << 30
        for i in self.free_indices:
            nbrs = sorted(self.free_neighbor_idx[i], key=lambda k: (self.coords[k].q, self.coords[k].r))
            if not nbrs:
                continue
            cand = hop[nbrs, :].astype(np.int64)
            cand[cand < 0] = big
            best = np.argmin(cand, axis=0)
            reach = (hop[i, :] > 0)
            nbrs_arr = np.array(nbrs, dtype=np.int32)
            out[i, reach] = nbrs_arr[best[reach]]
        return out

    def chain_path_idx(self, a: int, b: int) -> list[int]:
        """Canonical shortest path as cell indices (next-hop chain)."""
        hop = self.hop_dist
        if hop[a, b] < 0:
            ca, cb = self.coords[a], self.coords[b]
            raise UnreachableCellError(f"no path from {ca} to {cb}")
        nxt = self.next_hop
        path = [a]
        cur = a
        while cur != b:
            cur = int(nxt[cur, b])
            path.append(cur)
        return path

    def chain_path(self, a: HexCoord, b: HexCoord) -> CellPath:
        idxs = self.chain_path_idx(self.index[a], self.index[b])
        return CellPath(tuple(self.coords[i] for i in idxs))

    @cached_property
    def invisible_free_idx(self) -> tuple[tuple[int, ...], ...]:
        """Per free cell: free cells *not* visible from it (hidden-cell pool)."""
        los = self.los_table
        out: list[tuple[int, ...]] = []
        free_set = set(int(i) for i in self.free_indices)
        for i in range(self.n_cells):
            if i not in free_set:
                out.append(())
                continue
            row = los[i]
            out.append(tuple(int(j) for j in self.free_indices if not row[j]))
        return tuple(out)

    def ensure_tables(self) -> None:
        """Force-build every lazy table (keeps later queries jitter-free)."""
        self.free_neighbor_idx, self.moves_idx, self.dist_table
        self.los_table, self.hop_dist, self.next_hop, self.invisible_free_idx

    # -- pathfinding --------------------------------------------------------

    def shortest_path(self, a: HexCoord, b: HexCoord) -> CellPath:
        """Minimum-length path via A* (axial-distance heuristic).

        Ties on f-score break toward lexicographically smaller (q, r).
        """
        if not (self.is_free(a) and self.is_free(b)):
            raise WorldError("shortest_path requires free in-bounds cells")
        if a == b:
            return CellPath((a,))
        g: dict[HexCoord, int] = {a: 0}
        parent: dict[HexCoord, HexCoord] = {}
        open_heap: list[tuple[int, int, int, HexCoord]] = [
            (axial_distance(a, b), a.q, a.r, a)
        ]
        closed: set[HexCoord] = set()
        while open_heap:
            f, _, _, cur = heapq.heappop(open_heap)
            if cur in closed:
                continue
            if cur == b:
                steps = [cur]
                while cur != a:
                    cur = parent[cur]
                    steps.append(cur)
                steps.reverse()
                return CellPath(tuple(steps))
            closed.add(cur)
            g_cur = g[cur]
            for dq, dr in AXIAL_DIRECTIONS:
                n = HexCoord(cur.q + dq, cur.r + dr)
                if not self.is_free(n) or n in closed:
                    continue
                tentative = g_cur + 1
                if tentative < g.get(n, 1 << 30):
                    g[n] = tentative
                    parent[n] = cur
                    heapq.heappush(
                        open_heap, (tentative + axial_distance(n, b), n.q, n.r, n)
                    )
        raise UnreachableCellError(f"no path from {a} to {b}")

    # -- spawn geometry -----------------------------------------------------

    @cached_property
    def furthest_third_idx(self) -> tuple[int, ...]:
        """Free cells in the third of the arena furthest from the start gate.

        Cells rank by metric distance from the gate (descending), ties by
        (q, r); the top third (rounded up) qualifies.
        """
        free = [int(i) for i in self.free_indices]
        gate = self.start_idx
        dist = self.dist_table
        free.sort(key=lambda i: (-dist[gate, i], self.coords[i].q, self.coords[i].r))
        count = max(1, math.ceil(len(free) / 3))
        return tuple(free[:count])


def _cube_round_arrays(qf: np.ndarray, rf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sf = -qf - rf
    q = np.rint(qf)
    r = np.rint(rf)
    s = np.rint(sf)
    dq = np.abs(q - qf)
    dr = np.abs(r - rf)
    ds = np.abs(s - sf)
    fix_q = (dq > dr) & (dq > ds)
    fix_r = ~fix_q & (dr > ds)
    q = np.where(fix_q, -r - s, q)
    r = np.where(fix_r, -q - s, r)
    return q.astype(np.int64), r.astype(np.int64)


def build_grid(spec: WorldSpec) -> HexGrid:
    """Validate a :class:`WorldSpec` and construct the grid.

    Raises :class:`MalformedWorldError`, :class:`EndpointOccludedError`, or
    :class:`DisconnectedWorldError` for the distinct failure modes.
    """
    if spec.cell_spacing_m <= 0:
        raise MalformedWorldError("cell_spacing_m must be positive")
    cells = spec.cell_set()
    occluded = set(spec.occlusions)
    stray = occluded - cells
    if stray:
        raise MalformedWorldError(f"occlusions outside declared cells: {sorted(stray, key=lambda c: (c.q, c.r))[:5]}")
    for name, c in (("start_gate", spec.start_gate), ("goal", spec.goal)):
        if c not in cells:
            raise MalformedWorldError(f"{name} {c} is not a declared cell")
        if c in occluded:
            raise EndpointOccludedError(f"{name} {c} is occluded")
    free = cells - occluded
    seen = {spec.start_gate}
    queue = deque([spec.start_gate])
    while queue:
        cur = queue.popleft()
        for n in cur.neighbors():
            if n in free and n not in seen:
                seen.add(n)
                queue.append(n)
    # The gate and goal must share one free component; sealed side pockets
    # elsewhere are legal (e.g. an unreachable spawn region).
    if spec.goal not in seen:
        raise DisconnectedWorldError(
            "occlusions disconnect the goal from the start gate"
        )
    return HexGrid(
        cells,
        occluded,
        spec.cell_spacing_m,
        spec.start_gate,
        spec.goal,
        spec.long_diagonal_m,
    )


def load_grid(path: str | pathlib.Path) -> HexGrid:
    """Parse and validate a ``.world`` file in one step."""
    return build_grid(load_world(path))


def builtin_world_path(name: str) -> pathlib.Path:
    """Path of a world file shipped with the package (e.g. ``arena_paper``)."""
    fname = name if name.endswith(".world") else f"{name}.world"
    p = pathlib.Path(__file__).parent / "worlds" / fname
    if not p.exists():
        raise MalformedWorldError(f"no builtin world named {name!r}")
    return p

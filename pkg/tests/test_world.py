from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexevade.world import (
    AXIAL_DIRECTIONS,
    CellPath,
    DisconnectedWorldError,
    EndpointOccludedError,
    HexCoord,
    MalformedWorldError,
    UnreachableCellError,
    WorldError,
    WorldSpec,
    axial_distance,
    build_grid,
    builtin_world_path,
    center_xy,
    hexagon_region,
    load_grid,
    load_world,
)

from conftest import make_grid
from oracles import bfs_path_length, line_of_sight_exact


def test_neighbor_offsets_are_the_six_axial_units():
    c = HexCoord(3, -2)
    diffs = {(n.q - c.q, n.r - c.r) for n in c.neighbors()}
    assert diffs == set(AXIAL_DIRECTIONS)
    assert len(c.neighbors()) == 6


def test_adjacent_centers_are_unit_distance():
    c = HexCoord(-4, 7)
    cx, cy = center_xy(c)
    for n in c.neighbors():
        nx, ny = center_xy(n)
        assert math.hypot(nx - cx, ny - cy) == pytest.approx(1.0)


class TestBuildGrid:
    def test_paper_arena_has_330_cells_and_11cm_spacing(self, paper_grid):
        assert paper_grid.n_cells == 330
        assert paper_grid.cell_spacing_m == 0.11
        assert paper_grid.long_diagonal_m == 2.34

    def test_zero_occlusions_means_all_free(self, open_grid):
        assert not open_grid.occluded
        assert len(open_grid.free_indices) == open_grid.n_cells

    def test_splitting_occlusions_rejected(self):
        # a full wall across a radius-2 region
        wall = [(q, 0) for q in range(-2, 3)]
        with pytest.raises(DisconnectedWorldError):
            make_grid(2, occlusions=wall, start=HexCoord(0, -2), goal=HexCoord(0, 2))

    def test_occluded_start_rejected(self):
        with pytest.raises(EndpointOccludedError):
            make_grid(2, occlusions=[(0, -2)], start=HexCoord(0, -2))

    def test_start_outside_cells_rejected(self):
        with pytest.raises(MalformedWorldError):
            make_grid(2, start=HexCoord(5, 5))

    def test_occlusion_outside_cells_rejected(self):
        with pytest.raises(MalformedWorldError):
            make_grid(2, occlusions=[(9, 9)])

    def test_bad_spacing_rejected(self):
        spec = WorldSpec(
            cell_spacing_m=0.0,
            start_gate=HexCoord(0, 0),
            goal=HexCoord(1, 0),
            hex_radius=1,
        )
        with pytest.raises(MalformedWorldError):
            build_grid(spec)

    def test_world_file_roundtrip(self, tmp_path):
        spec = WorldSpec(
            cell_spacing_m=0.11,
            start_gate=HexCoord(0, -2),
            goal=HexCoord(0, 2),
            hex_radius=2,
            occlusions=(HexCoord(1, 0),),
        )
        p = tmp_path / "w.world"
        p.write_text(json.dumps(spec.to_json()))
        again = load_world(p)
        assert again == spec

    def test_malformed_file_raises(self, tmp_path):
        p = tmp_path / "bad.world"
        p.write_text("{not json")
        with pytest.raises(MalformedWorldError):
            load_world(p)

    def test_builtin_world_lookup(self):
        assert builtin_world_path("arena_tiny").name == "arena_tiny.world"
        with pytest.raises(MalformedWorldError):
            builtin_world_path("no_such_world")


class TestNeighbors:
    def test_interior_cell_has_six(self, open_grid):
        assert len(open_grid.neighbors(HexCoord(0, 0))) == 6

    def test_corner_cell_has_fewer(self, open_grid):
        assert len(open_grid.neighbors(HexCoord(0, -10))) == 3

    def test_fully_surrounded_cell_has_none(self):
        # raw constructor: build_grid would reject the disconnected pocket
        from hexevade.world import HexGrid

        cells = set(hexagon_region(2))
        occluded = set(HexCoord(0, 0).neighbors())
        grid = HexGrid(cells, occluded, 0.11, HexCoord(0, -2), HexCoord(0, 2))
        assert grid.neighbors(HexCoord(0, 0)) == []

    def test_non_cell_raises(self, tiny_grid):
        with pytest.raises(WorldError):
            tiny_grid.neighbors(HexCoord(40, 40))


class TestLineOfSight:
    def test_reflexive(self, tiny_grid):
        c = HexCoord(1, 1)
        assert tiny_grid.line_of_sight(c, c)

    def test_adjacent_always_true(self, tiny_grid):
        for c in tiny_grid.coords:
            if not tiny_grid.is_free(c):
                continue
            for n in tiny_grid.neighbors(c):
                assert tiny_grid.line_of_sight(c, n)

    def test_occluded_cell_on_segment_blocks(self):
        grid = make_grid(3, occlusions=[(0, 0)])
        assert not grid.line_of_sight(HexCoord(0, -2), HexCoord(0, 2))

    def test_matches_exact_oracle_on_parallelogram_grid(self):
        # 5x5 parallelogram with scattered occlusions; compare every free pair
        cells = [HexCoord(q, r) for q in range(5) for r in range(5)]
        occ = [(1, 1), (3, 2), (2, 3)]
        grid = make_grid(
            0, occlusions=occ, start=HexCoord(0, 0), goal=HexCoord(4, 4), cells=cells
        )
        free = [c for c in grid.coords if grid.is_free(c)]
        for a in free:
            for b in free:
                assert grid.line_of_sight(a, b) == line_of_sight_exact(grid, a, b), (a, b)

    def test_symmetry_on_paper_arena(self, paper_grid):
        rng = random.Random(5)
        free = [paper_grid.coords[i] for i in paper_grid.free_indices]
        for _ in range(300):
            a, b = rng.choice(free), rng.choice(free)
            assert paper_grid.line_of_sight(a, b) == paper_grid.line_of_sight(b, a)

    def test_requires_free_cells(self, tiny_grid):
        occ = next(iter(tiny_grid.occluded))
        with pytest.raises(WorldError):
            tiny_grid.line_of_sight(tiny_grid.start_gate, occ)


class TestShortestPath:
    def test_identity(self, tiny_grid):
        p = tiny_grid.shortest_path(tiny_grid.start_gate, tiny_grid.start_gate)
        assert p.steps == (tiny_grid.start_gate,)

    def test_adjacent(self, tiny_grid):
        a = tiny_grid.start_gate
        b = tiny_grid.neighbors(a)[0]
        assert tiny_grid.shortest_path(a, b).steps == (a, b)

    @pytest.mark.parametrize("world", ["arena_tiny", "arena_paper", "arena_open"])
    def test_lengths_match_bfs_oracle(self, world, request):
        grid = load_grid(builtin_world_path(world))
        rng = random.Random(17)
        free = [c for c in grid.coords if grid.is_free(c)]
        for _ in range(100):
            a, b = rng.choice(free), rng.choice(free)
            got = len(grid.shortest_path(a, b))
            want = bfs_path_length(grid, a, b)
            assert got == want, (a, b)

    def test_path_validity_invariants(self, paper_grid):
        rng = random.Random(3)
        free = [paper_grid.coords[i] for i in paper_grid.free_indices]
        for _ in range(50):
            a, b = rng.choice(free), rng.choice(free)
            path = paper_grid.shortest_path(a, b)
            assert path.start == a and path.end == b
            for u, v in zip(path.steps, path.steps[1:]):
                assert axial_distance(u, v) == 1
                assert paper_grid.is_free(v)

    def test_chain_path_lengths_match_astar(self, paper_grid):
        rng = random.Random(11)
        free = [paper_grid.coords[i] for i in paper_grid.free_indices]
        for _ in range(60):
            a, b = rng.choice(free), rng.choice(free)
            assert len(paper_grid.chain_path(a, b)) == len(paper_grid.shortest_path(a, b))

    def test_unreachable_raises(self):
        from hexevade.world import HexGrid

        cells = set(hexagon_region(2))
        occluded = set(HexCoord(0, 0).neighbors())
        grid = HexGrid(cells, occluded, 0.11, HexCoord(0, -2), HexCoord(0, 2))
        with pytest.raises(UnreachableCellError):
            grid.shortest_path(HexCoord(0, -2), HexCoord(0, 0))

    def test_deterministic(self, paper_grid):
        a, b = HexCoord(-5, -2), HexCoord(6, 1)
        p1 = paper_grid.shortest_path(a, b)
        p2 = paper_grid.shortest_path(a, b)
        assert p1.steps == p2.steps


class TestDistances:
    def test_zero_for_same_cell(self, tiny_grid):
        c = HexCoord(2, -2)
        assert tiny_grid.distance_cells(c, c) == 0.0

    def test_adjacent_is_one_cell_and_11cm(self, paper_grid):
        a = HexCoord(0, 0 - 1)
        b = HexCoord(0, -2)
        assert paper_grid.distance_cells(a, b) == pytest.approx(1.0)
        assert paper_grid.distance_m(a, b) == pytest.approx(0.11)

    def test_capture_radius_in_meters(self, paper_grid):
        assert 2.5 * paper_grid.cell_spacing_m == pytest.approx(0.275)

    @given(
        st.integers(-8, 8), st.integers(-8, 8),
        st.integers(-8, 8), st.integers(-8, 8),
        st.integers(-8, 8), st.integers(-8, 8),
    )
    @settings(max_examples=200, deadline=None)
    def test_triangle_inequality(self, q1, r1, q2, r2, q3, r3):
        from hexevade.world import HexGrid

        a, b, c = HexCoord(q1, r1), HexCoord(q2, r2), HexCoord(q3, r3)
        grid = HexGrid(
            set(hexagon_region(16)), set(), 0.11, HexCoord(0, 0), HexCoord(1, 0)
        )
        ab = grid.distance_cells(a, b)
        bc = grid.distance_cells(b, c)
        ac = grid.distance_cells(a, c)
        assert ac <= ab + bc + 1e-9


@given(st.integers(0, 6))
@settings(max_examples=7, deadline=None)
def test_hexagon_region_size(radius):
    assert len(hexagon_region(radius)) == 3 * radius * (radius + 1) + 1


@given(st.randoms(use_true_random=False))
@settings(max_examples=15, deadline=None)
def test_astar_equals_bfs_on_all_pairs_of_random_grids(rnd):
    # random radius-3 arenas (<=37 cells) with random occlusions, checked
    # over every free pair
    region = hexagon_region(3)
    occ = [c for c in region if rnd.random() < 0.2 and abs(c.q) + abs(c.r) > 0]
    from hexevade.world import HexGrid

    grid = HexGrid(set(region), set(occ), 0.11, HexCoord(0, 0), HexCoord(0, 0))
    free = [c for c in grid.coords if grid.is_free(c)]
    for a in free:
        for b in free:
            want = bfs_path_length(grid, a, b)
            if want is None:
                with pytest.raises(UnreachableCellError):
                    grid.shortest_path(a, b)
            else:
                assert len(grid.shortest_path(a, b)) == want

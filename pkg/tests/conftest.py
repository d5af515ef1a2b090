from __future__ import annotations

import pytest

from hexevade.world import HexCoord, WorldSpec, build_grid, builtin_world_path, load_grid


@pytest.fixture(scope="session")
def paper_grid():
    grid = load_grid(builtin_world_path("arena_paper"))
    grid.ensure_tables()
    return grid


@pytest.fixture(scope="session")
def tiny_grid():
    grid = load_grid(builtin_world_path("arena_tiny"))
    grid.ensure_tables()
    return grid


@pytest.fixture(scope="session")
def open_grid():
    grid = load_grid(builtin_world_path("arena_open"))
    grid.ensure_tables()
    return grid


@pytest.fixture(scope="session")
def toy_grid():
    """Open radius-2 arena: small enough for exact full-width oracles."""
    spec = WorldSpec(
        cell_spacing_m=0.11,
        start_gate=HexCoord(0, -2),
        goal=HexCoord(0, 2),
        hex_radius=2,
    )
    grid = build_grid(spec)
    grid.ensure_tables()
    return grid


def make_grid(radius: int, occlusions=(), start=None, goal=None, cells=None):
    spec = WorldSpec(
        cell_spacing_m=0.11,
        start_gate=start or HexCoord(0, -radius),
        goal=goal or HexCoord(0, radius),
        hex_radius=None if cells is not None else radius,
        explicit_cells=tuple(cells) if cells is not None else None,
        occlusions=tuple(HexCoord(q, r) for q, r in occlusions),
    )
    grid = build_grid(spec)
    grid.ensure_tables()
    return grid

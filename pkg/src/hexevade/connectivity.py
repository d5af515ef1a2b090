"""Connectedness analysis: eigencentrality and planning-payoff locations.

The pipeline mirrors how transitional spaces (doorways, passage mouths,
occlusion edges) stand out in a connectivity map: compute the principal
eigenvector of the free-cell adjacency, take absolute differences along all
six hex directions, multiply them, and keep cells whose product clears a
percentile threshold.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .world import AXIAL_DIRECTIONS, HexCoord, HexGrid

DEFAULT_PERCENTILE = 95.0


class CentralityConvergenceError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(last step residual {residual:.3e})"
        )


@dataclass(frozen=True)
class CentralityField:
    """Unit-norm nonnegative eigencentrality per free cell."""

    values: dict[HexCoord, float]


@dataclass(frozen=True)
class DerivativeProductField:
    """Per-cell product of |centrality difference| over the six directions.

    Occluded or out-of-bounds neighbors count as zero centrality, so walls
    create gradient.
    """

    values: dict[HexCoord, float]


@dataclass(frozen=True)
class LppoSet:
    """Cells whose derivative product clears the threshold."""

    locations: frozenset[HexCoord]
    threshold: float
    warning: str | None = None


def _start_component(grid: HexGrid) -> list[HexCoord]:
    seen = {grid.start_gate}
    queue = deque([grid.start_gate])
    while queue:
        cur = queue.popleft()
        for n in grid.neighbors(cur):
            if n not in seen:
                seen.add(n)
                queue.append(n)
    return sorted(seen, key=lambda c: (c.q, c.r))


def eigencentrality(
    grid: HexGrid, tol: float = 1e-10, max_iter: int = 10_000
) -> CentralityField:
    """Principal eigenvector of the free-cell adjacency matrix.

    Computed by power iteration on A + I (the shift preserves the principal
    eigenvector and avoids oscillation on bipartite subgraphs); converges
    when the sup-norm step falls below ``tol``. Restricted to the free
    component containing the start gate.
    """
    comp = _start_component(grid)
    n = len(comp)
    local = {c: i for i, c in enumerate(comp)}
    adj = np.zeros((n, n), dtype=np.float64)
    for c, i in local.items():
        for nb in grid.neighbors(c):
            j = local.get(nb)
            if j is not None:
                adj[i, j] = 1.0
    v = np.full(n, 1.0 / np.sqrt(n))
    step = np.inf
    for _ in range(max_iter):
        w = adj @ v + v
        w /= np.linalg.norm(w)
        step = float(np.max(np.abs(w - v)))
        v = w
        if step < tol:
            break
    else:
        raise CentralityConvergenceError(max_iter, step)
    return CentralityField({c: float(v[i]) for c, i in local.items()})


def derivative_product(field: CentralityField, grid: HexGrid) -> DerivativeProductField:
    """Product over the six directions of |EC(neighbor) - EC(cell)|."""
    vals = field.values
    out: dict[HexCoord, float] = {}
    for c, ec in vals.items():
        prod = 1.0
        for dq, dr in AXIAL_DIRECTIONS:
            nb = HexCoord(c.q + dq, c.r + dr)
            prod *= abs(vals.get(nb, 0.0) - ec)
        out[c] = prod
    return DerivativeProductField(out)


def extract_lppo(
    dfield: DerivativeProductField, percentile: float = DEFAULT_PERCENTILE
) -> LppoSet:
    """Threshold the derivative-product field at a percentile of its
    positive values."""
    if not (0.0 < percentile < 100.0):
        raise ValueError(f"percentile must be in (0, 100), got {percentile}")
    positives = [v for v in dfield.values.values() if v > 0.0]
    if not positives:
        return LppoSet(
            frozenset(),
            0.0,
            warning="derivative product is zero everywhere; no locations selected",
        )
    # "lower" keeps the threshold an actual data value, so the percentile->0
    # limit retains every positive cell exactly.
    threshold = float(np.percentile(positives, percentile, method="lower"))
    locations = frozenset(c for c, v in dfield.values.items() if v >= threshold)
    return LppoSet(locations, threshold)


def lppo_pipeline(grid: HexGrid, percentile: float = DEFAULT_PERCENTILE) -> LppoSet:
    """eigencentrality -> directional derivative product -> threshold."""
    return extract_lppo(derivative_product(eigencentrality(grid), grid), percentile)

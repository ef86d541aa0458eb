"""Gaussian kernel density estimation of shot charts on a shared grid.

Each player contributes two smoothed fields, one from missed and one
from made attempts, estimated with a product Gaussian kernel whose
per-axis bandwidths come from the two-dimensional rule-of-thumb
h_j = sigma_j * n**(-1/6). Fields are renormalized so their trapezoidal
integral over the grid equals one; mass leaking outside the unit square
is folded back by that renormalization rather than by boundary kernels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from court_fda.grids import GridSpec, grid_integral
from court_fda.ingest import PlayerRecord

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class DegenerateBandwidthError(ValueError):
    """Bandwidth selection failed: too few points or a zero-variance axis."""


class DensityError(ValueError):
    """Density estimation failed for a specific player and component."""


@dataclass
class DensityField:
    """One smoothed density evaluated on a grid.

    values has shape (nx, ny), is non-negative everywhere, and its
    trapezoidal integral over the unit square is 1.
    """

    grid: GridSpec
    values: np.ndarray


@dataclass
class FunctionalSample:
    """One player's bivariate functional observation.

    The two components are the missed-shot and made-shot densities,
    sharing a single grid.
    """

    player_id: str
    missed: DensityField
    made: DensityField

    def __post_init__(self) -> None:
        if self.missed.grid != self.made.grid:
            raise ValueError(f"player {self.player_id}: missed and made fields use different grids")

    @property
    def grid(self) -> GridSpec:
        return self.missed.grid

    def stacked(self) -> np.ndarray:
        """Component-stacked view of shape (2, nx, ny): missed first, made second."""
        return np.stack([self.missed.values, self.made.values])


def silverman_bandwidth(points: np.ndarray) -> tuple[float, float]:
    """Per-axis rule-of-thumb bandwidths for a 2-D Gaussian KDE.

    h_j = sigma_j * (4 / ((d + 2) n))**(1 / (d + 4)) with d = 2, which
    reduces to sigma_j * n**(-1/6). sigma_j is the per-axis sample
    standard deviation with the n-1 denominator.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise DegenerateBandwidthError(f"need at least 2 points, got {n}")
    sig = pts.std(axis=0, ddof=1)
    if sig[0] == 0.0 or sig[1] == 0.0:
        axis = "x" if sig[0] == 0.0 else "y"
        raise DegenerateBandwidthError(f"zero variance along {axis}")
    factor = n ** (-1.0 / 6.0)
    return float(sig[0] * factor), float(sig[1] * factor)


def kde_raw(points: np.ndarray, bandwidth: tuple[float, float], grid: GridSpec = GridSpec()) -> np.ndarray:
    """Unnormalized Gaussian product-kernel estimate at every grid node.

        f(t) = 1/(n hx hy) * sum_i G((t1 - x_i)/hx) G((t2 - y_i)/hy)

    with G the standard normal density. The value at a node depends only
    on the node coordinates, not on the rest of the grid.
    """
    hx, hy = bandwidth
    if hx <= 0 or hy <= 0:
        raise ValueError(f"bandwidths must be positive, got ({hx}, {hy})")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        raise ValueError("cannot estimate a density from an empty point set")
    kx = _INV_SQRT_2PI * np.exp(-0.5 * ((grid.xs[:, None] - pts[None, :, 0]) / hx) ** 2)
    ky = _INV_SQRT_2PI * np.exp(-0.5 * ((grid.ys[:, None] - pts[None, :, 1]) / hy) ** 2)
    return (kx @ ky.T) / (n * hx * hy)


def kde(points: np.ndarray, bandwidth: tuple[float, float], grid: GridSpec = GridSpec()) -> DensityField:
    """Gaussian KDE renormalized to integrate to 1 over the grid."""
    raw = kde_raw(points, bandwidth, grid)
    return DensityField(grid, raw / grid_integral(raw))


def build_sample(record: PlayerRecord, grid: GridSpec = GridSpec()) -> FunctionalSample:
    """Estimate both of a player's densities, one bandwidth pair per component."""
    fields: dict[str, DensityField] = {}
    for component, pts in (("missed", record.missed_points), ("made", record.made_points)):
        try:
            fields[component] = kde(pts, silverman_bandwidth(pts), grid)
        except ValueError as exc:
            raise DensityError(f"player {record.player_id}, {component} shots: {exc}") from exc
    return FunctionalSample(record.player_id, fields["missed"], fields["made"])


def build_samples(
    records: Sequence[PlayerRecord], grid: GridSpec = GridSpec(), threads: int = 1
) -> list[FunctionalSample]:
    """Estimate densities for every record, optionally across worker threads.

    Results are returned in record order and are identical for any thread
    count: each field is evaluated in a fixed node order and players are
    independent.
    """
    if threads <= 1 or len(records) <= 1:
        return [build_sample(r, grid) for r in records]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: build_sample(r, grid), records))

"""Sparse voxel database of magnetic anchors.

Each voxel of edge ``l_db`` accumulates a weighted vector sum of unit
anchor directions observed inside it; a query returns the normalized
sum (the average direction). Updating during fast motion can be
down-weighted through the inertial angular index (IAI), an exponential
moving average of gyro magnitude: anchors generated while IAI exceeds
its threshold carry the reduced weight ``w`` instead of 1. A first
update always creates the voxel so it is immediately queryable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .geom import Rotation, angle_between

__all__ = [
    "ZeroFieldError",
    "EmptyDatabaseError",
    "AccumulatedAnchor",
    "AnchorVoxelGrid",
    "IaiTracker",
    "compute_anchor",
    "iai_step",
    "update",
    "query",
    "database_error",
    "memory_footprint",
    "write_grid_csv",
]

# 3 float64 (vector sum) + float64 weight + int64 visits + 3 int64 key
BYTES_PER_VOXEL = 64


class ZeroFieldError(ValueError):
    pass


class EmptyDatabaseError(ValueError):
    pass


@dataclass
class AccumulatedAnchor:
    total: np.ndarray  # unnormalized weighted sum of unit anchors
    weight_total: float
    visit_count: int


@dataclass
class AnchorVoxelGrid:
    l_db: float = 0.1  # metres per voxel edge
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cells: dict[tuple[int, int, int], AccumulatedAnchor] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.l_db <= 0:
            raise ValueError("l_db must be positive")
        self.origin = np.asarray(self.origin, dtype=float)

    def voxel_index(self, location: np.ndarray) -> tuple[int, int, int]:
        rel = (np.asarray(location, dtype=float) - self.origin) / self.l_db
        return (int(math.floor(rel[0])), int(math.floor(rel[1])), int(math.floor(rel[2])))

    def voxel_center(self, index: tuple[int, int, int]) -> np.ndarray:
        return self.origin + (np.asarray(index, dtype=float) + 0.5) * self.l_db

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def mean_visits(self) -> float:
        if not self.cells:
            return 0.0
        return sum(c.visit_count for c in self.cells.values()) / len(self.cells)


@dataclass(frozen=True)
class IaiTracker:
    """Exponentially smoothed gyro magnitude used to grade anchor trust."""

    iai: float = 0.0
    k_iai: float = 0.95
    iai_0: float = 1.0
    w: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.k_iai < 1.0:
            raise ValueError("k_iai must be in (0, 1)")
        if self.w <= 0.0:
            raise ValueError("w must be positive")
        if self.iai < 0.0:
            raise ValueError("iai must be non-negative")


def compute_anchor(mag: np.ndarray, theta_hat: Rotation) -> np.ndarray:
    """Unit magnetic anchor in GRF from a WRF magnetometer reading."""
    m = np.asarray(mag, dtype=float)
    n = float(np.linalg.norm(m))
    if n < 1e-9:
        raise ZeroFieldError("magnetometer reading has (near-)zero magnitude")
    return theta_hat.apply(m / n)


def iai_step(tracker: IaiTracker, omega: np.ndarray) -> IaiTracker:
    """One smoothing step with the gyro vector's Euclidean norm in rad/s."""
    w = np.asarray(omega, dtype=float)
    mag = math.sqrt(float(w @ w))
    return replace(tracker, iai=tracker.iai * tracker.k_iai + mag * (1.0 - tracker.k_iai))


def update(
    grid: AnchorVoxelGrid,
    location: np.ndarray,
    anchor: np.ndarray,
    tracker: IaiTracker,
    adaptive: bool,
) -> None:
    """Accumulate a unit anchor at the voxel containing ``location``.

    Full weight 1 normally; the reduced weight ``tracker.w`` when
    adaptive updating is on and the IAI exceeds its threshold.
    """
    idx = grid.voxel_index(location)
    weight = 1.0
    if adaptive and tracker.iai > tracker.iai_0:
        weight = tracker.w
    cell = grid.cells.get(idx)
    if cell is None:
        grid.cells[idx] = AccumulatedAnchor(
            total=weight * np.asarray(anchor, dtype=float),
            weight_total=weight,
            visit_count=1,
        )
    else:
        cell.total = cell.total + weight * np.asarray(anchor, dtype=float)
        cell.weight_total += weight
        cell.visit_count += 1


def query(grid: AnchorVoxelGrid, location: np.ndarray) -> Optional[np.ndarray]:
    """Average anchor direction at the voxel, or None when the voxel is empty."""
    cell = grid.cells.get(grid.voxel_index(location))
    if cell is None:
        return None
    n = float(np.linalg.norm(cell.total))
    if n < 1e-12:
        # Accumulated anchors cancelled out; treat as unusable.
        return None
    return cell.total / n


def database_error(
    grid: AnchorVoxelGrid, true_field: Callable[[np.ndarray], np.ndarray]
) -> float:
    """Mean angular error (degrees) of stored anchors against the true field.

    ``true_field`` maps a GRF location to the true unit field direction;
    it is evaluated at each filled voxel's center.
    """
    if not grid.cells:
        raise EmptyDatabaseError("database holds no anchors")
    total = 0.0
    count = 0
    for idx, cell in grid.cells.items():
        n = float(np.linalg.norm(cell.total))
        if n < 1e-12:
            continue
        stored = cell.total / n
        truth = true_field(grid.voxel_center(idx))
        total += angle_between(stored, truth)
        count += 1
    if count == 0:
        raise EmptyDatabaseError("database holds no usable anchors")
    return total / count


def memory_footprint(grid: AnchorVoxelGrid) -> int:
    """Deterministic payload size in bytes: filled voxels times BYTES_PER_VOXEL."""
    return len(grid.cells) * BYTES_PER_VOXEL


def write_grid_csv(grid: AnchorVoxelGrid, path: str | Path) -> None:
    """Dump filled voxels as ``ix,iy,iz,nx,ny,nz,weight_total,visit_count``."""
    lines = ["ix,iy,iz,nx,ny,nz,weight_total,visit_count"]
    for idx in sorted(grid.cells):
        cell = grid.cells[idx]
        n = float(np.linalg.norm(cell.total))
        direction = cell.total / n if n > 1e-12 else np.zeros(3)
        vals = [*idx, *direction, cell.weight_total, cell.visit_count]
        lines.append(",".join(format(v, ".9g") if isinstance(v, float) else str(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")

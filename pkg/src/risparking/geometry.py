"""Parking-lot geometry: ROI grid, parking-space layout and RIS panels.

All coordinates are in meters. The ROI lies in the ground plane ``z = 0``
and grid unit ``q`` sits at column ``q % nx``, row ``q // nx``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class InvalidLayoutError(ValueError):
    """Raised when grid rows cannot be grouped into parking spaces."""


class Point3(NamedTuple):
    x: float
    y: float
    z: float


ORIGIN = Point3(0.0, 0.0, 0.0)


def as_points(points) -> np.ndarray:
    """Coerce a Point3, a sequence of points or an array to shape ``(n, 3)``."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected points of shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


@dataclass(frozen=True)
class RoiGrid:
    nx: int
    ny: int
    cell_size: float
    center: Point3 = ORIGIN

    @property
    def Q(self) -> int:
        return self.nx * self.ny

    def unit_index(self, col: int, row: int) -> int:
        if not (0 <= col < self.nx and 0 <= row < self.ny):
            raise IndexError(f"unit ({col}, {row}) outside {self.nx}x{self.ny} grid")
        return row * self.nx + col

    def unit_coords(self, q: int) -> tuple[int, int]:
        if not 0 <= q < self.Q:
            raise IndexError(f"unit {q} outside grid of {self.Q} units")
        row, col = divmod(q, self.nx)
        return col, row

    @property
    def centers(self) -> np.ndarray:
        """Unit centers, shape ``(Q, 3)``, ordered by unit index."""
        cols = np.tile(np.arange(self.nx), self.ny)
        rows = np.repeat(np.arange(self.ny), self.nx)
        cx, cy, cz = self.center
        return np.column_stack([
            cx + (cols + 0.5 - self.nx / 2) * self.cell_size,
            cy + (rows + 0.5 - self.ny / 2) * self.cell_size,
            np.full(self.Q, float(cz)),
        ])


@dataclass(frozen=True)
class ParkingLayout:
    """Mapping between grid units and parking spaces.

    ``spaces[i]`` is ``(space_id, unit_indices)``; every unit not covered by a
    space belongs to ``lane_units``.
    """

    spaces: tuple[tuple[int, tuple[int, ...]], ...]
    lane_units: frozenset[int]
    Q: int

    @property
    def n_spaces(self) -> int:
        return len(self.spaces)

    @property
    def C(self) -> int:
        return len(self.spaces[0][1]) if self.spaces else 0

    @property
    def space_units(self) -> np.ndarray:
        """Unit indices per space, shape ``(n_spaces, C)``."""
        return np.array([units for _, units in self.spaces], dtype=int).reshape(self.n_spaces, self.C)

    @property
    def parking_units(self) -> frozenset[int]:
        return frozenset(u for _, units in self.spaces for u in units)


@dataclass(frozen=True)
class PlanarArray:
    """Horizontal planar array (RIS) with ``rows x cols`` elements."""

    center: Point3
    rows: int
    cols: int
    pitch: float

    @property
    def M(self) -> int:
        return self.rows * self.cols

    @property
    def elements(self) -> np.ndarray:
        """Element centers, shape ``(M, 3)``, row-major."""
        ox = (np.arange(self.cols) - (self.cols - 1) / 2) * self.pitch
        oy = (np.arange(self.rows) - (self.rows - 1) / 2) * self.pitch
        cx, cy, cz = self.center
        return np.column_stack([
            cx + np.tile(ox, self.rows),
            cy + np.repeat(oy, self.cols),
            np.full(self.M, float(cz)),
        ])


@dataclass(frozen=True)
class Scene:
    """Everything the sensing matrix depends on apart from phases and radio."""

    grid: RoiGrid
    tx: tuple[Point3, ...]
    rx: tuple[Point3, ...]
    ris: tuple[PlanarArray, ...] = field(default_factory=tuple)

    @property
    def n_tx(self) -> int:
        return len(self.tx)

    @property
    def n_rx(self) -> int:
        return len(self.rx)

    @property
    def T(self) -> int:
        return len(self.ris)


def _check_point(p) -> Point3:
    p = Point3(*map(float, p))
    if not all(np.isfinite(p)):
        raise ValueError(f"non-finite point {p}")
    return p


def build_grid(nx: int, ny: int, cell_size: float, center=ORIGIN) -> RoiGrid:
    if nx < 1 or ny < 1:
        raise ValueError(f"grid dimensions must be positive, got {nx}x{ny}")
    if not cell_size > 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    return RoiGrid(int(nx), int(ny), float(cell_size), _check_point(center))


def build_parking_layout(grid: RoiGrid, lane_rows, units_per_space: int = 2) -> ParkingLayout:
    """Group non-lane rows into spaces of ``units_per_space`` stacked units.

    Rows outside ``lane_rows`` must form runs of adjacent rows whose lengths
    are multiples of ``units_per_space``; each column of each group of rows
    becomes one space. Space ids count groups from -y, then columns from -x.
    """
    lane_rows = set(int(r) for r in lane_rows)
    if any(not 0 <= r < grid.ny for r in lane_rows):
        raise InvalidLayoutError(f"lane rows {sorted(lane_rows)} outside 0..{grid.ny - 1}")
    if units_per_space < 1:
        raise ValueError("units_per_space must be positive")

    runs: list[list[int]] = []
    for row in range(grid.ny):
        if row in lane_rows:
            continue
        if runs and runs[-1][-1] == row - 1:
            runs[-1].append(row)
        else:
            runs.append([row])

    groups = []
    for run in runs:
        if len(run) % units_per_space:
            raise InvalidLayoutError(
                f"rows {run[0]}..{run[-1]} cannot be split into groups of {units_per_space}")
        groups.extend(run[i:i + units_per_space] for i in range(0, len(run), units_per_space))

    spaces = []
    for rows in groups:
        for col in range(grid.nx):
            units = tuple(grid.unit_index(col, r) for r in rows)
            spaces.append((len(spaces), units))
    lanes = frozenset(grid.unit_index(c, r) for r in lane_rows for c in range(grid.nx))
    return ParkingLayout(tuple(spaces), lanes, grid.Q)


def build_ris_array(center, rows: int, cols: int, pitch: float) -> PlanarArray:
    if rows < 1 or cols < 1:
        raise ValueError(f"array dimensions must be positive, got {rows}x{cols}")
    if not pitch > 0:
        raise ValueError(f"pitch must be positive, got {pitch}")
    return PlanarArray(_check_point(center), int(rows), int(cols), float(pitch))


def build_scene(grid: RoiGrid, tx: Sequence, rx: Sequence, ris: Sequence[PlanarArray]) -> Scene:
    return Scene(grid, tuple(_check_point(p) for p in tx),
                 tuple(_check_point(p) for p in rx), tuple(ris))

"""Occupancy-grid maps, robot poses, and the fan-shaped field of view.

Coordinates are cell indices ``(x, y)`` with ``x`` increasing eastward
(columns) and ``y`` increasing southward (rows), so text maps read the way
they are written. NORTH points toward row 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

Cell = tuple[int, int]

# Tolerance for closed-interval geometry tests (range and half-angle ties).
_GEOM_EPS = 1e-9


class GridError(ValueError):
    """Raised for malformed map text or invalid grid/pose combinations."""


class Direction(IntEnum):
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3

    @property
    def vector(self) -> Cell:
        return _VECTORS[self]

    @property
    def opposite(self) -> "Direction":
        return Direction((self + 2) % 4)


_VECTORS: dict[Direction, Cell] = {
    Direction.NORTH: (0, -1),
    Direction.EAST: (1, 0),
    Direction.SOUTH: (0, 1),
    Direction.WEST: (-1, 0),
}

DIRECTIONS = (Direction.NORTH, Direction.EAST, Direction.SOUTH, Direction.WEST)


@dataclass(frozen=True)
class OccupancyGrid:
    """A known map: ``cells`` is row-major, True marks an occupied cell."""

    width: int
    height: int
    cells: tuple[bool, ...]
    cell_size_m: float = 0.25

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GridError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if len(self.cells) != self.width * self.height:
            raise GridError("cell tuple length does not match grid dimensions")
        if self.cell_size_m <= 0:
            raise GridError(f"cell_size_m must be positive, got {self.cell_size_m}")
        if all(self.cells):
            raise GridError("grid has no free cell")

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_occupied(self, x: int, y: int) -> bool:
        return self.cells[y * self.width + x]

    def is_free(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and not self.cells[y * self.width + x]

    def free_cells(self) -> tuple[Cell, ...]:
        return _free_cells(self)

    @property
    def num_free(self) -> int:
        return len(self.free_cells())

    def to_text(self) -> str:
        rows = []
        for y in range(self.height):
            row = self.cells[y * self.width:(y + 1) * self.width]
            rows.append("".join("#" if c else "." for c in row))
        return "\n".join(rows)


@lru_cache(maxsize=None)
def _free_cells(grid: OccupancyGrid) -> tuple[Cell, ...]:
    return tuple(
        (x, y)
        for y in range(grid.height)
        for x in range(grid.width)
        if not grid.cells[y * grid.width + x]
    )


@dataclass(frozen=True)
class RobotPose:
    x: int
    y: int
    orientation: Direction

    @property
    def cell(self) -> Cell:
        return (self.x, self.y)


@dataclass(frozen=True)
class FanParams:
    """Geometry of the fan-shaped sensing region."""

    fov_degrees: float = 90.0
    range_cells: float = 4.0
    occlusion_enabled: bool = True

    def __post_init__(self):
        if not 0 < self.fov_degrees <= 180:
            raise GridError(f"fov_degrees must be in (0, 180], got {self.fov_degrees}")
        if self.range_cells < 1:
            raise GridError(f"range_cells must be >= 1, got {self.range_cells}")


def load_grid(text_map: str, cell_size_m: float = 0.25) -> OccupancyGrid:
    """Parse a text map: rows of '.' (free) and '#' (occupied).

    A single trailing newline is tolerated; ragged rows and unknown
    characters are reported with their row/column position.
    """
    if text_map.endswith("\n"):
        text_map = text_map[:-1]
    rows = text_map.split("\n")
    if not rows or not rows[0]:
        raise GridError("empty map text")
    width = len(rows[0])
    cells: list[bool] = []
    for y, row in enumerate(rows):
        if len(row) != width:
            raise GridError(f"ragged map: row {y} has length {len(row)}, expected {width}")
        for x, ch in enumerate(row):
            if ch == ".":
                cells.append(False)
            elif ch == "#":
                cells.append(True)
            else:
                raise GridError(f"unknown map character {ch!r} at row {y}, column {x}")
    if all(cells):
        raise GridError("map has no free cell")
    return OccupancyGrid(width=width, height=len(rows), cells=tuple(cells), cell_size_m=cell_size_m)


def require_valid_pose(grid: OccupancyGrid, pose: RobotPose) -> None:
    if not grid.is_free(pose.x, pose.y):
        raise GridError(f"pose {pose} is out of bounds or on an occupied cell")


def apply_move(grid: OccupancyGrid, pose: RobotPose, direction: Direction) -> RobotPose:
    """Point the robot in ``direction`` and advance one cell if that cell is free.

    Blocked moves (wall or map edge) still update the orientation, keeping
    the transition total and deterministic.
    """
    require_valid_pose(grid, pose)
    dx, dy = direction.vector
    nx, ny = pose.x + dx, pose.y + dy
    if grid.is_free(nx, ny):
        return RobotPose(nx, ny, direction)
    return RobotPose(pose.x, pose.y, direction)


def line_of_sight(grid: OccupancyGrid, a: Cell, b: Cell) -> bool:
    """True if the discrete ray from a to b crosses no occupied cell strictly
    between the endpoints.

    Bresenham with diagonal stepping on exact ties, which keeps the traced
    cell set equivariant under 90-degree rotations.
    """
    x0, y0 = a
    x1, y1 = b
    dx = abs(x1 - x0)
    sx = 1 if x0 < x1 else -1
    dy = -abs(y1 - y0)
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        if (x, y) != a and (x, y) != b and grid.is_occupied(x, y):
            return False
        if x == x1 and y == y1:
            return True
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


@lru_cache(maxsize=None)
def fan_region(grid: OccupancyGrid, pose: RobotPose, fan: FanParams) -> frozenset[Cell]:
    """The set V of free cells visible from ``pose``.

    A free cell c (never the robot's own cell) is in V when its center lies
    within ``range_cells`` of the pose, the angle between the facing vector
    and pose->c is at most fov/2 (ties included), and, with occlusion on,
    the discrete ray to it is unobstructed.
    """
    require_valid_pose(grid, pose)
    fx, fy = pose.orientation.vector
    cos_half = math.cos(math.radians(fan.fov_degrees / 2.0))
    visible = []
    for cx, cy in grid.free_cells():
        if (cx, cy) == (pose.x, pose.y):
            continue
        dx, dy = cx - pose.x, cy - pose.y
        dist = math.hypot(dx, dy)
        if dist > fan.range_cells + _GEOM_EPS:
            continue
        cos_angle = (dx * fx + dy * fy) / dist
        if cos_angle < cos_half - _GEOM_EPS:
            continue
        if fan.occlusion_enabled and not line_of_sight(grid, (pose.x, pose.y), (cx, cy)):
            continue
        visible.append((cx, cy))
    return frozenset(visible)

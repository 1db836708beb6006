"""Shortest-path cost fields on the occupancy grid plus goal geometry queries.

One Dijkstra sweep per goal produces a full cost field; queries per tick are
then O(1) lookups.  Fields are immutable after construction and safe to
query from multiple threads.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .world import Goal, OccupancyGrid, Pose2D, wrap_angle

SQRT2 = math.sqrt(2.0)

# (drow, dcol, diagonal?) in a fixed order so tie-breaking is deterministic
_MOVES = (
    (-1, 0, False),
    (1, 0, False),
    (0, -1, False),
    (0, 1, False),
    (-1, -1, True),
    (-1, 1, True),
    (1, -1, True),
    (1, 1, True),
)


@dataclass(frozen=True, eq=False)
class CostField:
    """Per-cell shortest path cost (meters) to one goal; +inf where unreachable."""

    goal_id: int
    grid: OccupancyGrid
    costs: np.ndarray

    def __post_init__(self):
        self.costs.setflags(write=False)


def grid_moves(occ: np.ndarray, row: int, col: int):
    """Yield (row, col, step_factor) of traversable 8-connected neighbors.

    Diagonal moves are forbidden when either adjacent orthogonal cell is
    occupied (no corner cutting); step_factor is 1 or sqrt(2).
    """
    height, width = occ.shape
    for dr, dc, diag in _MOVES:
        r, c = row + dr, col + dc
        if not (0 <= r < height and 0 <= c < width) or occ[r, c]:
            continue
        if diag and (occ[row, c] or occ[r, col]):
            continue
        yield r, c, SQRT2 if diag else 1.0


def dijkstra_field(grid: OccupancyGrid, goal: Goal) -> CostField:
    """Exact 8-connected Dijkstra from the goal cell.

    Straight edges cost `resolution`, diagonals `resolution * sqrt(2)`.
    Occupied cells keep cost +inf.
    """
    row, col = grid.cell_of(goal.x, goal.y)
    if grid.occupied[row, col]:
        raise ValueError(f"goal {goal.label!r} lies on an occupied cell")

    occ = grid.occupied
    res = grid.resolution
    costs = np.full(occ.shape, np.inf)
    costs[row, col] = 0.0
    heap = [(0.0, row, col)]
    while heap:
        d, r, c = heapq.heappop(heap)
        if d > costs[r, c]:
            continue
        for nr, nc, factor in grid_moves(occ, r, c):
            nd = d + res * factor
            if nd < costs[nr, nc]:
                costs[nr, nc] = nd
                heapq.heappush(heap, (nd, nr, nc))
    return CostField(goal_id=goal.id, grid=grid, costs=costs)


def compute_fields(grid: OccupancyGrid, goals: list[Goal]) -> dict[int, CostField]:
    return {goal.id: dijkstra_field(grid, goal) for goal in goals}


def path_length(field: CostField, pose: Pose2D) -> float:
    """Planner path length from the pose's cell to the field's goal; +inf if unreachable."""
    row, col = field.grid.cell_of(pose.x, pose.y)
    return float(field.costs[row, col])


def bearing_angle(pose: Pose2D, goal: Goal) -> float:
    """Absolute angle in [0, pi] between the robot heading and the goal direction.

    A pose coincident with the goal (within 1e-9 m) faces it by convention.
    """
    dx = goal.x - pose.x
    dy = goal.y - pose.y
    if math.hypot(dx, dy) < 1e-9:
        return 0.0
    return abs(wrap_angle(math.atan2(dy, dx) - pose.heading))


def euclidean_distance(pose: Pose2D, goal: Goal) -> float:
    return math.hypot(goal.x - pose.x, goal.y - pose.y)


def inflate(grid: OccupancyGrid, radius_cells: int) -> OccupancyGrid:
    """Dilate obstacles by a Chebyshev radius of whole cells (planner option)."""
    if radius_cells < 0:
        raise ValueError("inflation radius must be >= 0")
    if radius_cells == 0:
        return grid
    occ = grid.occupied
    out = occ.copy()
    for dr in range(-radius_cells, radius_cells + 1):
        for dc in range(-radius_cells, radius_cells + 1):
            if dr == 0 and dc == 0:
                continue
            shifted = np.zeros_like(occ)
            src = occ[
                max(0, -dr) : occ.shape[0] - max(0, dr),
                max(0, -dc) : occ.shape[1] - max(0, dc),
            ]
            shifted[
                max(0, dr) : occ.shape[0] - max(0, -dr),
                max(0, dc) : occ.shape[1] - max(0, -dc),
            ] = src
            out |= shifted
    return OccupancyGrid(resolution=grid.resolution, occupied=out)

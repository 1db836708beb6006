"""Occupancy-grid map, poses, goals, and scenario files.

The map is a plain text grid: a `resolution` header line followed by
equal-length rows of `.` (free), `#` (occupied), `S` (start) and `a`-`z`
(goals).  Text rows run top to bottom, but the loaded grid lives in a
conventional world frame (+x right, +y up), so row 0 of the array is the
*bottom* text row.  Continuous coordinates of a cell are its center,
((col + 0.5) * resolution, (row + 0.5) * resolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

FREE = 0
OCCUPIED = 1

_GOAL_CHARS = "abcdefghijklmnopqrstuvwxyz"


class MapFormatError(ValueError):
    """Malformed map or scenario file; carries the offending line/column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(theta, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class Pose2D:
    """Planar pose; heading is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))


@dataclass(frozen=True)
class Goal:
    """A known navigational goal. Ids are 1-based and follow label order."""

    id: int
    label: str
    x: float
    y: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Static cell grid with a metric resolution.

    `occupied` has shape (height, width), row 0 at the bottom of the world.
    Immutable after construction; safe to share across threads.
    """

    resolution: float
    occupied: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupied, dtype=bool)
        if occ.ndim != 2 or occ.shape[0] < 1 or occ.shape[1] < 1:
            raise ValueError("grid must be a 2-D array with at least one cell")
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        object.__setattr__(self, "occupied", occ)
        occ.setflags(write=False)

    @property
    def height(self) -> int:
        return self.occupied.shape[0]

    @property
    def width(self) -> int:
        return self.occupied.shape[1]

    def in_bounds_point(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width * self.resolution and 0.0 <= y <= self.height * self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Map a metric point to its (row, col) cell.

        Points on an interior cell edge belong to the higher-index cell;
        points on the outer boundary stay in the last cell.
        """
        if not self.in_bounds_point(x, y):
            raise ValueError(f"point ({x}, {y}) outside grid bounds")
        col = min(int(x // self.resolution), self.width - 1)
        row = min(int(y // self.resolution), self.height - 1)
        return row, col

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return ((col + 0.5) * self.resolution, (row + 0.5) * self.resolution)

    def is_occupied_cell(self, row: int, col: int) -> bool:
        return bool(self.occupied[row, col])

    def is_occupied_point(self, x: float, y: float) -> bool:
        row, col = self.cell_of(x, y)
        return bool(self.occupied[row, col])


def load_map(text: str) -> tuple[OccupancyGrid, list[Goal], Pose2D]:
    """Parse map-file text into a grid, its goals (sorted by label), and the start pose.

    Raises MapFormatError naming the offending line/column for duplicate
    goal labels, a missing start marker, ragged rows, unknown characters,
    or an empty goal set.
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MapFormatError("empty map file", line=1)

    header = lines[0].split()
    if len(header) != 2 or header[0] != "resolution":
        raise MapFormatError("expected header 'resolution <meters-per-cell>'", line=1)
    try:
        resolution = float(header[1])
    except ValueError:
        raise MapFormatError(f"bad resolution value {header[1]!r}", line=1) from None
    if not resolution > 0:
        raise MapFormatError("resolution must be > 0", line=1)

    rows = lines[1:]
    if not rows:
        raise MapFormatError("map has no grid rows", line=2)
    width = len(rows[0])
    height = len(rows)

    occupied = np.zeros((height, width), dtype=bool)
    goal_cells: dict[str, tuple[int, int]] = {}
    start_cell: tuple[int, int] | None = None

    for file_row, row_text in enumerate(rows):
        line_no = file_row + 2
        if len(row_text) != width:
            raise MapFormatError(
                f"ragged row: expected {width} characters, got {len(row_text)}", line=line_no
            )
        world_row = height - 1 - file_row
        for col, ch in enumerate(row_text):
            if ch == ".":
                continue
            elif ch == "#":
                occupied[world_row, col] = True
            elif ch == "S":
                if start_cell is not None:
                    raise MapFormatError("duplicate start marker 'S'", line=line_no, column=col + 1)
                start_cell = (world_row, col)
            elif ch in _GOAL_CHARS:
                if ch in goal_cells:
                    raise MapFormatError(f"duplicate goal label {ch!r}", line=line_no, column=col + 1)
                goal_cells[ch] = (world_row, col)
            else:
                raise MapFormatError(f"unknown map character {ch!r}", line=line_no, column=col + 1)

    if start_cell is None:
        raise MapFormatError("map has no start marker 'S'")
    if not goal_cells:
        raise MapFormatError("map defines no goals")

    grid = OccupancyGrid(resolution=resolution, occupied=occupied)
    goals = []
    for i, label in enumerate(sorted(goal_cells), start=1):
        x, y = grid.cell_center(*goal_cells[label])
        goals.append(Goal(id=i, label=label, x=x, y=y))
    sx, sy = grid.cell_center(*start_cell)
    return grid, goals, Pose2D(sx, sy, 0.0)


def dump_map(grid: OccupancyGrid, goals: list[Goal], start: Pose2D) -> str:
    """Serialize a grid back to map-file text (inverse of load_map)."""
    chars = np.full((grid.height, grid.width), ".", dtype="<U1")
    chars[grid.occupied] = "#"
    for goal in goals:
        row, col = grid.cell_of(goal.x, goal.y)
        chars[row, col] = goal.label
    row, col = grid.cell_of(start.x, start.y)
    chars[row, col] = "S"
    lines = [f"resolution {grid.resolution!r}"]
    for world_row in range(grid.height - 1, -1, -1):
        lines.append("".join(chars[world_row]))
    return "\n".join(lines) + "\n"


@dataclass
class Scenario:
    """A runnable trial definition: map + goals + scripted operator intent.

    intent_script entries are (switch time in seconds, goal id); the first
    entry starts at t=0 and times increase strictly.  airm_script entries
    are explicit operator intent clicks, (click time, goal id).  When
    random_pair_switch is set, the trial replaces the intent script with a
    seed-driven random goal pair switching at that time.
    """

    id: str
    grid: OccupancyGrid
    goals: list[Goal]
    start: Pose2D
    intent_script: list[tuple[float, int]]
    airm_script: list[tuple[float, int]] = field(default_factory=list)
    random_pair_switch: float | None = None
    airm_at_switches: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.goals) < 2:
            raise ValueError("scenario needs at least 2 goals")
        ids = {g.id for g in self.goals}
        if not self.intent_script:
            raise ValueError("intent script must be nonempty")
        if self.intent_script[0][0] != 0.0:
            raise ValueError("first intent switch time must be 0")
        times = [t for t, _ in self.intent_script]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("intent switch times must increase strictly")
        for t, gid in list(self.intent_script) + list(self.airm_script):
            if gid not in ids:
                raise ValueError(f"script references unknown goal id {gid}")

    @property
    def n_goals(self) -> int:
        return len(self.goals)

    def goal_by_id(self, goal_id: int) -> Goal:
        for g in self.goals:
            if g.id == goal_id:
                return g
        raise KeyError(goal_id)

    def goal_by_label(self, label: str) -> Goal:
        for g in self.goals:
            if g.label == label:
                return g
        raise KeyError(label)

    def intent_at(self, t: float) -> int:
        """True goal id at time t seconds (latest switch with time <= t)."""
        current = self.intent_script[0][1]
        for switch_t, gid in self.intent_script:
            if switch_t <= t:
                current = gid
            else:
                break
        return current

    @property
    def final_goal(self) -> int:
        return self.intent_script[-1][1]


def _resolve_goal_ref(ref, goals: list[Goal], where: str) -> int:
    by_label = {g.label: g.id for g in goals}
    if isinstance(ref, str):
        if ref not in by_label:
            raise MapFormatError(f"{where} references unknown goal {ref!r}")
        return by_label[ref]
    if isinstance(ref, int):
        if ref not in {g.id for g in goals}:
            raise MapFormatError(f"{where} references unknown goal id {ref}")
        return ref
    raise MapFormatError(f"{where} goal reference must be a label or id, got {ref!r}")


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario YAML file; its `map` entry is resolved relative to the file."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise MapFormatError(f"scenario file is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise MapFormatError("scenario file must be a key-value document")
    for key in ("id", "map", "intent_script"):
        if key not in data:
            raise MapFormatError(f"scenario file missing required key {key!r}")

    map_path = (path.parent / data["map"]).resolve()
    if not map_path.is_file():
        raise MapFormatError(f"map file not found: {map_path}")
    grid, goals, start = load_map(map_path.read_text())

    def parse_script(key: str) -> list[tuple[float, int]]:
        script = []
        for entry in data.get(key) or []:
            if not isinstance(entry, dict) or "t" not in entry or "goal" not in entry:
                raise MapFormatError(f"{key} entries need 't' and 'goal' keys")
            gid = _resolve_goal_ref(entry["goal"], goals, key)
            script.append((float(entry["t"]), gid))
        return script

    return Scenario(
        id=str(data["id"]),
        grid=grid,
        goals=goals,
        start=start,
        intent_script=parse_script("intent_script"),
        airm_script=parse_script("airm_script"),
        random_pair_switch=(
            float(data["random_pair_switch"]) if data.get("random_pair_switch") is not None else None
        ),
        airm_at_switches=bool(data.get("airm_at_switches", False)),
        params=dict(data.get("params") or {}),
    )

"""Probabilistic detection model and the discrete coverage functional.

Each robot detects a point at distance d with probability exp(-decay*d)
inside its sensing radius and 0 outside.  Detections are independent
across robots, so the chance a cell is seen by at least one robot is one
minus a product of per-robot miss factors.  Coverage is the
weight-weighted sum of those detection probabilities over a cell set.

CoverageCache keeps the running miss product per cell, which makes the
marginal gain of adding one robot a single pass over the cells inside
its sensing disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .reliability import RobotSpec
from .world import CellSet, Grid


class CellOccupied(ValueError):
    """Candidate cell already holds a robot."""


@dataclass(frozen=True)
class PlacedRobot:
    robot_id: int
    cell: int
    x: float
    y: float

    def to_json(self) -> dict:
        return {"robot_id": self.robot_id, "cell": self.cell, "x": self.x, "y": self.y}


@dataclass(frozen=True)
class Placement:
    """Immutable robot_id -> cell assignment with cached positions."""

    entries: tuple[PlacedRobot, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.entries, key=lambda e: e.robot_id))
        ids = [e.robot_id for e in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate robot id in placement")
        cells = [e.cell for e in ordered]
        if len(set(cells)) != len(cells):
            raise ValueError("two robots share a cell")
        object.__setattr__(self, "entries", ordered)

    @classmethod
    def of(cls, assignments: Iterable[tuple[int, int]], grid: Grid) -> "Placement":
        """Build from (robot_id, cell_index) pairs, snapping to cell centers."""
        entries = []
        for robot_id, cell in assignments:
            x, y = grid.cell_center(cell)
            entries.append(PlacedRobot(robot_id, cell, x, y))
        return cls(entries=tuple(entries))

    @classmethod
    def empty(cls) -> "Placement":
        return cls(entries=())

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, robot_id: int) -> bool:
        return any(e.robot_id == robot_id for e in self.entries)

    def ids(self) -> tuple[int, ...]:
        return tuple(e.robot_id for e in self.entries)

    def occupied_cells(self) -> frozenset:
        return frozenset(e.cell for e in self.entries)

    def get(self, robot_id: int) -> PlacedRobot:
        for e in self.entries:
            if e.robot_id == robot_id:
                return e
        raise KeyError(robot_id)

    def position(self, robot_id: int) -> tuple[float, float]:
        e = self.get(robot_id)
        return (e.x, e.y)

    def without(self, robot_id: int) -> "Placement":
        return Placement(entries=tuple(e for e in self.entries if e.robot_id != robot_id))

    def with_entry(self, entry: PlacedRobot) -> "Placement":
        return Placement(entries=self.entries + (entry,))

    def merged(self, other: "Placement") -> "Placement":
        return Placement(entries=self.entries + other.entries)

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]

    @classmethod
    def from_json(cls, doc: list) -> "Placement":
        return cls(
            entries=tuple(
                PlacedRobot(int(d["robot_id"]), int(d["cell"]), float(d["x"]), float(d["y"]))
                for d in doc
            )
        )


def detection_probability(
    spec: RobotSpec, robot_pos: Sequence[float], point: Sequence[float]
) -> float:
    """Chance that a robot at robot_pos detects an event at point."""
    d = math.hypot(robot_pos[0] - point[0], robot_pos[1] - point[1])
    if d > spec.sense_radius:
        return 0.0
    return math.exp(-spec.decay * d)


def _disk_hits(
    spec: RobotSpec, pos: tuple[float, float], grid: Grid, indices: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Cells among ``indices`` inside the sensing disk, with detection probs."""
    centers = grid.centers()[indices]
    d = np.hypot(centers[:, 0] - pos[0], centers[:, 1] - pos[1])
    mask = d <= spec.sense_radius
    hit = indices[mask]
    probs = np.exp(-spec.decay * d[mask])
    return hit, probs


@dataclass(frozen=True)
class CoverageCache:
    """Per-cell miss products for a placement, over the whole grid."""

    grid: Grid
    miss: np.ndarray
    placement: Placement

    def __post_init__(self):
        arr = np.asarray(self.miss, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "miss", arr)

    @classmethod
    def empty(cls, grid: Grid) -> "CoverageCache":
        return cls(grid=grid, miss=np.ones(grid.nx * grid.ny), placement=Placement.empty())

    @classmethod
    def from_placement(
        cls, grid: Grid, placement: Placement, specs: Mapping[int, RobotSpec]
    ) -> "CoverageCache":
        cache = cls.empty(grid)
        for entry in placement.entries:
            cache = apply(cache, (specs[entry.robot_id], entry.cell))
        return cache

    def detection_field(self) -> np.ndarray:
        """Per-cell probability of detection by at least one robot."""
        return 1.0 - self.miss

    def value(self, cells: CellSet) -> float:
        """Coverage restricted to ``cells``, without renormalizing weights."""
        idx = cells.indices
        return float(np.dot(self.grid.weights[idx], 1.0 - self.miss[idx]))


def coverage(
    placement: Placement,
    specs: Mapping[int, RobotSpec] | Iterable[RobotSpec],
    grid: Grid,
    cells: CellSet,
) -> float:
    """From-scratch evaluation of the coverage functional over ``cells``."""
    if not isinstance(specs, Mapping):
        specs = {s.id: s for s in specs}
    idx = cells.indices
    miss = np.ones(len(idx))
    for entry in placement.entries:
        spec = specs[entry.robot_id]
        centers = grid.centers()[idx]
        d = np.hypot(centers[:, 0] - entry.x, centers[:, 1] - entry.y)
        mask = d <= spec.sense_radius
        miss[mask] *= 1.0 - np.exp(-spec.decay * d[mask])
    return float(np.dot(grid.weights[idx], 1.0 - miss))


def marginal_gain(
    cache: CoverageCache,
    candidate: tuple[RobotSpec, int],
    grid: Grid,
    cells: CellSet,
) -> float:
    """Coverage increase from adding ``candidate`` on top of the cache.

    Restricted to ``cells``; exact up to float rounding against the
    from-scratch difference.
    """
    spec, cell = candidate
    if cell in cache.placement.occupied_cells():
        raise CellOccupied(f"cell {cell} already occupied")
    pos = grid.cell_center(cell)
    hit, probs = _disk_hits(spec, pos, grid, cells.indices)
    if len(hit) == 0:
        return 0.0
    return float(np.dot(grid.weights[hit] * cache.miss[hit], probs))


def apply(cache: CoverageCache, candidate: tuple[RobotSpec, int]) -> CoverageCache:
    """New cache with the candidate committed; input cache is untouched."""
    spec, cell = candidate
    if cell in cache.placement.occupied_cells():
        raise CellOccupied(f"cell {cell} already occupied")
    pos = cache.grid.cell_center(cell)
    all_idx = np.arange(cache.grid.nx * cache.grid.ny, dtype=np.int64)
    hit, probs = _disk_hits(spec, pos, cache.grid, all_idx)
    miss = cache.miss.copy()
    miss[hit] *= 1.0 - probs
    entry = PlacedRobot(spec.id, cell, pos[0], pos[1])
    return CoverageCache(
        grid=cache.grid, miss=miss, placement=cache.placement.with_entry(entry)
    )

"""Monitored domain: rectangular grid discretization, event-density map,
and infinity-norm neighborhood geometry."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

_DIVISIBILITY_TOL = 1e-9


class NonDivisibleBounds(ValueError):
    """Domain side length is not an integer multiple of the cell size."""


class ZeroMass(ValueError):
    """Density evaluates to zero everywhere on the grid."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Discretization of a rectangular domain into square cells.

    Cells are indexed row-major: ``index = iy * nx + ix``.  ``weights[w]``
    is the event-probability mass of cell ``w``; the weights always sum
    to 1 (the density has bounded support on the domain).
    """

    origin: tuple[float, float]
    cell_size: float
    nx: int
    ny: int
    weights: np.ndarray

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.nx <= 0 or self.ny <= 0:
            raise ValueError("cell counts must be positive")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.nx * self.ny,):
            raise ValueError(f"expected {self.nx * self.ny} weights, got {w.shape}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "weights", w)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def cell_center(self, index: int) -> tuple[float, float]:
        iy, ix = divmod(int(index), self.nx)
        return (
            self.origin[0] + (ix + 0.5) * self.cell_size,
            self.origin[1] + (iy + 0.5) * self.cell_size,
        )

    def centers(self) -> np.ndarray:
        """All cell centers as an (n_cells, 2) array, row-major order."""
        cached = getattr(self, "_centers", None)
        if cached is None:
            xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.cell_size
            ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.cell_size
            gx, gy = np.meshgrid(xs, ys)
            cached = np.column_stack([gx.ravel(), gy.ravel()])
            cached.flags.writeable = False
            object.__setattr__(self, "_centers", cached)
        return cached

    def to_json(self) -> dict:
        return {
            "origin": list(self.origin),
            "cell_size": self.cell_size,
            "nx": self.nx,
            "ny": self.ny,
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Grid":
        return cls(
            origin=tuple(doc["origin"]),
            cell_size=float(doc["cell_size"]),
            nx=int(doc["nx"]),
            ny=int(doc["ny"]),
            weights=np.asarray(doc["weights"], dtype=np.float64),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "Grid":
        return cls.from_json(json.loads(text))


@dataclass(frozen=True, eq=False)
class CellSet:
    """Sorted, duplicate-free cell indices into a grid of ``n_cells`` cells."""

    indices: np.ndarray
    n_cells: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if idx.size and (np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be strictly increasing")
        if idx.size and (idx[0] < 0 or idx[-1] >= self.n_cells):
            raise ValueError("indices out of range")
        idx = idx.copy()
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Sequence[int], grid: Grid) -> "CellSet":
        idx = np.unique(np.asarray(list(indices), dtype=np.int64))
        return cls(idx, grid.n_cells)

    @classmethod
    def all(cls, grid: Grid) -> "CellSet":
        return cls(np.arange(grid.n_cells, dtype=np.int64), grid.n_cells)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self):
        return iter(self.indices.tolist())

    def __contains__(self, index: int) -> bool:
        pos = np.searchsorted(self.indices, index)
        return pos < self.indices.size and self.indices[pos] == index

    def issubset(self, other: "CellSet") -> bool:
        return bool(np.isin(self.indices, other.indices).all())


@dataclass(frozen=True)
class UniformDensity:
    """Constant event density over the whole domain."""

    def to_json(self) -> dict:
        return {"kind": "uniform"}


@dataclass(frozen=True)
class GaussianBump:
    center: tuple[float, float]
    spread: float
    mass: float

    def __post_init__(self):
        if self.spread <= 0:
            raise ValueError("spread must be positive")
        if self.mass <= 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class MixtureDensity:
    """Mixture of isotropic Gaussian bumps; masses weight the components."""

    bumps: tuple[GaussianBump, ...]

    def __post_init__(self):
        # emptiness is caught by set_density, which raises ZeroMass
        object.__setattr__(self, "bumps", tuple(self.bumps))

    def to_json(self) -> dict:
        return {
            "kind": "mixture",
            "bumps": [
                {"center": list(b.center), "spread": b.spread, "mass": b.mass}
                for b in self.bumps
            ],
        }


DensitySpec = Union[UniformDensity, MixtureDensity]


def density_from_json(doc: dict) -> DensitySpec:
    kind = doc.get("kind", "uniform")
    if kind == "uniform":
        return UniformDensity()
    if kind == "mixture":
        bumps = tuple(
            GaussianBump(tuple(b["center"]), float(b["spread"]), float(b["mass"]))
            for b in doc["bumps"]
        )
        return MixtureDensity(bumps)
    raise ValueError(f"unknown density kind {kind!r}")


def build_grid(bounds: Sequence[float], cell_size: float) -> Grid:
    """Tile an axis-aligned rectangle ``(xmin, ymin, xmax, ymax)`` with
    square cells of side ``cell_size``; weights start uniform.

    Raises NonDivisibleBounds when a side is not an integer multiple of
    the cell size.
    """
    xmin, ymin, xmax, ymax = (float(v) for v in bounds)
    if xmax <= xmin or ymax <= ymin:
        raise ValueError("bounds must have positive area")
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    counts = []
    for side in (xmax - xmin, ymax - ymin):
        ratio = side / cell_size
        n = round(ratio)
        if n < 1 or abs(ratio - n) > _DIVISIBILITY_TOL * max(1.0, ratio):
            raise NonDivisibleBounds(
                f"side {side} is not an integer multiple of cell_size {cell_size}"
            )
        counts.append(int(n))
    nx, ny = counts
    weights = np.full(nx * ny, 1.0 / (nx * ny))
    return Grid(origin=(xmin, ymin), cell_size=float(cell_size), nx=nx, ny=ny, weights=weights)


def set_density(grid: Grid, spec: DensitySpec) -> Grid:
    """Evaluate the density at every cell center and renormalize to unit mass."""
    if isinstance(spec, UniformDensity):
        values = np.ones(grid.n_cells)
    else:
        centers = grid.centers()
        values = np.zeros(grid.n_cells)
        for bump in spec.bumps:
            d2 = (centers[:, 0] - bump.center[0]) ** 2 + (centers[:, 1] - bump.center[1]) ** 2
            values += bump.mass * np.exp(-d2 / (2.0 * bump.spread**2)) / (
                2.0 * math.pi * bump.spread**2
            )
    total = float(values.sum())
    if total <= 0.0:
        raise ZeroMass("density is zero at every cell center")
    return Grid(
        origin=grid.origin,
        cell_size=grid.cell_size,
        nx=grid.nx,
        ny=grid.ny,
        weights=values / total,
    )


def neighborhood_cells(grid: Grid, center: Sequence[float], L: float) -> CellSet:
    """Cells whose center lies within infinity-norm distance L of ``center``.

    The neighborhood is the square of half-side L around the point; a
    cell belongs iff its center does.
    """
    if L < 0:
        raise ValueError("L must be nonnegative")
    centers = grid.centers()
    cx, cy = float(center[0]), float(center[1])
    inside = (np.abs(centers[:, 0] - cx) <= L) & (np.abs(centers[:, 1] - cy) <= L)
    return CellSet(np.flatnonzero(inside).astype(np.int64), grid.n_cells)

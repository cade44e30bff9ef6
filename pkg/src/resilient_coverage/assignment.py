"""Goal assignment and straight-line clearance checks.

Interchangeable robots moving to a new configuration get goals via a
min-total-Euclidean-distance matching (Hungarian method).  All robots
then travel their segments simultaneously over a unit time interval;
check_clearance reports every pair whose separation dips below a given
clearance, with the closed-form minimum of the quadratic pair distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_TIE_EPS = 1e-9


class SizeMismatch(ValueError):
    """Different numbers of starts and goals."""


@dataclass(frozen=True)
class Assignment:
    """Bijection start index -> goal index with its total travel cost."""

    permutation: tuple
    total_cost: float

    def __post_init__(self):
        perm = tuple(int(p) for p in self.permutation)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError("permutation must be a bijection")
        object.__setattr__(self, "permutation", perm)

    def to_json(self) -> dict:
        return {"permutation": list(self.permutation), "total_cost": self.total_cost}


@dataclass(frozen=True)
class ClearanceViolation:
    i: int
    j: int
    distance: float
    time: float

    def to_json(self) -> dict:
        return {"i": self.i, "j": self.j, "distance": self.distance, "time": self.time}


def _cost_matrix(starts, goals) -> np.ndarray:
    s = np.asarray(starts, dtype=np.float64)
    g = np.asarray(goals, dtype=np.float64)
    return np.hypot(s[:, None, 0] - g[None, :, 0], s[:, None, 1] - g[None, :, 1])


def _hungarian(cost: np.ndarray) -> list:
    """Row -> column assignment of minimum total cost, O(n^3) potentials."""
    n = cost.shape[0]
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # column -> row (1-based)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    perm = [0] * n
    for j in range(1, n + 1):
        if match[j]:
            perm[match[j] - 1] = j - 1
    return perm


def _optimal_cost(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    perm = _hungarian(cost)
    return float(sum(cost[i][perm[i]] for i in range(len(perm))))


def assign_goals(starts: Sequence, goals: Sequence) -> Assignment:
    """Minimum-total-distance matching of starts onto goals.

    Among cost-optimal matchings the lexicographically smallest
    permutation is returned, found by fixing one row at a time and
    re-solving the remainder.
    """
    if len(starts) != len(goals):
        raise SizeMismatch(f"{len(starts)} starts vs {len(goals)} goals")
    if len(starts) == 0:
        raise SizeMismatch("empty assignment")
    cost = _cost_matrix(starts, goals)
    n = len(starts)
    best_total = _optimal_cost(cost)
    tol = _TIE_EPS * max(1.0, abs(best_total))

    perm = [-1] * n
    free_cols = list(range(n))
    remaining_total = best_total
    for row in range(n):
        rows_left = [r for r in range(row + 1, n)]
        for col in free_cols:
            rest = remaining_total - cost[row][col]
            if rest < -tol:
                continue
            if rows_left:
                sub = cost[np.ix_(rows_left, [c for c in free_cols if c != col])]
                sub_cost = _optimal_cost(sub)
            else:
                sub_cost = 0.0
            if cost[row][col] + sub_cost <= remaining_total + tol:
                perm[row] = col
                free_cols.remove(col)
                remaining_total = sub_cost  # resync to avoid drift buildup
                break
        if perm[row] < 0:  # numerical fallback: take the plain optimum
            fallback = _hungarian(cost)
            return Assignment(
                permutation=tuple(fallback),
                total_cost=float(sum(cost[i][fallback[i]] for i in range(n))),
            )
    return Assignment(
        permutation=tuple(perm),
        total_cost=float(sum(cost[i][perm[i]] for i in range(n))),
    )


def pair_min_distance(
    s1, g1, s2, g2
) -> tuple[float, float]:
    """Minimum distance between two synchronized segment travelers and the
    time in [0,1] attaining it."""
    ds = (s1[0] - s2[0], s1[1] - s2[1])
    dv = (g1[0] - s1[0] - (g2[0] - s2[0]), g1[1] - s1[1] - (g2[1] - s2[1]))
    a = dv[0] ** 2 + dv[1] ** 2
    b = ds[0] * dv[0] + ds[1] * dv[1]
    if a == 0.0:
        return math.hypot(*ds), 0.0
    t = min(1.0, max(0.0, -b / a))
    dx = ds[0] + t * dv[0]
    dy = ds[1] + t * dv[1]
    return math.hypot(dx, dy), t


def check_clearance(
    starts: Sequence,
    goals: Sequence,
    assignment: Assignment,
    clearance: float,
) -> list:
    """Violating robot pairs, sorted by index; empty list means clear."""
    if clearance <= 0:
        raise ValueError("clearance must be positive")
    n = len(starts)
    targets = [goals[assignment.permutation[i]] for i in range(n)]
    violations = []
    for i in range(n):
        for j in range(i + 1, n):
            dist, t = pair_min_distance(starts[i], targets[i], starts[j], targets[j])
            if dist < clearance:
                violations.append(ClearanceViolation(i=i, j=j, distance=dist, time=t))
    return violations

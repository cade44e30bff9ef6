"""Minimum-cardinality robot team selection.

Two 0-1 programs share one exact solver: the initial selection (budget,
team-reliability, and redundant-area constraints over the full pool) and
the intermediate selection after a failure (reliability threshold
adjusted for the surviving team, area matching the lost robot, pool
availability mask).

Reliability products are linearized with logs: sum log(1-R_i) <= log(alpha)
is the same test as prod (1-R_i) <= alpha.

The solver runs iterative deepening on the cardinality: for k = 1, 2, ...
a depth-first search over items pre-sorted by area looks for any feasible
size-k subset, pruning each constraint with the best still-achievable
partial sum.  The first feasible k is provably minimum.  A second pass
then rebuilds the set to be lexicographically smallest in robot ids, so
equal instances always return the same team.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .reliability import RobotSpec, reliability

_SLACK = 1e-9


class DegenerateReliability(ValueError):
    """A pool robot cannot fail over the horizon, breaking the log transform."""


class Infeasible(RuntimeError):
    """No subset of the available pool satisfies the constraints."""


class SolverTimeout(RuntimeError):
    """Time budget exhausted before any feasible incumbent was found."""


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple
    sense: str  # "<=" or ">="
    rhs: float

    def __post_init__(self):
        if self.sense not in ("<=", ">="):
            raise ValueError("sense must be <= or >=")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def satisfied(self, chosen: Sequence[int]) -> bool:
        lhs = sum(self.coeffs[i] for i in chosen)
        if self.sense == "<=":
            return lhs <= self.rhs + _SLACK
        return lhs >= self.rhs - _SLACK

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "coeffs": list(self.coeffs),
            "sense": self.sense,
            "rhs": self.rhs,
        }


@dataclass(frozen=True)
class IlpProblem:
    """Minimize the number of selected variables subject to knapsack-style
    constraints and an availability mask."""

    ids: tuple  # robot id per variable
    constraints: tuple
    mask: tuple  # 1 = selectable

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        object.__setattr__(self, "mask", tuple(int(m) for m in self.mask))
        if len(self.mask) != self.n_vars:
            raise ValueError("mask length must match variable count")
        for c in self.constraints:
            if len(c.coeffs) != self.n_vars:
                raise ValueError(f"constraint {c.name} has wrong arity")

    @property
    def n_vars(self) -> int:
        return len(self.ids)

    def to_json(self) -> dict:
        return {
            "ids": list(self.ids),
            "constraints": [c.to_json() for c in self.constraints],
            "mask": list(self.mask),
        }


@dataclass(frozen=True)
class Selection:
    """Solver output: chosen robot ids, sorted ascending."""

    ids: tuple
    certified: bool = True

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(sorted(int(i) for i in self.ids)))

    @property
    def cardinality(self) -> int:
        return len(self.ids)

    def to_json(self) -> dict:
        return {
            "ids": list(self.ids),
            "cardinality": self.cardinality,
            "certified": self.certified,
        }


def build_initial_ilp(
    pool: Sequence[RobotSpec],
    beta: float,
    alpha: float,
    delta: float,
    area_q: float,
    horizon: float,
) -> IlpProblem:
    """Initial team selection program over the whole pool.

    Budget at most beta, team failure probability at most alpha over
    [0, horizon], and total sensing area at least delta * area_q.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if beta <= 0:
        raise ValueError("beta must be positive")
    rel_coeffs = []
    for spec in pool:
        r = reliability(spec, 0.0, horizon)
        if r >= 1.0:
            raise DegenerateReliability(
                f"robot {spec.id} cannot fail over [0, {horizon}]"
            )
        rel_coeffs.append(math.log(1.0 - r))
    constraints = (
        Constraint("budget", tuple(s.cost for s in pool), "<=", beta),
        Constraint("reliability", tuple(rel_coeffs), "<=", math.log(alpha)),
        Constraint("area", tuple(s.sense_area for s in pool), ">=", delta * area_q),
    )
    return IlpProblem(
        ids=tuple(s.id for s in pool),
        constraints=constraints,
        mask=tuple(1 for _ in pool),
    )


def alpha_of_tf(
    active: Sequence[RobotSpec],
    alpha: float,
    t_f: float,
    horizon: float,
    activations: Mapping[int, float] | None = None,
) -> float:
    """Failure-probability threshold for replacements chosen at time t_f.

    Divides alpha by the survivors' joint failure probability over the
    remaining horizon.  May exceed 1, which makes the reliability
    constraint vacuous; a survivor that cannot fail yields +inf (same
    effect, taken as a limit).  ``activations`` gives per-robot start
    times for survivors deployed after the mission began.
    """
    if not 0.0 < t_f < horizon:
        raise ValueError("t_f must lie strictly inside (0, horizon)")
    divisor = 1.0
    for spec in active:
        start = 0.0 if activations is None else activations.get(spec.id, 0.0)
        r = reliability(spec, max(t_f - start, 0.0), horizon - start)
        factor = 1.0 - r
        if factor <= 0.0:
            return math.inf
        divisor *= factor
    return alpha / divisor


def build_intermediate_ilp(
    pool: Sequence[RobotSpec],
    pool_mask: Sequence[int],
    alpha_tf: float,
    area_f: float,
    remaining: float,
) -> IlpProblem:
    """Replacement-selection program after one robot fails.

    New robots start fresh, so their reliability spans [0, remaining].
    The reliability constraint disappears when alpha_tf >= 1 (it could
    never bind); the area constraint demands at least the failed robot's
    sensing area.
    """
    if area_f <= 0:
        raise ValueError("area_f must be positive")
    if len(pool_mask) != len(pool):
        raise ValueError("mask length must match pool")
    constraints = []
    if alpha_tf < 1.0:
        rel_coeffs = []
        for spec in pool:
            r = reliability(spec, 0.0, remaining)
            # clamp: a can't-fail robot contributes an effectively -inf log
            # term, kept finite so partial sums stay arithmetic-safe
            rel_coeffs.append(math.log(1.0 - r) if r < 1.0 else -1e18)
        constraints.append(
            Constraint("reliability", tuple(rel_coeffs), "<=", math.log(alpha_tf))
        )
    constraints.append(
        Constraint("area", tuple(s.sense_area for s in pool), ">=", area_f)
    )
    return IlpProblem(
        ids=tuple(s.id for s in pool),
        constraints=constraints,
        mask=tuple(int(bool(m)) for m in pool_mask),
    )


def _sort_key(ilp: IlpProblem):
    """Exploration order: by the first >= constraint's coefficient, descending."""
    for c in ilp.constraints:
        if c.sense == ">=":
            coeffs = c.coeffs
            return lambda var: (-coeffs[var], ilp.ids[var])
    return lambda var: (0.0, ilp.ids[var])


def _bound_tables(ilp: IlpProblem, order: Sequence[int], k: int):
    """best[c][pos][m]: extremal sum of m coefficients of constraint c
    choosable from order[pos:].  Max for >= senses, min for <=."""
    tables = []
    n = len(order)
    for c in ilp.constraints:
        tail = [[0.0] * (k + 1) for _ in range(n + 1)]
        for pos in range(n - 1, -1, -1):
            coeffs = sorted(
                (c.coeffs[v] for v in order[pos:]),
                reverse=(c.sense == ">="),
            )
            acc = 0.0
            row = [0.0]
            for m in range(1, k + 1):
                if m <= len(coeffs):
                    acc += coeffs[m - 1]
                    row.append(acc)
                else:
                    row.append(acc)
            tail[pos] = row
        tables.append(tail)
    return tables


def _search(
    ilp: IlpProblem,
    order: Sequence[int],
    k: int,
    deadline: float,
    prefix: Sequence[int] = (),
):
    """Find any feasible subset of size k of `order`, extending `prefix`
    (variable indices already committed).  Returns the variable-index list
    or None; raises SolverTimeout past the deadline."""
    sums = [sum(c.coeffs[v] for v in prefix) for c in ilp.constraints]
    need = k - len(prefix)
    if need < 0:
        return None
    tables = _bound_tables(ilp, order, need)
    chosen: list[int] = []

    def feasible_now() -> bool:
        for c, s in zip(ilp.constraints, sums):
            if c.sense == "<=" and s > c.rhs + _SLACK:
                return False
            if c.sense == ">=" and s < c.rhs - _SLACK:
                return False
        return True

    def dfs(pos: int, left: int):
        if time.monotonic() > deadline:
            raise SolverTimeout("time budget exhausted")
        if left == 0:
            return feasible_now()
        if pos >= len(order) or len(order) - pos < left:
            return False
        # per-constraint optimistic bounds over order[pos:]
        for ci, c in enumerate(ilp.constraints):
            if c.sense == ">=":
                if sums[ci] + tables[ci][pos][left] < c.rhs - _SLACK:
                    return False
            else:
                if sums[ci] + tables[ci][pos][left] > c.rhs + _SLACK:
                    return False
        var = order[pos]
        # include
        chosen.append(var)
        for ci, c in enumerate(ilp.constraints):
            sums[ci] += c.coeffs[var]
        if dfs(pos + 1, left - 1):
            return True
        chosen.pop()
        for ci, c in enumerate(ilp.constraints):
            sums[ci] -= c.coeffs[var]
        # exclude
        return dfs(pos + 1, left)

    if dfs(0, need):
        return list(prefix) + chosen
    return None


def solve_min_cardinality(ilp: IlpProblem, time_budget: float = 5.0) -> Selection:
    """Exact minimum-cardinality solve with deterministic tie-breaking.

    Raises Infeasible when the full search space is exhausted.  If the
    time budget runs out after an incumbent was found, that incumbent is
    returned with certified=False; running out with no incumbent raises
    SolverTimeout.
    """
    deadline = time.monotonic() + time_budget
    avail = [v for v in range(ilp.n_vars) if ilp.mask[v]]
    key = _sort_key(ilp)
    order = sorted(avail, key=key)

    incumbent = None
    k_star = None
    for k in range(1, len(avail) + 1):
        try:
            found = _search(ilp, order, k, deadline)
        except SolverTimeout:
            if incumbent is not None:
                return Selection(
                    ids=tuple(ilp.ids[v] for v in incumbent), certified=False
                )
            raise
        if found is not None:
            incumbent = found
            k_star = k
            break
    if incumbent is None:
        raise Infeasible("no feasible subset of the available pool")

    # lexicographic rebuild: fix the smallest workable id at each slot
    by_id = sorted(avail, key=lambda v: ilp.ids[v])
    prefix: list[int] = []
    floor = -1
    try:
        for _ in range(k_star):
            advanced = False
            for v in by_id:
                if ilp.ids[v] <= floor:
                    continue
                candidate_pool = [
                    u for u in avail if ilp.ids[u] > ilp.ids[v] and u not in prefix
                ]
                sub_order = sorted(candidate_pool, key=key)
                found = _search(ilp, sub_order, k_star, deadline, prefix=prefix + [v])
                if found is not None:
                    prefix.append(v)
                    floor = ilp.ids[v]
                    advanced = True
                    break
            if not advanced:  # cannot happen when incumbent exists
                return Selection(
                    ids=tuple(ilp.ids[v] for v in incumbent), certified=True
                )
    except SolverTimeout:
        return Selection(ids=tuple(ilp.ids[v] for v in incumbent), certified=True)
    return Selection(ids=tuple(ilp.ids[v] for v in prefix), certified=True)

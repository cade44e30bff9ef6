"""Tunable resilient coordination after a robot failure.

When a robot fails, only its L-neighbors (active robots within
infinity-norm distance L of the failure site) respond: they are greedily
re-placed over the failure neighborhood while everyone else stays put.
If the re-placed local coverage falls below a fraction gamma of what the
full team achieved there just before the failure, replacement robots are
requested from the spare pool through the intermediate selection program
and the local re-placement is repeated with them included.

Larger L and gamma trade communication and robot cost for recovered
coverage; gamma = 0 never requests anything, gamma = 1 demands full
recovery of the lost local coverage.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .coverage import Placement, coverage
from .placement import NotEnoughCells, lazy_greedy_place
from .reliability import RobotSpec
from .selection import (
    Infeasible,
    Selection,
    alpha_of_tf,
    build_intermediate_ilp,
    solve_min_cardinality,
)
from .world import CellSet, Grid, neighborhood_cells


class UnknownRobot(KeyError):
    """Robot id absent from the placement."""


class InfeasibleAugment(RuntimeError):
    """The intermediate selection program had no feasible solution.

    reconfigure does not raise this: the condition is recorded on the
    CoordinationResult (satisfied=False with an empty request).  The
    class exists for callers that want to re-raise from the result.
    """


@dataclass
class World:
    """Mutable state of one mission: grid, robot pool, current placement.

    ``pool`` maps robot id to spec for every robot that exists, deployed
    or spare.  ``activations`` records when each deployed robot started
    operating (0 for the initial team).
    """

    grid: Grid
    pool: dict
    placement: Placement
    failed: set = field(default_factory=set)
    activations: dict = field(default_factory=dict)
    alpha: float = 0.3

    def __post_init__(self):
        for rid in self.placement.ids():
            self.activations.setdefault(rid, 0.0)

    def active_ids(self) -> tuple:
        return self.placement.ids()

    def active_specs(self) -> list:
        return [self.pool[rid] for rid in self.placement.ids()]

    def spare_ids(self) -> tuple:
        deployed = set(self.placement.ids())
        return tuple(
            sorted(rid for rid in self.pool if rid not in deployed and rid not in self.failed)
        )

    def clone(self) -> "World":
        return World(
            grid=self.grid,
            pool=dict(self.pool),
            placement=self.placement,
            failed=set(self.failed),
            activations=dict(self.activations),
            alpha=self.alpha,
        )


@dataclass(frozen=True)
class CoordinationResult:
    new_placement: Placement
    ratio_achieved: float
    requested_robots: Selection
    ratio_after_augment: float | None
    satisfied: bool
    timings: dict

    def to_json(self, include_timings: bool = False) -> dict:
        doc = {
            "new_placement": self.new_placement.to_json(),
            "ratio_achieved": self.ratio_achieved,
            "requested_robots": self.requested_robots.to_json(),
            "ratio_after_augment": self.ratio_after_augment,
            "satisfied": self.satisfied,
        }
        if include_timings:
            doc["timings"] = dict(self.timings)
        return doc


def l_neighbors(placement: Placement, failed_id: int, L: float) -> tuple:
    """Split the other robots into (inside, outside) of the failed robot's
    L-neighborhood, by infinity-norm distance between positions."""
    if failed_id not in placement:
        raise UnknownRobot(failed_id)
    if L < 0:
        raise ValueError("L must be nonnegative")
    fx, fy = placement.position(failed_id)
    inside, outside = [], []
    for entry in placement.entries:
        if entry.robot_id == failed_id:
            continue
        if max(abs(entry.x - fx), abs(entry.y - fy)) <= L:
            inside.append(entry.robot_id)
        else:
            outside.append(entry.robot_id)
    return tuple(inside), tuple(outside)


def coverage_ratio(
    after: Placement,
    before: Placement,
    specs: Mapping[int, RobotSpec],
    grid: Grid,
    cells: CellSet,
) -> float:
    """Quotient of coverage values over the same cells; 1 when there was
    nothing to recover."""
    denom = coverage(before, specs, grid, cells)
    if denom <= 0.0:
        return 1.0
    return coverage(after, specs, grid, cells) / denom


def reconfigure(
    world: World,
    failed_id: int,
    L: float,
    gamma: float,
    pool_mask: Mapping[int, bool] | None,
    t_f: float,
    horizon: float,
    iterate_until_satisfied: bool = False,
    solver_budget: float = 5.0,
    stats=None,
) -> CoordinationResult:
    """Recover from the failure of ``failed_id`` at time ``t_f``.

    Mutates ``world``: the failed robot is removed, L-neighbors move, and
    any granted replacements join the placement with activation ``t_f``.
    Robots outside the neighborhood never move.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if failed_id not in world.placement:
        raise UnknownRobot(failed_id)

    t_start = time.perf_counter()
    grid = world.grid
    pre_failure = world.placement
    failed_pos = pre_failure.position(failed_id)
    cells = neighborhood_cells(grid, failed_pos, L)
    baseline = coverage(pre_failure, world.pool, grid, cells)
    t_baseline = time.perf_counter()

    inside, outside = l_neighbors(pre_failure, failed_id, L)
    frozen = [(world.pool[rid], pre_failure.get(rid).cell) for rid in outside]
    outside_entries = tuple(
        e for e in pre_failure.entries if e.robot_id in set(outside)
    )

    def replace_locally(team_ids: Sequence[int]) -> Placement:
        team = [world.pool[rid] for rid in team_ids]
        # lazy variant: output contract-identical to the naive greedy
        local = lazy_greedy_place(team, grid, cells, frozen=frozen, stats=stats)
        return Placement(entries=outside_entries + local.entries)

    def local_ratio(placement: Placement) -> float:
        if baseline <= 0.0:
            return 1.0
        return coverage(placement, world.pool, grid, cells) / baseline

    new_placement = replace_locally(list(inside))
    ratio = local_ratio(new_placement)
    t_local = time.perf_counter()

    requested: list[int] = []
    ratio_after: float | None = None
    satisfied = ratio >= gamma
    current_inside = list(inside)

    while not satisfied:
        survivors = [world.pool[rid] for rid in pre_failure.ids() if rid != failed_id]
        alpha_tf = alpha_of_tf(
            survivors, world.alpha, t_f, horizon, activations=world.activations
        )
        candidates = [
            rid
            for rid in world.spare_ids()
            if rid != failed_id and rid not in requested
        ]
        spare_pool = [world.pool[rid] for rid in candidates]
        mask = [
            1 if pool_mask is None else int(bool(pool_mask.get(rid, False)))
            for rid in candidates
        ]
        if not spare_pool or not any(mask):
            break
        ilp = build_intermediate_ilp(
            spare_pool,
            mask,
            alpha_tf=alpha_tf,
            area_f=world.pool[failed_id].sense_area,
            remaining=horizon - t_f,
        )
        try:
            selection = solve_min_cardinality(ilp, time_budget=solver_budget)
        except Infeasible:
            break
        try:
            candidate_placement = replace_locally(
                sorted(set(current_inside) | set(selection.ids))
            )
        except NotEnoughCells:  # neighborhood too small to host the grant
            break
        requested.extend(selection.ids)
        current_inside = sorted(set(current_inside) | set(selection.ids))
        new_placement = candidate_placement
        ratio_after = local_ratio(new_placement)
        satisfied = ratio_after >= gamma
        if not iterate_until_satisfied:
            break
    t_augment = time.perf_counter()

    world.failed.add(failed_id)
    world.placement = new_placement
    for rid in requested:
        world.activations[rid] = t_f

    return CoordinationResult(
        new_placement=new_placement,
        ratio_achieved=ratio,
        requested_robots=Selection(ids=tuple(requested)),
        ratio_after_augment=ratio_after,
        satisfied=satisfied,
        timings={
            "baseline": t_baseline - t_start,
            "local": t_local - t_baseline,
            "augment": t_augment - t_local,
        },
    )

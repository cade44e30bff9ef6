"""End-to-end mission orchestration.

A scenario generates a heterogeneous robot pool, selects and places the
initial team, then injects timed failures.  Each failure triggers the
coordination pipeline: detection, an operator (or scripted) choice of
L and gamma, local re-placement, optional replacement requests, travel
assignment with clearance checks, and coverage bookkeeping.

Everything is recorded in a RunLog of timestamped events whose
serialized form is byte-identical across runs with the same config, so
a log both audits and replays a mission.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .assignment import Assignment, assign_goals, check_clearance
from .coordination import World, reconfigure
from .coverage import CoverageCache, Placement, coverage
from .coverage import apply as cache_apply
from .placement import lazy_greedy_place
from .reliability import RobotSpec, fit_hazard, roulette_pick
from .selection import Infeasible, build_initial_ilp, solve_min_cardinality
from .world import (
    CellSet,
    Grid,
    build_grid,
    density_from_json,
    neighborhood_cells,
    set_density,
)


class SelectionInfeasible(RuntimeError):
    """Initial team selection has no feasible solution; carries the log."""

    def __init__(self, message: str, runlog: "RunLog"):
        super().__init__(message)
        self.runlog = runlog


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    pool_size: int = 50
    lifespan_mean: float = 420.0
    lifespan_std_frac: float = 0.1
    max_cost: float = 50.0
    max_area: float = 200.0
    bounds: tuple = (0.0, 0.0, 30.0, 30.0)
    cell_size: float = 1.0
    horizon: float = 500.0
    beta: float = 500.0
    alpha: float = 0.3
    delta: float = 1.0
    default_L: float = 10.0
    default_gamma: float = 0.0
    failure_count: int = 1
    failure_times: tuple | None = None
    operator_mode: str = "scripted"
    detection_delay: float = 0.0
    decay: float = 0.35
    clearance: float = 0.5
    density: dict | None = None
    iterate_until_satisfied: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 <= self.default_gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.detection_delay < 0:
            raise ValueError("detection_delay must be nonnegative")
        if self.clearance <= 0:
            raise ValueError("clearance must be positive")
        if self.operator_mode not in ("scripted", "interactive"):
            raise ValueError("operator_mode must be scripted or interactive")
        if self.pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if self.failure_times is not None:
            object.__setattr__(
                self, "failure_times", tuple(float(t) for t in self.failure_times)
            )

    @property
    def area_q(self) -> float:
        x0, y0, x1, y1 = self.bounds
        return (x1 - x0) * (y1 - y0)

    def to_json(self) -> dict:
        doc = {
            "seed": self.seed,
            "pool_size": self.pool_size,
            "lifespan_mean": self.lifespan_mean,
            "lifespan_std_frac": self.lifespan_std_frac,
            "max_cost": self.max_cost,
            "max_area": self.max_area,
            "bounds": list(self.bounds),
            "cell_size": self.cell_size,
            "horizon": self.horizon,
            "beta": self.beta,
            "alpha": self.alpha,
            "delta": self.delta,
            "default_L": self.default_L,
            "default_gamma": self.default_gamma,
            "failure_count": self.failure_count,
            "failure_times": (
                list(self.failure_times) if self.failure_times is not None else None
            ),
            "operator_mode": self.operator_mode,
            "detection_delay": self.detection_delay,
            "decay": self.decay,
            "clearance": self.clearance,
            "density": self.density,
            "iterate_until_satisfied": self.iterate_until_satisfied,
        }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ScenarioConfig":
        kwargs = dict(doc)
        if kwargs.get("bounds") is not None:
            kwargs["bounds"] = tuple(kwargs["bounds"])
        if kwargs.get("failure_times") is not None:
            kwargs["failure_times"] = tuple(kwargs["failure_times"])
        return cls(**kwargs)


@dataclass(frozen=True)
class Event:
    name: str
    t: float
    payload: dict

    def to_json(self) -> dict:
        return {"event": self.name, "t": self.t, "payload": self.payload}


@dataclass
class RunLog:
    """Append-only ordered event log; stats and world ride along unserialized."""

    events: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    world: World | None = None

    def append(self, name: str, t: float, payload: dict) -> None:
        if self.events and t < self.events[-1].t - 1e-12:
            raise ValueError("event timestamps must be non-decreasing")
        self.events.append(Event(name=name, t=float(t), payload=payload))

    def of_type(self, name: str) -> list:
        return [e for e in self.events if e.name == name]

    def to_ndjson(self) -> str:
        return "\n".join(
            json.dumps(e.to_json(), sort_keys=True, separators=(",", ":"))
            for e in self.events
        ) + ("\n" if self.events else "")

    @classmethod
    def from_ndjson(cls, text: str) -> "RunLog":
        log = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            log.events.append(
                Event(name=doc["event"], t=doc["t"], payload=doc["payload"])
            )
        return log


def generate_pool(config: ScenarioConfig, rng: np.random.Generator) -> list:
    """Heterogeneous pool: lifespans drive cost and sensing area linearly,
    scaled so the longest-lived robot gets the configured maxima."""
    mean = config.lifespan_mean
    lifespans = rng.normal(mean, config.lifespan_std_frac * mean, config.pool_size)
    lifespans = np.clip(lifespans, 0.2 * mean, None)
    top = float(lifespans.max())
    pool = []
    for i, lifespan in enumerate(lifespans):
        ratio = float(lifespan) / top
        area = config.max_area * ratio
        lam0, k = fit_hazard(float(lifespan))
        pool.append(
            RobotSpec(
                id=i,
                cost=config.max_cost * ratio,
                sense_radius=math.sqrt(area / math.pi),
                sense_area=area,
                decay=config.decay,
                hazard_base=lam0,
                hazard_quad=k,
                lifespan=float(lifespan),
            )
        )
    return pool


def build_scenario_grid(config: ScenarioConfig) -> Grid:
    grid = build_grid(config.bounds, config.cell_size)
    if config.density is not None:
        grid = set_density(grid, density_from_json(config.density))
    return grid


def initialize(config: ScenarioConfig) -> tuple:
    """Pool, selection, and placement; returns (world, runlog, rng).

    The rng continues from here so failure sampling stays coupled to the
    same seed.  Raises SelectionInfeasible when no team satisfies the
    initial program.
    """
    rng = np.random.default_rng(config.seed)
    runlog = RunLog()
    pool = generate_pool(config, rng)
    runlog.append(
        "PoolGenerated", 0.0, {"pool": [s.to_json() for s in pool], "size": len(pool)}
    )
    grid = build_scenario_grid(config)
    ilp = build_initial_ilp(
        pool,
        beta=config.beta,
        alpha=config.alpha,
        delta=config.delta,
        area_q=config.area_q,
        horizon=config.horizon,
    )
    try:
        selection = solve_min_cardinality(ilp)
    except Infeasible as exc:
        runlog.append(
            "SelectionInfeasible",
            0.0,
            {"detail": str(exc), "problem": ilp.to_json()},
        )
        raise SelectionInfeasible(str(exc), runlog) from exc
    runlog.append("TeamSelected", 0.0, selection.to_json())
    team = [pool[rid] for rid in selection.ids]
    t0 = time.perf_counter()
    placement = lazy_greedy_place(team, grid, CellSet.all(grid))
    runlog.stats["initial_placement_seconds"] = time.perf_counter() - t0
    runlog.append("Placed", 0.0, {"placement": placement.to_json()})
    world = World(
        grid=grid,
        pool={s.id: s for s in pool},
        placement=placement,
        alpha=config.alpha,
    )
    runlog.world = world
    value = coverage(placement, world.pool, grid, CellSet.all(grid))
    runlog.append("CoverageSample", 0.0, {"label": "initial", "value": value})
    return world, runlog, rng


def _interchange_groups(moved: list, pool: dict) -> list:
    """Partition moved robot ids into interchangeable groups (same spec
    up to id), each group sorted by id."""
    groups: dict = {}
    for rid in moved:
        s = pool[rid]
        key = (
            s.cost,
            s.sense_radius,
            s.sense_area,
            s.decay,
            s.hazard_base,
            s.hazard_quad,
            s.lifespan,
        )
        groups.setdefault(key, []).append(rid)
    return [sorted(g) for g in groups.values()]


def plan_moves(
    world: World, old_positions: dict, config: ScenarioConfig
) -> tuple[Placement, dict]:
    """Travel assignment for robots displaced by a reconfiguration.

    Within groups of interchangeable robots the goals are re-matched to
    minimize total travel (coverage is unaffected because the specs are
    identical); everyone else keeps its own goal.  Returns the possibly
    re-matched placement and the AssignmentComputed payload.
    """
    placement = world.placement
    moved = [
        rid
        for rid in placement.ids()
        if rid in old_positions and old_positions[rid] != placement.position(rid)
    ]
    new_entries = {e.robot_id: e for e in placement.entries}
    total_cost = 0.0
    group_docs = []
    for group in _interchange_groups(moved, world.pool):
        starts = [old_positions[rid] for rid in group]
        goals = [placement.position(rid) for rid in group]
        if len(group) == 1:
            sx, sy = starts[0]
            gx, gy = goals[0]
            total_cost += math.hypot(sx - gx, sy - gy)
            group_docs.append({"robots": group, "permutation": [0]})
            continue
        assignment = assign_goals(starts, goals)
        total_cost += assignment.total_cost
        group_docs.append(
            {"robots": group, "permutation": list(assignment.permutation)}
        )
        original = {rid: new_entries[rid] for rid in group}
        for idx, rid in enumerate(group):
            target = original[group[assignment.permutation[idx]]]
            new_entries[rid] = replace(target, robot_id=rid)
    final = Placement(entries=tuple(new_entries.values()))

    # clearance over every active robot; stationary ones are zero-length
    ids = list(final.ids())
    starts = [old_positions.get(rid, final.position(rid)) for rid in ids]
    goals = [final.position(rid) for rid in ids]
    identity = Assignment(
        permutation=tuple(range(len(ids))),
        total_cost=float(
            sum(math.hypot(s[0] - g[0], s[1] - g[1]) for s, g in zip(starts, goals))
        ),
    )
    violations = check_clearance(starts, goals, identity, config.clearance)
    payload = {
        "moves": [
            {
                "robot_id": rid,
                "from": list(old_positions[rid]),
                "to": list(final.position(rid)),
            }
            for rid in moved
        ],
        "groups": group_docs,
        "total_cost": total_cost,
        "violations": [
            {"i": ids[v.i], "j": ids[v.j], "distance": v.distance, "time": v.time}
            for v in violations
        ],
    }
    return final, payload


def apply_failure(
    world: World,
    runlog: RunLog,
    config: ScenarioConfig,
    robot_id: int,
    t_f: float,
    L: float,
    gamma: float,
    source: str = "scripted",
):
    """Operator choice + reconfigure + travel assignment, fully logged."""
    grid = world.grid
    all_cells = CellSet.all(grid)
    runlog.append("OperatorChoice", t_f, {"L": L, "gamma": gamma, "source": source})
    old_positions = {e.robot_id: (e.x, e.y) for e in world.placement.entries}
    result = reconfigure(
        world,
        robot_id,
        L=L,
        gamma=gamma,
        pool_mask=None,
        t_f=t_f,
        horizon=config.horizon,
        iterate_until_satisfied=config.iterate_until_satisfied,
    )
    doc = result.to_json()
    doc["L"] = L
    doc["gamma"] = gamma
    doc["failed_robot"] = robot_id
    runlog.append("Reconfigured", t_f, doc)
    runlog.stats["reposition_seconds"] = runlog.stats.get(
        "reposition_seconds", 0.0
    ) + sum(result.timings.values())
    if result.requested_robots.ids:
        runlog.append(
            "RobotsRequested",
            t_f,
            {"ids": list(result.requested_robots.ids)},
        )
    final, payload = plan_moves(world, old_positions, config)
    world.placement = final
    runlog.append("AssignmentComputed", t_f, payload)
    value = coverage(world.placement, world.pool, grid, all_cells)
    runlog.append("CoverageSample", t_f, {"label": "post_reconfigure", "value": value})
    return result


def run_scenario(
    config: ScenarioConfig, operator: Callable | None = None
) -> RunLog:
    """Full mission: initialization, failures, recoveries, final sample.

    Scripted mode uses the config's default L and gamma at every
    failure; interactive mode calls ``operator(world, failure_payload)``
    and expects an (L, gamma) pair back.
    """
    if config.operator_mode == "interactive" and operator is None:
        raise ValueError("interactive mode needs an operator callback")
    world, runlog, rng = initialize(config)
    grid = world.grid
    all_cells = CellSet.all(grid)

    if config.failure_times is not None:
        times = sorted(config.failure_times)
    else:
        times = sorted(
            float(t) for t in rng.uniform(0.0, config.horizon, config.failure_count)
        )
    clock = 0.0
    for t_k in times:
        if not (0.0 < t_k < config.horizon):
            continue
        if t_k < clock:  # failures during a pending recovery are dropped
            continue
        active = [
            (world.pool[rid], world.activations[rid]) for rid in world.placement.ids()
        ]
        if not active:
            break
        failed_id = roulette_pick(active, t_k, rng)
        if failed_id is None:
            continue
        failed_pos = world.placement.position(failed_id)
        runlog.append(
            "FailureInjected",
            t_k,
            {"robot_id": failed_id, "position": list(failed_pos)},
        )
        value = coverage(
            world.placement.without(failed_id), world.pool, grid, all_cells
        )
        runlog.append("CoverageSample", t_k, {"label": "post_failure", "value": value})
        # detection lands strictly inside the horizon so the remaining
        # mission window never collapses to zero
        t_d = min(t_k + config.detection_delay, config.horizon * (1.0 - 1e-9))
        runlog.append("FailureDetected", t_d, {"robot_id": failed_id})
        if config.operator_mode == "interactive":
            L, gamma = operator(
                world, {"robot_id": failed_id, "t": t_d, "position": list(failed_pos)}
            )
        else:
            L, gamma = config.default_L, config.default_gamma
        apply_failure(
            world,
            runlog,
            config,
            failed_id,
            t_d,
            L,
            gamma,
            source=config.operator_mode,
        )
        clock = t_d
    value = coverage(world.placement, world.pool, grid, all_cells)
    runlog.append("CoverageSample", config.horizon, {"label": "final", "value": value})
    return runlog


@dataclass
class ExperimentTable:
    rows: list = field(default_factory=list)  # (L, trial, metric, value)

    def add(self, L, trial, metric, value) -> None:
        self.rows.append((float(L), int(trial), str(metric), float(value)))

    def values(self, metric: str, L=None) -> list:
        return [
            v
            for (l, _, m, v) in self.rows
            if m == metric and (L is None or l == float(L))
        ]

    def mean(self, metric: str, L) -> float:
        vals = self.values(metric, L)
        return sum(vals) / len(vals)

    def to_csv(self) -> str:
        lines = ["L,trial,metric,value"]
        for L, trial, metric, value in self.rows:
            lines.append(f"{L:g},{trial},{metric},{value!r}")
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _coverage_trial(config_doc: dict, L: float, trial: int) -> tuple:
    config = ScenarioConfig.from_json(config_doc)
    cfg = replace(
        config,
        seed=config.seed + trial,
        default_L=L,
        default_gamma=0.0,
        operator_mode="scripted",
    )
    runlog = run_scenario(cfg)
    final = runlog.of_type("CoverageSample")[-1].payload["value"]
    return final, runlog.stats.get("reposition_seconds", 0.0)


def experiment_coverage_vs_L(
    config: ScenarioConfig, Ls: Sequence[float], trials: int, jobs: int = 1
) -> ExperimentTable:
    """Fig-4-style study: post-reposition coverage and repositioning
    wall time per neighborhood size, gamma pinned to 0."""
    table = ExperimentTable()
    tasks = [(L, trial) for L in Ls for trial in range(trials)]
    results = _run_tasks(_coverage_trial, config, tasks, jobs)
    for (L, trial), (cov, seconds) in zip(tasks, results):
        table.add(L, trial, "coverage", cov)
        table.add(L, trial, "wall_time", seconds)
    return table


def _robots_trial(config_doc: dict, L: float, trial: int, gamma: float) -> tuple:
    config = ScenarioConfig.from_json(config_doc)
    cfg = replace(
        config,
        seed=config.seed + trial,
        default_L=L,
        default_gamma=gamma,
        operator_mode="scripted",
    )
    runlog = run_scenario(cfg)
    requested = sum(
        len(e.payload["requested_robots"]["ids"]) for e in runlog.of_type("Reconfigured")
    )
    return (requested,)


def experiment_robots_vs_L(
    config: ScenarioConfig,
    Ls: Sequence[float],
    trials: int,
    gamma: float = 1.0,
    jobs: int = 1,
) -> ExperimentTable:
    """Fig-5-style study: replacement robots requested per neighborhood
    size under a demanding recovery ratio (gamma defaults to 1)."""
    table = ExperimentTable()
    tasks = [(L, trial) for L in Ls for trial in range(trials)]
    results = _run_tasks(_robots_trial, config, tasks, jobs, gamma)
    for (L, trial), (requested,) in zip(tasks, results):
        table.add(L, trial, "requested", requested)
    return table


def _median_spec(pool: Sequence[RobotSpec]) -> RobotSpec:
    ordered = sorted(pool, key=lambda s: (s.lifespan, s.id))
    return ordered[len(ordered) // 2]


def _added_trial(config_doc: dict, L: float, trial: int, counts: tuple) -> tuple:
    config = ScenarioConfig.from_json(config_doc)
    cfg = replace(
        config,
        seed=config.seed + trial,
        default_L=L,
        default_gamma=0.0,
        operator_mode="scripted",
        failure_count=1,
        failure_times=None,
    )
    runlog = run_scenario(cfg)
    world = runlog.world
    grid = world.grid
    all_cells = CellSet.all(grid)
    base = coverage(world.placement, world.pool, grid, all_cells)
    injected = runlog.of_type("FailureInjected")
    if not injected:
        return tuple(base for _ in counts) + tuple(0.0 for _ in counts)
    failure_pos = tuple(injected[-1].payload["position"])
    cells = neighborhood_cells(grid, failure_pos, L)
    template = _median_spec(list(world.pool.values()))
    next_id = max(world.pool) + 1
    max_count = max(counts)
    occupied = world.placement.occupied_cells()
    free = sum(1 for c in cells.indices if int(c) not in occupied)
    n_added = min(max_count, free)
    clones = [replace(template, id=next_id + i) for i in range(n_added)]
    frozen = [(world.pool[e.robot_id], e.cell) for e in world.placement.entries]
    added = lazy_greedy_place(clones, grid, cells, frozen=frozen)
    # the clones are identical, so the greedy tie-break commits them in
    # ascending id order and larger plantings extend smaller ones; one
    # placement therefore yields every prefix value
    cache = CoverageCache.from_placement(grid, world.placement, world.pool)
    values = []
    spec_of = {s.id: s for s in clones}
    done = 0
    for count in counts:
        while done < min(count, n_added):
            entry = added.entries[done]
            cache = cache_apply(cache, (spec_of[entry.robot_id], entry.cell))
            done += 1
        values.append(cache.value(all_cells))
    pcts = [100.0 * (v - base) / base if base > 0 else 0.0 for v in values]
    return tuple(values) + tuple(pcts)


def experiment_added_robots(
    config: ScenarioConfig,
    Ls: Sequence[float],
    added_counts: Sequence[int],
    trials: int,
    jobs: int = 1,
) -> ExperimentTable:
    """Fig-6-style study: coverage after planting extra robots inside the
    failure neighborhood, as absolute value and percent over the
    post-reposition base."""
    counts = tuple(sorted(int(c) for c in added_counts))
    table = ExperimentTable()
    tasks = [(L, trial) for L in Ls for trial in range(trials)]
    results = _run_tasks(_added_trial, config, tasks, jobs, counts)
    for (L, trial), packed in zip(tasks, results):
        values, pcts = packed[: len(counts)], packed[len(counts):]
        for count, v, p in zip(counts, values, pcts):
            table.add(L, trial, f"coverage_added_{count}", v)
            table.add(L, trial, f"pct_increase_{count}", p)
    return table


def _run_tasks(fn, config: ScenarioConfig, tasks: list, jobs: int, *extra) -> list:
    doc = config.to_json()
    if jobs <= 1:
        return [fn(doc, L, trial, *extra) for L, trial in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, doc, L, trial, *extra) for L, trial in tasks]
        return [f.result() for f in futures]

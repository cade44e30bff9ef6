"""Team-selection programs and the exact min-cardinality solver."""

import itertools
import json
import math

import numpy as np
import pytest

from resilient_coverage.reliability import RobotSpec, fit_hazard, reliability
from resilient_coverage.selection import (
    Constraint,
    DegenerateReliability,
    IlpProblem,
    Infeasible,
    Selection,
    SolverTimeout,
    alpha_of_tf,
    build_initial_ilp,
    build_intermediate_ilp,
    solve_min_cardinality,
)


def make_spec(robot_id, cost=10.0, area=100.0, lifespan=420.0, lam0=None, k=None):
    if lam0 is None or k is None:
        lam0, k = fit_hazard(lifespan)
    radius = math.sqrt(area / math.pi)
    return RobotSpec(
        id=robot_id,
        cost=cost,
        sense_radius=radius,
        sense_area=area,
        decay=0.35,
        hazard_base=lam0,
        hazard_quad=k,
        lifespan=lifespan,
    )


def exhaustive_min(ilp):
    """Oracle: scan every subset, smallest cardinality then lex ids."""
    avail = [v for v in range(ilp.n_vars) if ilp.mask[v]]
    for r in range(1, len(avail) + 1):
        best = None
        for combo in itertools.combinations(avail, r):
            if all(c.satisfied(combo) for c in ilp.constraints):
                ids = tuple(sorted(ilp.ids[v] for v in combo))
                if best is None or ids < best:
                    best = ids
        if best is not None:
            return best
    return None


def test_single_robot_suffices():
    pool = [make_spec(i, cost=10.0, area=900.0) for i in range(3)]
    ilp = build_initial_ilp(pool, beta=1000.0, alpha=0.999, delta=1.0, area_q=900.0, horizon=500.0)
    sel = solve_min_cardinality(ilp)
    assert sel.cardinality == 1
    assert sel.ids == (0,)
    assert sel.certified


def test_ultra_reliable_singleton():
    horizon = 100.0
    lam0 = -math.log(1.0 - 1e-6) / horizon  # failure probability 1e-6
    pool = [make_spec(0, area=900.0, lam0=lam0, k=0.0)]
    ilp = build_initial_ilp(pool, beta=100.0, alpha=0.3, delta=1.0, area_q=900.0, horizon=horizon)
    sel = solve_min_cardinality(ilp)
    assert sel.ids == (0,)


def test_degenerate_reliability_rejected():
    immortal = make_spec(0, lam0=0.0, k=0.0)
    with pytest.raises(DegenerateReliability):
        build_initial_ilp([immortal], beta=100.0, alpha=0.3, delta=1.0, area_q=100.0, horizon=500.0)


def test_initial_ilp_shape():
    pool = [make_spec(i, cost=5.0 + i, area=50.0 + i) for i in range(4)]
    ilp = build_initial_ilp(pool, beta=100.0, alpha=0.3, delta=2.0, area_q=80.0, horizon=500.0)
    names = [c.name for c in ilp.constraints]
    assert names == ["budget", "reliability", "area"]
    budget, rel, area = ilp.constraints
    assert budget.rhs == 100.0 and budget.sense == "<="
    assert rel.rhs == pytest.approx(math.log(0.3)) and rel.sense == "<="
    assert area.rhs == pytest.approx(160.0) and area.sense == ">="
    for spec, coef in zip(pool, rel.coeffs):
        assert coef == pytest.approx(math.log(1.0 - reliability(spec, 0.0, 500.0)))
    assert ilp.mask == (1, 1, 1, 1)
    with pytest.raises(ValueError):
        build_initial_ilp(pool, beta=100.0, alpha=1.5, delta=1.0, area_q=80.0, horizon=500.0)


def test_alpha_of_tf_examples():
    assert alpha_of_tf([], 0.3, 100.0, 500.0) == pytest.approx(0.3)
    # survivor with failure probability 1/2 over the remaining horizon
    lam0 = math.log(2.0) / 400.0
    survivor = make_spec(1, lam0=lam0, k=0.0)
    assert alpha_of_tf([survivor], 0.3, 100.0, 500.0) == pytest.approx(0.6)
    # survivors so flaky their joint failure is 0.1: threshold exceeds 1
    lam_a = -math.log(1.0 - 0.5) / 400.0
    lam_b = -math.log(1.0 - 0.2) / 400.0
    a = make_spec(1, lam0=lam_a, k=0.0)
    b = make_spec(2, lam0=lam_b, k=0.0)
    got = alpha_of_tf([a, b], 0.3, 100.0, 500.0)
    assert got == pytest.approx(3.0, rel=1e-9)
    assert got > 1.0
    # a survivor that cannot fail: +inf sentinel
    immortal = make_spec(3, lam0=0.0, k=0.0)
    assert alpha_of_tf([immortal], 0.3, 100.0, 500.0) == math.inf
    with pytest.raises(ValueError):
        alpha_of_tf([], 0.3, 0.0, 500.0)
    with pytest.raises(ValueError):
        alpha_of_tf([], 0.3, 500.0, 500.0)


def test_alpha_of_tf_with_activations():
    lam0 = math.log(2.0) / 300.0
    late = make_spec(5, lam0=lam0, k=0.0)
    # activated at t=100, so over [200, 500] its age runs 100..400
    got = alpha_of_tf([late], 0.3, 200.0, 500.0, activations={5: 100.0})
    r = reliability(late, 100.0, 400.0)
    assert got == pytest.approx(0.3 / (1.0 - r))


def test_intermediate_ilp_single_match():
    pool = [make_spec(0, area=80.0), make_spec(1, area=200.0), make_spec(2, area=120.0)]
    ilp = build_intermediate_ilp(pool, [1, 1, 1], alpha_tf=0.9, area_f=200.0, remaining=300.0)
    sel = solve_min_cardinality(ilp)
    assert sel.ids == (1,)


def test_intermediate_ilp_empty_mask_infeasible():
    pool = [make_spec(0, area=100.0)]
    ilp = build_intermediate_ilp(pool, [0], alpha_tf=0.9, area_f=50.0, remaining=300.0)
    with pytest.raises(Infeasible):
        solve_min_cardinality(ilp)


def test_intermediate_vacuous_reliability_dropped():
    pool = [make_spec(0, area=100.0), make_spec(1, area=60.0)]
    ilp = build_intermediate_ilp(pool, [1, 1], alpha_tf=1.7, area_f=90.0, remaining=300.0)
    assert [c.name for c in ilp.constraints] == ["area"]
    sel = solve_min_cardinality(ilp)
    assert sel.ids == (0,)
    bound = build_intermediate_ilp(pool, [1, 1], alpha_tf=0.5, area_f=90.0, remaining=300.0)
    assert [c.name for c in bound.constraints] == ["reliability", "area"]


def test_two_robot_optimum_lexicographic():
    pool = [make_spec(i, area=50.0) for i in range(3)]
    ilp = build_initial_ilp(pool, beta=1000.0, alpha=0.999, delta=1.0, area_q=100.0, horizon=500.0)
    sel = solve_min_cardinality(ilp)
    assert sel.cardinality == 2
    assert sel.ids == (0, 1)


def test_budget_too_small_infeasible():
    pool = [make_spec(i, cost=60.0, area=200.0) for i in range(3)]
    ilp = build_initial_ilp(pool, beta=50.0, alpha=0.999, delta=1.0, area_q=100.0, horizon=500.0)
    with pytest.raises(Infeasible):
        solve_min_cardinality(ilp)


def _random_ilp(rng):
    n = 12
    pool = [
        make_spec(
            i,
            cost=float(rng.uniform(5.0, 50.0)),
            area=float(rng.uniform(30.0, 200.0)),
            lifespan=float(rng.uniform(100.0, 800.0)),
        )
        for i in range(n)
    ]
    beta = float(rng.uniform(40.0, 250.0))
    alpha = float(rng.uniform(0.05, 0.9))
    delta = float(rng.uniform(1.0, 2.0))
    area_q = float(rng.uniform(100.0, 700.0))
    ilp = build_initial_ilp(pool, beta=beta, alpha=alpha, delta=delta, area_q=area_q, horizon=500.0)
    if rng.random() < 0.3:
        mask = tuple(int(rng.random() < 0.7) for _ in range(n))
        ilp = IlpProblem(ids=ilp.ids, constraints=ilp.constraints, mask=mask)
    return ilp


def test_solver_matches_exhaustive_oracle():
    rng = np.random.default_rng(2024)
    checked_feasible = 0
    for _ in range(100):
        ilp = _random_ilp(rng)
        want = exhaustive_min(ilp)
        if want is None:
            with pytest.raises(Infeasible):
                solve_min_cardinality(ilp)
        else:
            sel = solve_min_cardinality(ilp)
            assert sel.ids == want
            assert sel.certified
            checked_feasible += 1
    assert checked_feasible > 20  # instance mix sanity


def test_solution_slack_and_log_equivalence():
    rng = np.random.default_rng(77)
    for _ in range(20):
        ilp = _random_ilp(rng)
        try:
            sel = solve_min_cardinality(ilp)
        except Infeasible:
            continue
        id_to_var = {rid: v for v, rid in enumerate(ilp.ids)}
        chosen = [id_to_var[r] for r in sel.ids]
        for c in ilp.constraints:
            lhs = sum(c.coeffs[v] for v in chosen)
            slack = (c.rhs - lhs) if c.sense == "<=" else (lhs - c.rhs)
            assert slack >= -1e-9
        rel = next(c for c in ilp.constraints if c.name == "reliability")
        log_sum = sum(rel.coeffs[v] for v in chosen)
        product = math.exp(log_sum)
        alpha = math.exp(rel.rhs)
        assert (log_sum <= rel.rhs + 1e-9) == (product <= alpha * (1 + 1e-9))


def test_mask_shrink_never_lowers_cardinality():
    rng = np.random.default_rng(13)
    for _ in range(15):
        ilp = _random_ilp(rng)
        full = IlpProblem(ids=ilp.ids, constraints=ilp.constraints, mask=(1,) * ilp.n_vars)
        try:
            base = solve_min_cardinality(full).cardinality
        except Infeasible:
            continue
        mask = list(full.mask)
        drop = rng.choice(ilp.n_vars, size=4, replace=False)
        for d in drop:
            mask[int(d)] = 0
        shrunk = IlpProblem(ids=ilp.ids, constraints=ilp.constraints, mask=tuple(mask))
        try:
            assert solve_min_cardinality(shrunk).cardinality >= base
        except Infeasible:
            pass  # infeasible counts as not-smaller


def test_fifty_robot_pool_solves_quickly():
    rng = np.random.default_rng(5)
    pool = []
    for i in range(50):
        lifespan = float(np.clip(rng.normal(420.0, 42.0), 84.0, None))
        area = float(rng.uniform(40.0, 200.0))
        cost = 50.0 * lifespan / 800.0
        pool.append(make_spec(i, cost=cost, area=area, lifespan=lifespan))
    ilp = build_initial_ilp(pool, beta=500.0, alpha=0.3, delta=1.0, area_q=900.0, horizon=500.0)
    sel = solve_min_cardinality(ilp)
    assert sel.certified
    assert sel.cardinality >= math.ceil(900.0 / 200.0)
    for c in ilp.constraints:
        id_to_var = {rid: v for v, rid in enumerate(ilp.ids)}
        assert c.satisfied([id_to_var[r] for r in sel.ids])


def test_solver_timeout_paths():
    pool = [make_spec(i, area=30.0) for i in range(30)]
    ilp = build_initial_ilp(pool, beta=1e6, alpha=0.999, delta=1.0, area_q=29.5 * 30.0, horizon=500.0)
    with pytest.raises(SolverTimeout):
        solve_min_cardinality(ilp, time_budget=0.0)


def test_problem_and_selection_json():
    pool = [make_spec(i, area=60.0) for i in range(2)]
    ilp = build_initial_ilp(pool, beta=100.0, alpha=0.9, delta=1.0, area_q=50.0, horizon=500.0)
    doc = json.loads(json.dumps(ilp.to_json()))
    assert doc["ids"] == [0, 1]
    assert doc["constraints"][0]["name"] == "budget"
    assert doc["mask"] == [1, 1]
    sel = solve_min_cardinality(ilp)
    sdoc = json.loads(json.dumps(sel.to_json()))
    assert sdoc == {"ids": [0], "cardinality": 1, "certified": True}


def test_constraint_validation():
    with pytest.raises(ValueError):
        Constraint("x", (1.0,), "==", 0.0)
    with pytest.raises(ValueError):
        IlpProblem(ids=(0, 1), constraints=(Constraint("x", (1.0,), "<=", 0.0),), mask=(1, 1))
    with pytest.raises(ValueError):
        IlpProblem(ids=(0,), constraints=(), mask=(1, 0))

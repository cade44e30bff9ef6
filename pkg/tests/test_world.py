"""Grid construction, densities, cell sets, and neighborhoods."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resilient_coverage.world import (
    CellSet,
    GaussianBump,
    Grid,
    MixtureDensity,
    NonDivisibleBounds,
    UniformDensity,
    ZeroMass,
    build_grid,
    density_from_json,
    neighborhood_cells,
    set_density,
)


def test_build_grid_standard_workspace():
    grid = build_grid((0.0, 0.0, 30.0, 30.0), 1.0)
    assert grid.nx == 30 and grid.ny == 30
    assert grid.weights.shape == (900,)
    assert np.allclose(grid.weights, 1.0 / 900.0)
    assert abs(grid.weights.sum() - 1.0) <= 1e-9


def test_build_grid_single_cell():
    grid = build_grid((0.0, 0.0, 2.0, 2.0), 2.0)
    assert grid.nx == 1 and grid.ny == 1
    assert grid.weights[0] == pytest.approx(1.0)
    assert grid.cell_center(0) == pytest.approx((1.0, 1.0))


def test_build_grid_rectangular():
    grid = build_grid((-1.0, 0.0, 2.0, 2.0), 1.0)
    assert grid.nx == 3 and grid.ny == 2
    assert np.allclose(grid.weights, 1.0 / 6.0)
    # row-major: index = iy * nx + ix
    assert grid.cell_center(0) == pytest.approx((-0.5, 0.5))
    assert grid.cell_center(2) == pytest.approx((1.5, 0.5))
    assert grid.cell_center(3) == pytest.approx((-0.5, 1.5))


def test_build_grid_rejects_nondivisible_bounds():
    with pytest.raises(NonDivisibleBounds):
        build_grid((0.0, 0.0, 10.0, 10.5), 1.0)
    with pytest.raises(NonDivisibleBounds):
        build_grid((0.0, 0.0, 1.0, 1.0), 0.3)


def test_cell_centers_formula():
    grid = build_grid((2.0, -3.0, 6.0, 1.0), 0.5)
    for index in (0, 5, grid.nx * grid.ny - 1):
        ix = index % grid.nx
        iy = index // grid.nx
        cx = 2.0 + (ix + 0.5) * 0.5
        cy = -3.0 + (iy + 0.5) * 0.5
        assert grid.cell_center(index) == pytest.approx((cx, cy))
    centers = grid.centers()
    assert centers.shape == (grid.nx * grid.ny, 2)
    assert centers[7] == pytest.approx(grid.cell_center(7))


def test_uniform_density_is_identity():
    grid = build_grid((0.0, 0.0, 4.0, 4.0), 1.0)
    shaped = set_density(grid, UniformDensity())
    assert np.allclose(shaped.weights, grid.weights)


def test_single_bump_peaks_at_its_cell():
    grid = build_grid((0.0, 0.0, 30.0, 30.0), 1.0)
    bump = GaussianBump(center=(20.5, 7.5), spread=3.0, mass=1.0)
    shaped = set_density(grid, MixtureDensity(bumps=(bump,)))
    assert abs(shaped.weights.sum() - 1.0) <= 1e-9
    peak = int(np.argmax(shaped.weights))
    assert shaped.cell_center(peak) == pytest.approx((20.5, 7.5))
    # oracle: unnormalized value at distance d is mass*exp(-d^2/(2 s^2))/(2 pi s^2)
    raw = np.empty(900)
    for i in range(900):
        cx, cy = grid.cell_center(i)
        d2 = (cx - 20.5) ** 2 + (cy - 7.5) ** 2
        raw[i] = math.exp(-d2 / (2 * 9.0)) / (2 * math.pi * 9.0)
    assert np.allclose(shaped.weights, raw / raw.sum(), atol=1e-12)


def test_symmetric_bumps_give_mirror_weights():
    grid = build_grid((0.0, 0.0, 10.0, 10.0), 1.0)
    spec = MixtureDensity(
        bumps=(
            GaussianBump(center=(2.5, 5.5), spread=1.5, mass=2.0),
            GaussianBump(center=(7.5, 5.5), spread=1.5, mass=2.0),
        )
    )
    shaped = set_density(grid, spec)
    w = shaped.weights.reshape(grid.ny, grid.nx)
    assert np.allclose(w, w[:, ::-1], atol=1e-12)


def test_zero_mass_rejected():
    grid = build_grid((0.0, 0.0, 4.0, 4.0), 1.0)
    with pytest.raises(ValueError):
        GaussianBump(center=(1.0, 1.0), spread=1.0, mass=0.0)
    with pytest.raises(ZeroMass):
        set_density(grid, MixtureDensity(bumps=()))


def test_grid_json_round_trip():
    grid = build_grid((0.0, 0.0, 6.0, 4.0), 1.0)
    shaped = set_density(grid, MixtureDensity(bumps=(GaussianBump((1.5, 1.5), 1.0, 1.0),)))
    doc = json.loads(shaped.dumps())
    back = Grid.loads(json.dumps(doc))
    assert back.nx == shaped.nx and back.ny == shaped.ny
    assert back.origin == shaped.origin and back.cell_size == shaped.cell_size
    assert np.array_equal(back.weights, shaped.weights)


def test_density_from_json():
    spec = density_from_json(
        {
            "kind": "mixture",
            "bumps": [{"center": [3.0, 4.0], "spread": 2.0, "mass": 1.5}],
        }
    )
    assert isinstance(spec, MixtureDensity)
    assert spec.bumps[0].center == (3.0, 4.0)
    assert density_from_json({"kind": "uniform"}) == UniformDensity()


def test_cellset_validation_and_membership():
    grid = build_grid((0.0, 0.0, 4.0, 4.0), 1.0)
    cs = CellSet.of([3, 1, 3, 0], grid)
    assert list(cs) == [0, 1, 3]
    assert len(cs) == 3
    assert 1 in cs and 2 not in cs
    assert cs.n_cells == 16
    with pytest.raises(ValueError):
        CellSet(indices=np.array([2, 1], dtype=np.int64), n_cells=16)
    with pytest.raises(ValueError):
        CellSet.of([16], grid)
    full = CellSet.all(grid)
    assert len(full) == 16 and cs.issubset(full)


def test_neighborhood_exact_count_on_standard_grid():
    # independent enumeration oracle over all 900 centers
    grid = build_grid((0.0, 0.0, 30.0, 30.0), 1.0)
    center = (15.0, 15.0)
    L = 5.0
    expected = []
    for i in range(900):
        cx, cy = grid.cell_center(i)
        if max(abs(cx - center[0]), abs(cy - center[1])) <= L:
            expected.append(i)
    cells = neighborhood_cells(grid, center, L)
    assert list(cells) == expected
    assert len(cells) == 100


def test_neighborhood_edge_cases():
    grid = build_grid((0.0, 0.0, 30.0, 30.0), 1.0)
    at_center = neighborhood_cells(grid, (10.5, 20.5), 0.0)
    assert len(at_center) == 1
    assert grid.cell_center(next(iter(at_center))) == pytest.approx((10.5, 20.5))
    everything = neighborhood_cells(grid, (15.0, 15.0), 30.0)
    assert len(everything) == 900
    off_grid = neighborhood_cells(grid, (-50.0, -50.0), 1.0)
    assert len(off_grid) == 0
    with pytest.raises(ValueError):
        neighborhood_cells(grid, (0.0, 0.0), -1.0)


@given(
    L1=st.floats(min_value=0.0, max_value=15.0),
    L2=st.floats(min_value=0.0, max_value=15.0),
    cx=st.floats(min_value=0.0, max_value=30.0),
    cy=st.floats(min_value=0.0, max_value=30.0),
)
@settings(max_examples=60, deadline=None)
def test_neighborhood_monotone_in_radius(L1, L2, cx, cy):
    grid = build_grid((0.0, 0.0, 30.0, 30.0), 2.0)
    lo, hi = sorted((L1, L2))
    small = neighborhood_cells(grid, (cx, cy), lo)
    big = neighborhood_cells(grid, (cx, cy), hi)
    assert small.issubset(big)


@given(
    sx=st.floats(min_value=0.5, max_value=5.0),
    mass=st.floats(min_value=0.1, max_value=10.0),
    px=st.floats(min_value=0.0, max_value=10.0),
    py=st.floats(min_value=0.0, max_value=10.0),
)
@settings(max_examples=40, deadline=None)
def test_density_always_normalized(sx, mass, px, py):
    grid = build_grid((0.0, 0.0, 10.0, 10.0), 1.0)
    shaped = set_density(
        grid, MixtureDensity(bumps=(GaussianBump((px, py), sx, mass),))
    )
    assert abs(shaped.weights.sum() - 1.0) <= 1e-9
    assert (shaped.weights >= 0).all()

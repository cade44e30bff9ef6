"""Distributed clique cover protocol."""

import itertools

import numpy as np
import pytest

from resilient_coverage.cliques import (
    CommGraph,
    DegreeTooHigh,
    Mailbox,
    NodeState,
    choose_unique_clique,
    compute_maximal_cliques,
    distributed_clique_cover,
    round1_discover,
    round2_exchange,
)


def grid_positions(rows, cols, spacing=1.0):
    return [(c * spacing, r * spacing) for r in range(rows) for c in range(cols)]


def test_comm_graph_basics():
    g = CommGraph.build([(0, 0), (1, 0), (5, 0)], comm_range=1.5)
    assert g.neighbors(0) == {1}
    assert g.neighbors(1) == {0}
    assert g.neighbors(2) == frozenset()
    assert g.edge_count() == 1
    with pytest.raises(ValueError):
        CommGraph.build([(0, 0)], comm_range=0.0)
    with pytest.raises(ValueError):
        CommGraph.build([(0, 0), (1, 1)], comm_range=1.0, ids=[1, 1])


def test_round1_matches_adjacency_recomputation():
    rng = np.random.default_rng(3)
    pos = [tuple(rng.uniform(0, 10, 2)) for _ in range(20)]
    g = CommGraph.build(pos, comm_range=3.0)
    states = round1_discover(g)
    for i, (x, y) in zip(g.ids, g.positions):
        manual = {
            j
            for j, (qx, qy) in zip(g.ids, g.positions)
            if j != i and np.hypot(x - qx, y - qy) <= 3.0
        }
        assert states[i].neighbors == manual
        assert i in states[i].n_plus


def test_round2_delivers_along_edges_only():
    # path 0 - 1 - 2
    g = CommGraph.build([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], comm_range=1.0)
    states = round1_discover(g)
    n_msgs = round2_exchange(g, states)
    assert n_msgs == 2 * g.edge_count() == 4
    assert set(states[1].received) == {0, 1, 2}
    assert set(states[0].received) == {0, 1}
    assert states[0].received[1] == {0, 1, 2}
    # isolated node keeps only itself
    lone = CommGraph.build([(0.0, 0.0)], comm_range=1.0)
    lone_states = round1_discover(lone)
    assert round2_exchange(lone, lone_states) == 0
    assert lone_states[0].received == {0: frozenset({0})}


def test_maximal_cliques_triangle():
    received = {
        1: frozenset({1, 2, 3}),
        2: frozenset({1, 2, 3}),
        3: frozenset({1, 2, 3}),
    }
    assert compute_maximal_cliques(received, 1) == (frozenset({1, 2, 3}),)


def test_maximal_cliques_path_center():
    received = {
        1: frozenset({1, 2}),
        2: frozenset({1, 2, 3}),
        3: frozenset({2, 3}),
    }
    got = compute_maximal_cliques(received, 2)
    assert set(got) == {frozenset({1, 2}), frozenset({2, 3})}


def test_maximal_cliques_isolated():
    assert compute_maximal_cliques({5: frozenset({5})}, 5) == (frozenset({5}),)


def test_choose_unique_clique_rules():
    single = (frozenset({1, 2}),)
    assert choose_unique_clique(single, {}) == frozenset({1, 2})
    received = {
        1: frozenset({1, 2, 4}),
        2: frozenset({1, 2, 3}),
        3: frozenset({2, 3}),
        4: frozenset({1, 4}),
    }
    # {1,2} has external {3,4}; {2,3} has external {1}
    got = choose_unique_clique((frozenset({1, 2}), frozenset({2, 3})), received)
    assert got == frozenset({2, 3})
    # tie on size -> lexicographic
    received = {
        1: frozenset({1, 2}),
        2: frozenset({1, 2, 3}),
        3: frozenset({2, 3}),
    }
    got = choose_unique_clique((frozenset({1, 2}), frozenset({2, 3})), received)
    assert got == frozenset({1, 2})


def test_complete_graph_single_clique():
    pos = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    cover = distributed_clique_cover(pos, comm_range=2.0)
    assert cover == [[0, 1, 2, 3]]


def test_isolated_robot_singleton():
    cover = distributed_clique_cover([(0.0, 0.0), (10.0, 10.0)], comm_range=1.0)
    assert cover == [[0], [1]]


def test_path_graph_cover():
    cover = distributed_clique_cover(
        [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], comm_range=1.0
    )
    flat = sorted(x for block in cover for x in block)
    assert flat == [0, 1, 2]
    for block in cover:
        assert len(block) <= 2


def check_valid_cover(cover, positions, comm_range):
    flat = sorted(x for block in cover for x in block)
    assert flat == list(range(len(positions)))  # partition
    for block in cover:
        for a, b in itertools.combinations(block, 2):
            dx = positions[a][0] - positions[b][0]
            dy = positions[a][1] - positions[b][1]
            assert np.hypot(dx, dy) <= comm_range  # pairwise adjacent


def test_random_geometric_graphs_valid_and_deterministic():
    rng = np.random.default_rng(17)
    for _ in range(30):
        n = int(rng.integers(2, 31))
        positions = [tuple(rng.uniform(0, 12, 2)) for _ in range(n)]
        r_c = float(rng.uniform(1.0, 4.0))
        cover = distributed_clique_cover(positions, r_c)
        check_valid_cover(cover, positions, r_c)
        assert distributed_clique_cover(positions, r_c) == cover


def test_degree_cap():
    positions = [(0.0, 0.0)] + [
        (0.1 * np.cos(k), 0.1 * np.sin(k)) for k in range(25)
    ]
    with pytest.raises(DegreeTooHigh):
        distributed_clique_cover(positions, comm_range=5.0)
    cover = distributed_clique_cover(positions, comm_range=5.0, degree_cap=30)
    check_valid_cover(cover, positions, 5.0)


def test_custom_ids_respected():
    cover = distributed_clique_cover(
        [(0.0, 0.0), (1.0, 0.0)], comm_range=2.0, ids=[7, 3]
    )
    assert cover == [[3, 7]]


def test_mailbox_counts():
    box = Mailbox()
    box.send(1, "a")
    box.send(1, "b")
    box.send(2, "c")
    assert box.sent == 3
    assert sorted(box.drain(1)) == ["a", "b"]
    assert box.drain(1) == []
    assert box.drain(2) == ["c"]


def test_locality_no_global_reads():
    # tamper with one node's outgoing view: the receiver must act on the
    # message, not on graph truth, proving information flows via edges
    g = CommGraph.build([(0.0, 0.0), (1.0, 0.0)], comm_range=1.5)
    states = round1_discover(g)
    states[1].neighbors = frozenset({0, 99})  # claims a phantom neighbor
    round2_exchange(g, states)
    assert states[0].received[1] == frozenset({0, 1, 99})

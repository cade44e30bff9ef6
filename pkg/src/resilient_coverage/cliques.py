"""Distributed non-overlap clique cover over a communication graph.

Robots within communication range form edges.  The protocol runs three
communication rounds and one computation round:

  1. each node discovers its neighbor set,
  2. neighbors exchange those sets,
  3. each node picks a candidate clique locally and shares the choice.

A group becomes a cover block only when all of its members chose it
unanimously; everyone else falls back to a singleton, so the result is
always a partition into cliques (possibly more blocks than optimal).

Nodes exchange data exclusively through Mailbox messages, never by
reading each other's state, which keeps the simulation honest about
what a real distributed run could know.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np


class DegreeTooHigh(ValueError):
    """A node's degree exceeds the combinatorial safety cap."""


@dataclass(frozen=True)
class CommGraph:
    """Geometric communication graph: edge iff distance <= comm_range."""

    ids: tuple
    positions: tuple
    comm_range: float

    def __post_init__(self):
        if self.comm_range <= 0:
            raise ValueError("comm_range must be positive")
        if len(self.ids) != len(self.positions):
            raise ValueError("ids and positions must align")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate node id")

    @classmethod
    def build(
        cls, positions: Sequence, comm_range: float, ids: Sequence | None = None
    ) -> "CommGraph":
        pos = tuple((float(p[0]), float(p[1])) for p in positions)
        if ids is None:
            ids = tuple(range(len(pos)))
        return cls(ids=tuple(int(i) for i in ids), positions=pos, comm_range=comm_range)

    def _pos_of(self, node_id: int):
        return self.positions[self.ids.index(node_id)]

    def neighbors(self, node_id: int) -> frozenset:
        px, py = self._pos_of(node_id)
        out = []
        for other, (qx, qy) in zip(self.ids, self.positions):
            if other == node_id:
                continue
            if np.hypot(px - qx, py - qy) <= self.comm_range:
                out.append(other)
        return frozenset(out)

    def edge_count(self) -> int:
        return sum(len(self.neighbors(i)) for i in self.ids) // 2


@dataclass
class Mailbox:
    """Message transport with per-round delivery counting."""

    sent: int = 0
    _queues: dict = field(default_factory=dict)

    def send(self, dst: int, payload) -> None:
        self._queues.setdefault(dst, []).append(payload)
        self.sent += 1

    def drain(self, node_id: int) -> list:
        return self._queues.pop(node_id, [])


@dataclass
class NodeState:
    """Everything one robot knows; filled in round by round."""

    id: int
    neighbors: frozenset = frozenset()
    received: dict = field(default_factory=dict)  # sender -> that sender's n_plus
    cliques: tuple = ()
    unique: frozenset = frozenset()
    peer_choices: dict = field(default_factory=dict)  # sender -> its unique clique

    @property
    def n_plus(self) -> frozenset:
        return self.neighbors | {self.id}


def round1_discover(graph: CommGraph) -> dict:
    """Each node senses its own neighborhood from the geometry."""
    return {i: NodeState(id=i, neighbors=graph.neighbors(i)) for i in graph.ids}


def round2_exchange(graph: CommGraph, states: Mapping[int, NodeState]) -> int:
    """Every node sends its inclusive neighbor set along each edge.

    Returns the number of messages delivered (one per directed edge).
    """
    box = Mailbox()
    for i, state in states.items():
        for j in state.neighbors:
            box.send(j, (i, state.n_plus))
    for i, state in states.items():
        state.received = {i: state.n_plus}
        for sender, n_plus in box.drain(i):
            state.received[sender] = n_plus
    return box.sent


def compute_maximal_cliques(received: Mapping[int, frozenset], own_id: int) -> tuple:
    """Candidate cliques from intersections of the received sets.

    Walks m = |received| down to 2, keeping intersections of exactly m
    sets that have exactly m members; the first level with any survivors
    wins.  A node with nothing but its own set falls back to itself.

    Candidates must stay inside the node's own closed neighborhood: an
    intersection can mention a far robot that several neighbors share,
    but this node could never coordinate with it, so such candidates
    are discarded.
    """
    ordered = [received[k] for k in sorted(received)]
    known = frozenset(received)
    n = len(ordered)
    for m in range(n, 1, -1):
        level = set()
        for combo in combinations(range(n), m):
            inter = frozenset.intersection(*(ordered[k] for k in combo))
            if len(inter) == m and inter <= known:
                level.add(inter)
        if level:
            return tuple(sorted(level, key=sorted))
    return (frozenset({own_id}),)


def _external_neighbors(clique: frozenset, received: Mapping[int, frozenset]) -> int:
    union = set()
    for member in clique:
        union |= received[member]
    return len(union - clique)


def choose_unique_clique(cliques: Sequence, received: Mapping[int, frozenset]) -> frozenset:
    """The candidate with the fewest neighbors outside it; lexicographic
    member order breaks ties."""
    if len(cliques) == 1:
        return cliques[0]
    return min(cliques, key=lambda c: (_external_neighbors(c, received), sorted(c)))


def distributed_clique_cover(
    positions: Sequence,
    comm_range: float,
    ids: Sequence | None = None,
    degree_cap: int = 20,
) -> list:
    """Partition of robot ids into communication cliques.

    Runs the three-round protocol; returns blocks as sorted id lists,
    ordered by their smallest member.
    """
    graph = CommGraph.build(positions, comm_range, ids=ids)
    states = round1_discover(graph)
    for i, state in states.items():
        if len(state.neighbors) > degree_cap:
            raise DegreeTooHigh(
                f"node {i} has degree {len(state.neighbors)} > cap {degree_cap}"
            )
    round2_exchange(graph, states)

    # computation round: everything below uses only received messages
    for state in states.values():
        state.cliques = compute_maximal_cliques(state.received, state.id)
        state.unique = choose_unique_clique(state.cliques, state.received)

    # round 3: share the chosen clique along edges
    box = Mailbox()
    for i, state in states.items():
        for j in state.neighbors:
            box.send(j, (i, state.unique))
    for i, state in states.items():
        state.peer_choices = {i: state.unique}
        for sender, choice in box.drain(i):
            state.peer_choices[sender] = choice

    blocks = {}
    for i, state in states.items():
        chosen = state.unique
        unanimous = all(
            state.peer_choices.get(member) == chosen for member in chosen
        )
        block = chosen if unanimous else frozenset({i})
        blocks[i] = block

    unique_blocks = {}
    for i, block in blocks.items():
        unique_blocks.setdefault(block, set()).add(i)
    out = []
    for block, members in unique_blocks.items():
        # non-unanimous singletons may coexist with a same-id block choice;
        # emit each robot exactly once, in its own resolved block
        out.append(sorted(members))
    for group in out:
        assert group  # resolution never produces an empty block
    return sorted(out, key=lambda g: g[0])

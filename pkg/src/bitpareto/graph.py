"""Prediction-dependency DAG of a scalable coder.

Nodes are layers ``0..N-1``; node 0 is the base layer and the single source.
Each node also stands for one resolution, reconstructed from the layers on
every directed path from node 0 to that node (its *resolution subgraph*).
"""

from __future__ import annotations

import graphlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .errors import CycleError, NodeIndexError, SourceError, UnreachableError


@dataclass(frozen=True)
class ResolutionSubgraph:
    resolution: int
    members: tuple[int, ...]
    parent_set: frozenset[int]


@dataclass(frozen=True)
class LayerDag:
    """Validated, immutable layer DAG.  Build it with :func:`build_dag`."""

    node_count: int
    arcs: tuple[tuple[int, int], ...]
    topological_order: tuple[int, ...] = field(repr=False)
    _parents: tuple[frozenset[int], ...] = field(repr=False, compare=False)
    _children: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)
    _subgraphs: tuple[ResolutionSubgraph, ...] = field(repr=False, compare=False)

    source = 0

    def _check(self, i: int) -> int:
        if not 0 <= i < self.node_count:
            raise NodeIndexError(f"node {i} out of range [0, {self.node_count})")
        return int(i)

    def parents(self, i: int) -> frozenset[int]:
        return self._parents[self._check(i)]

    def children(self, i: int) -> tuple[int, ...]:
        return self._children[self._check(i)]

    def subgraph(self, i: int) -> ResolutionSubgraph:
        return self._subgraphs[self._check(i)]

    def members(self, i: int) -> tuple[int, ...]:
        return self.subgraph(i).members


def _reach(start: int, adjacency: list[list[int]]) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def build_dag(node_count: int, arcs: Iterable[Iterable[int]]) -> LayerDag:
    """Validate ``arcs`` over ``node_count`` layers and precompute subgraphs.

    Raises NodeIndexError, CycleError (self-arcs included), SourceError and
    UnreachableError, checked in that order.
    """
    if int(node_count) != node_count or node_count < 1:
        raise NodeIndexError(f"node_count must be a positive integer, got {node_count!r}")
    n = int(node_count)
    arc_set: set[tuple[int, int]] = set()
    for arc in arcs:
        i, j = (int(x) for x in arc)
        for node in (i, j):
            if not 0 <= node < n:
                raise NodeIndexError(f"arc {i}->{j}: node {node} out of range [0, {n})")
        if i == j:
            raise CycleError([i, i])
        arc_set.add((i, j))
    ordered_arcs = tuple(sorted(arc_set))

    preds: list[set[int]] = [set() for _ in range(n)]
    succs: list[list[int]] = [[] for _ in range(n)]
    for i, j in ordered_arcs:
        preds[j].add(i)
        succs[i].append(j)

    sorter = graphlib.TopologicalSorter({v: sorted(preds[v]) for v in range(n)})
    try:
        # static_order breaks ties by insertion order, which is ascending here
        topo = tuple(sorter.static_order())
    except graphlib.CycleError as exc:
        raise CycleError(exc.args[1]) from None

    if preds[0]:
        raise SourceError([(i, 0) for i in preds[0]])

    forward = _reach(0, succs)
    missing = set(range(n)) - forward
    if missing:
        raise UnreachableError(missing)

    pred_lists = [sorted(p) for p in preds]
    subgraphs = []
    for i in range(n):
        members = forward & _reach(i, pred_lists)
        subgraphs.append(
            ResolutionSubgraph(i, tuple(sorted(members)), frozenset(preds[i]))
        )

    return LayerDag(
        node_count=n,
        arcs=ordered_arcs,
        topological_order=topo,
        _parents=tuple(frozenset(p) for p in preds),
        _children=tuple(tuple(sorted(s)) for s in succs),
        _subgraphs=tuple(subgraphs),
    )


def resolution_subgraph(dag: LayerDag, i: int) -> ResolutionSubgraph:
    """Layers on some directed path from node 0 to node ``i`` (both ends included)."""
    return dag.subgraph(i)


def parents(dag: LayerDag, i: int) -> frozenset[int]:
    return dag.parents(i)

"""Dense labeled digraph over ROOT + tokens + empty nodes.

Node indices follow surface order: ROOT is 0, then each regular token is
followed by its empty nodes (token a, a.1, a.2, ..., token a+1). Enhanced
heads written against token ids are therefore offset automatically whenever
empty nodes are present.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import AbstractSet, Iterable

from .conllu import ROOT, NodeId, Sentence

Edge = tuple[int, int, str]


class GraphError(Exception):
    pass


@dataclass(frozen=True)
class EudGraph:
    """Labeled digraph with node count ``m`` (ROOT excluded) and edge set.

    Edges are (head_index, dep_index, label). ROOT (index 0) may head edges
    but never appears as a dependent; self-loops are rejected; cycles are
    allowed.
    """

    m: int
    node_ids: tuple[NodeId, ...]
    edges: frozenset[Edge]

    def __post_init__(self) -> None:
        if len(self.node_ids) != self.m:
            raise GraphError(f"node_ids length {len(self.node_ids)} != m {self.m}")
        for h, d, _ in self.edges:
            if d == 0:
                raise GraphError("ROOT cannot be a dependent")
            if h == d:
                raise GraphError(f"self-loop at node index {h}")
            if not (0 <= h <= self.m and 1 <= d <= self.m):
                raise GraphError(f"edge ({h}, {d}) out of range for m={self.m}")

    def successors(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {}
        for h, d, _ in self.edges:
            adj.setdefault(h, []).append(d)
        return adj


def node_index_map(sentence: Sentence) -> dict[NodeId, int]:
    """Map every node id (excluding ROOT) to its 1-based surface index."""
    return {tok.id: i for i, tok in enumerate(sentence.tokens, start=1)}


def to_graph(sentence: Sentence) -> EudGraph:
    """Build the enhanced graph of a sentence from its DEPS entries."""
    index = node_index_map(sentence)
    edges = set()
    for tok in sentence.tokens:
        dep = index[tok.id]
        for head, label in tok.deps:
            if head == ROOT:
                h = 0
            else:
                try:
                    h = index[head]
                except KeyError:
                    raise GraphError(f"DEPS head {head} of node {tok.id} does not exist") from None
            edges.add((h, dep, label))
    return EudGraph(m=len(sentence.tokens), node_ids=tuple(t.id for t in sentence.tokens), edges=frozenset(edges))


def from_graph(graph: EudGraph, template: Sentence) -> Sentence:
    """Rewrite the template's DEPS columns from the graph's edge set."""
    if graph.m != len(template.tokens):
        raise GraphError(f"graph has {graph.m} nodes but template has {len(template.tokens)} tokens")
    by_dep: dict[int, list[tuple[NodeId, str]]] = {}
    for h, d, label in graph.edges:
        head_id = ROOT if h == 0 else graph.node_ids[h - 1]
        by_dep.setdefault(d, []).append((head_id, label))
    tokens = []
    for i, tok in enumerate(template.tokens, start=1):
        deps = tuple(sorted(by_dep.get(i, ()), key=lambda hl: (hl[0].major, hl[0].minor, hl[1])))
        tokens.append(replace(tok, deps=deps))
    return replace(template, tokens=tuple(tokens))


def _reach(adj: dict[int, list[int]], starts: Iterable[int]) -> set[int]:
    seen = set(starts)
    queue = deque(seen)
    while queue:
        node = queue.popleft()
        for nxt in adj.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def reachable_from_root(graph: EudGraph) -> frozenset[int]:
    """Node indices reachable from ROOT by directed traversal (ROOT excluded)."""
    return frozenset(_reach(graph.successors(), [0]) - {0})


def reach_count(graph: EudGraph, candidate: int, unreachable: AbstractSet[int]) -> int:
    """How many other unreachable nodes the candidate reaches in the full graph."""
    if candidate not in unreachable:
        raise GraphError(f"candidate {candidate} is not in the unreachable set")
    reached = _reach(graph.successors(), [candidate])
    return len((reached & set(unreachable)) - {candidate})

"""Graph decoding and connectivity post-processing.

Edges whose sigmoid probability exceeds the threshold are kept; a token left
headless gets the single highest-probability edge instead. Each kept edge
receives its argmax label. The repair pass then promotes nodes to additional
roots until everything is reachable from the notional ROOT. A separate
maximum-spanning-arborescence decoder handles the basic tree of multitask
models, and a gold-tree-copy baseline mirrors the reference system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conllu import ROOT, Sentence
from .graph import EudGraph, GraphError, reach_count, reachable_from_root

REPAIR_LABEL = "root"


@dataclass(frozen=True)
class DecodedGraph:
    graph: EudGraph
    added_root_edges: tuple[int, ...] = ()
    fallback_heads: tuple[int, ...] = ()


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def decode_edges(arc_scores: np.ndarray, threshold: float = 0.5) -> tuple[set[tuple[int, int]], tuple[int, ...]]:
    """Select edges from an (n+1, n) arc score matrix.

    Returns the selected (head, dep) pairs and the dependents that received
    their head through the max-probability fallback. Self pairs are excluded
    structurally; fallback ties go to the lowest head index.
    """
    n = arc_scores.shape[1]
    probs = _sigmoid(np.asarray(arc_scores, dtype=np.float64))
    for d in range(1, n + 1):
        probs[d, d - 1] = -np.inf
    edges = {(h, d) for h in range(n + 1) for d in range(1, n + 1)
             if probs[h, d - 1] > threshold}
    headed = {d for _, d in edges}
    fallback = []
    for d in range(1, n + 1):
        if d not in headed:
            edges.add((int(np.argmax(probs[:, d - 1])), d))
            fallback.append(d)
    return edges, tuple(fallback)


def decode_labels(label_scores: np.ndarray, edges: set[tuple[int, int]]) -> set[tuple[int, int, int]]:
    """Assign each edge its argmax label id; ties go to the lowest id."""
    return {(h, d, int(np.argmax(label_scores[h, d - 1]))) for h, d in edges}


def connect_graph(graph: EudGraph) -> DecodedGraph:
    """Repeatedly promote the unreachable node covering the most other
    unreachable nodes (ties: first in surface order) to an additional root."""
    edges = set(graph.edges)
    added: list[int] = []
    current = graph
    while True:
        unreachable = set(range(1, current.m + 1)) - reachable_from_root(current)
        if not unreachable:
            break
        best = min(unreachable, key=lambda u: (-reach_count(current, u, unreachable), u))
        edges.add((0, best, REPAIR_LABEL))
        added.append(best)
        current = EudGraph(m=graph.m, node_ids=graph.node_ids, edges=frozenset(edges))
    return DecodedGraph(graph=current, added_root_edges=tuple(added))


def decode_graph(arc_scores: np.ndarray, label_scores: np.ndarray, labels: tuple[str, ...],
                 node_ids: tuple, threshold: float = 0.5) -> DecodedGraph:
    """Full per-sentence decode: threshold + fallback, labeling, repair."""
    edges, fallback = decode_edges(arc_scores, threshold)
    labeled = decode_labels(label_scores, edges)
    graph = EudGraph(
        m=arc_scores.shape[1],
        node_ids=node_ids,
        edges=frozenset((h, d, labels[lid]) for h, d, lid in labeled),
    )
    connected = connect_graph(graph)
    return DecodedGraph(graph=connected.graph, added_root_edges=connected.added_root_edges,
                        fallback_heads=fallback)


def _greedy_heads(log_probs: np.ndarray) -> list[int]:
    t = log_probs.shape[1]
    return [int(np.argmax(log_probs[:, d - 1])) for d in range(1, t + 1)]


def _find_cycle(heads: dict[int, int]) -> list[int] | None:
    color = {node: 0 for node in heads}
    for start in heads:
        if color[start]:
            continue
        path = []
        node = start
        while node in heads and color[node] == 0:
            color[node] = 1
            path.append(node)
            node = heads[node]
        if node in heads and color[node] == 1:
            return path[path.index(node):]
        for p in path:
            color[p] = 2
    return None


def chu_liu_edmonds(scores: np.ndarray) -> list[int]:
    """Maximum spanning arborescence rooted at node 0 of a dense score matrix.

    ``scores[h, d]`` is the weight of attaching dependent d to head h, for
    h in 0..t and d in 1..t. Returns the head of each dependent 1..t.
    """
    t = scores.shape[0] - 1
    incoming = {d: {h: float(scores[h, d]) for h in range(t + 1) if h != d} for d in range(1, t + 1)}
    result = _cle(incoming)
    return [result[d] for d in range(1, t + 1)]


def _cle(incoming: dict[int, dict[int, float]]) -> dict[int, int]:
    best = {d: min(cands, key=lambda h: (-cands[h], h)) for d, cands in incoming.items()}
    cycle = _find_cycle(best)
    if cycle is None:
        return best
    cycle_set = set(cycle)
    rep = min(cycle_set)
    contracted: dict[int, dict[int, float]] = {}
    real_head: dict[tuple[int, int], int] = {}
    for d, cands in incoming.items():
        if d in cycle_set:
            continue
        merged: dict[int, float] = {}
        for h, w in cands.items():
            key = rep if h in cycle_set else h
            if key not in merged or w > merged[key]:
                merged[key] = w
                real_head[(d, key)] = h
        contracted[d] = merged
    # Entering the cycle at node c evicts c's internal edge, so candidate
    # edges into the contracted node are scored by that difference.
    rep_cands: dict[int, float] = {}
    entry_at: dict[int, int] = {}
    for c in cycle:
        for h, w in incoming[c].items():
            if h in cycle_set:
                continue
            adjusted = w - incoming[c][best[c]]
            if h not in rep_cands or adjusted > rep_cands[h]:
                rep_cands[h] = adjusted
                entry_at[h] = c
    contracted[rep] = rep_cands
    sub = _cle(contracted)
    result: dict[int, int] = {}
    broken = None
    for d, k in sub.items():
        if d == rep:
            broken = entry_at[k]
            result[broken] = k
        else:
            result[d] = real_head[(d, k)]
    for c in cycle:
        if c != broken:
            result[c] = best[c]
    return result


def decode_tree(tree_arc: np.ndarray, tree_label: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Heads and label ids for the basic tree of one sentence.

    Greedy per-token argmax over head log-probabilities; if that introduces a
    cycle, fall back to the maximum spanning arborescence rooted at 0.
    """
    t = tree_arc.shape[1]
    scores = np.array(tree_arc, dtype=np.float64)
    for d in range(1, t + 1):
        scores[d, d - 1] = -np.inf
    shift = scores - scores.max(axis=0, keepdims=True)
    log_probs = shift - np.log(np.exp(shift).sum(axis=0, keepdims=True))
    heads = _greedy_heads(log_probs)
    if _find_cycle({d: heads[d - 1] for d in range(1, t + 1)}) is not None:
        full = np.full((t + 1, t + 1), -np.inf)
        full[:, 1:] = log_probs
        heads = chu_liu_edmonds(full)
    labels = tuple(int(np.argmax(tree_label[heads[d - 1], d - 1])) for d in range(1, t + 1))
    return tuple(heads), labels


def copy_tree_to_enhanced(sentence: Sentence) -> EudGraph:
    """Reference baseline: copy HEAD/DEPREL edges into the enhanced graph."""
    edges = set()
    index = {tok.id: i for i, tok in enumerate(sentence.tokens, start=1)}
    for tok in sentence.tokens:
        if tok.is_empty:
            continue
        if tok.head is None:
            raise GraphError(f"token {tok.id} has no basic head to copy")
        h = 0 if tok.head == ROOT else index.get(tok.head)
        if h is None:
            raise GraphError(f"basic head {tok.head} of token {tok.id} does not exist")
        edges.add((h, index[tok.id], tok.deprel))
    return EudGraph(m=len(sentence.tokens), node_ids=tuple(t.id for t in sentence.tokens),
                    edges=frozenset(edges))

"""Enhanced-graph and basic-tree evaluation.

ELAS is labeled F1 over enhanced edges. Because gold graphs may contain
empty nodes the system never predicts, both sides are first collapsed onto
regular nodes: a path that runs from a regular node (or ROOT) through empty
nodes to a regular node becomes a single edge whose label joins the path
labels with '>'. The coarse variant truncates each label at its first ':'.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .conllu import Sentence
from .graph import EudGraph, to_graph

logger = logging.getLogger(__name__)

PATH_JOINER = ">"


class AlignmentError(Exception):
    """Gold and system files cannot be compared token-for-token."""


@dataclass(frozen=True)
class Prf:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, matched: int, gold: int, system: int) -> "Prf":
        p = matched / system if system else 1.0
        r = matched / gold if gold else 1.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f1)


@dataclass(frozen=True)
class SentenceEval:
    index: int
    exact: Prf
    coarse: Prf
    gold_edges: int
    sys_edges: int
    matched: int
    uas: Optional[float] = None
    las: Optional[float] = None


@dataclass(frozen=True)
class EvalReport:
    elas_exact: Prf
    elas_coarse: Prf
    uas: Optional[float]
    las: Optional[float]
    per_sentence: tuple[SentenceEval, ...]
    counts: tuple[int, int, int]


def coarsen_label(label: str) -> str:
    """Strip subtype/lexical material: keep the part before the first ':'."""
    return label.split(":", 1)[0]


def _coarsen_path(label: str) -> str:
    return PATH_JOINER.join(coarsen_label(part) for part in label.split(PATH_JOINER))


def collapse_empty(graph: EudGraph) -> Counter:
    """Collapse edges through empty nodes onto regular endpoints.

    Returns a multiset of (head_major, dep_major, label) where ROOT is 0.
    Edges fully between regular nodes pass through; paths through empty
    nodes are joined; edges that never reach a regular node are dropped.
    """
    is_empty = [False] + [nid.is_empty for nid in graph.node_ids]
    outgoing: dict[int, list[tuple[int, str]]] = {}
    for h, d, label in graph.edges:
        outgoing.setdefault(h, []).append((d, label))
    collapsed: Counter = Counter()
    dropped = 0

    def major(idx: int) -> int:
        return 0 if idx == 0 else graph.node_ids[idx - 1].major

    for h, d, label in sorted(graph.edges):
        if is_empty[h]:
            continue
        if not is_empty[d]:
            collapsed[(major(h), major(d), label)] += 1
            continue
        # Depth-first over empty-node continuations, bounded by node count.
        stack = [(d, label, frozenset({d}))]
        resolved = False
        while stack:
            node, path_label, seen = stack.pop()
            for nxt, nxt_label in sorted(outgoing.get(node, ())):
                joined = path_label + PATH_JOINER + nxt_label
                if not is_empty[nxt]:
                    collapsed[(major(h), major(nxt), joined)] += 1
                    resolved = True
                elif nxt not in seen and len(seen) < graph.m:
                    stack.append((nxt, joined, seen | {nxt}))
        if not resolved:
            dropped += 1
    if dropped:
        logger.debug("collapse dropped %d edge(s) ending in empty nodes with no regular continuation", dropped)
    return collapsed


def check_aligned(gold: Sequence[Sentence], system: Sequence[Sentence]) -> None:
    if len(gold) != len(system):
        raise AlignmentError(f"gold has {len(gold)} sentences, system has {len(system)}")
    for i, (g, s) in enumerate(zip(gold, system)):
        g_forms = [t.form for t in g.regular_tokens]
        s_forms = [t.form for t in s.regular_tokens]
        if g_forms != s_forms:
            raise AlignmentError(f"sentence {i}: token forms diverge")


def _matched(gold: Counter, system: Counter) -> int:
    return sum(min(count, system[key]) for key, count in gold.items())


def elas(gold: Sequence[Sentence], system: Sequence[Sentence], coarse: bool = False) -> Prf:
    """Corpus-level labeled F1 over collapsed enhanced edges."""
    check_aligned(gold, system)
    matched = gold_total = sys_total = 0
    for g, s in zip(gold, system):
        g_edges, s_edges = collapse_empty(to_graph(g)), collapse_empty(to_graph(s))
        if coarse:
            g_edges = _coarsen_counter(g_edges)
            s_edges = _coarsen_counter(s_edges)
        matched += _matched(g_edges, s_edges)
        gold_total += sum(g_edges.values())
        sys_total += sum(s_edges.values())
    return Prf.from_counts(matched, gold_total, sys_total)


def _coarsen_counter(edges: Counter) -> Counter:
    out: Counter = Counter()
    for (h, d, label), count in edges.items():
        out[(h, d, _coarsen_path(label))] += count
    return out


def _has_trees(sentences: Sequence[Sentence]) -> bool:
    return all(t.head is not None for s in sentences for t in s.regular_tokens)


def uas_las(gold: Sequence[Sentence], system: Sequence[Sentence]) -> tuple[float, float]:
    """Fraction of regular tokens with the right head / right head and deprel."""
    check_aligned(gold, system)
    total = head_ok = both_ok = 0
    for g, s in zip(gold, system):
        for gt, st in zip(g.regular_tokens, s.regular_tokens):
            if gt.head is None or st.head is None:
                raise AlignmentError(f"token {gt.id} lacks a basic head on one side")
            total += 1
            if gt.head == st.head:
                head_ok += 1
                if gt.deprel == st.deprel:
                    both_ok += 1
    if total == 0:
        return 1.0, 1.0
    return head_ok / total, both_ok / total


def evaluate(gold: Sequence[Sentence], system: Sequence[Sentence]) -> EvalReport:
    """Full report: exact and coarse ELAS plus UAS/LAS when trees are present."""
    check_aligned(gold, system)
    per_sentence = []
    totals = {"exact": [0, 0, 0], "coarse": [0, 0, 0]}
    trees = _has_trees(gold) and _has_trees(system)
    for i, (g, s) in enumerate(zip(gold, system)):
        g_exact, s_exact = collapse_empty(to_graph(g)), collapse_empty(to_graph(s))
        g_coarse, s_coarse = _coarsen_counter(g_exact), _coarsen_counter(s_exact)
        stats = {}
        for name, (ge, se) in {"exact": (g_exact, s_exact), "coarse": (g_coarse, s_coarse)}.items():
            m = _matched(ge, se)
            gt, st = sum(ge.values()), sum(se.values())
            totals[name][0] += m
            totals[name][1] += gt
            totals[name][2] += st
            stats[name] = (m, gt, st)
        uas = las = None
        if trees:
            uas, las = uas_las([g], [s])
        m, gt, st = stats["exact"]
        per_sentence.append(
            SentenceEval(
                index=i,
                exact=Prf.from_counts(*stats["exact"]),
                coarse=Prf.from_counts(*stats["coarse"]),
                gold_edges=gt,
                sys_edges=st,
                matched=m,
                uas=uas,
                las=las,
            )
        )
    uas = las = None
    if trees:
        uas, las = uas_las(gold, system)
    m, gt, st = totals["exact"]
    return EvalReport(
        elas_exact=Prf.from_counts(*totals["exact"]),
        elas_coarse=Prf.from_counts(*totals["coarse"]),
        uas=uas,
        las=las,
        per_sentence=tuple(per_sentence),
        counts=(gt, st, m),
    )


def report_key_values(report: EvalReport) -> list[str]:
    """Machine-readable block, one fixed 4-decimal value per line."""
    lines = [
        f"elas_exact_precision={report.elas_exact.precision:.4f}",
        f"elas_exact_recall={report.elas_exact.recall:.4f}",
        f"elas_exact_f1={report.elas_exact.f1:.4f}",
        f"elas_coarse_precision={report.elas_coarse.precision:.4f}",
        f"elas_coarse_recall={report.elas_coarse.recall:.4f}",
        f"elas_coarse_f1={report.elas_coarse.f1:.4f}",
        f"gold_edges={report.counts[0]}",
        f"system_edges={report.counts[1]}",
        f"matched_edges={report.counts[2]}",
    ]
    if report.uas is not None:
        lines.append(f"uas={report.uas:.4f}")
        lines.append(f"las={report.las:.4f}")
    return lines


def format_report(report: EvalReport, coarse_only: bool = False) -> str:
    """Human-readable metric table."""
    rows = []
    if not coarse_only:
        rows.append(("ELAS (exact)", report.elas_exact))
    rows.append(("ELAS (coarse)", report.elas_coarse))
    lines = [f"{'Metric':<14} {'P':>8} {'R':>8} {'F1':>8}"]
    for name, prf in rows:
        lines.append(f"{name:<14} {prf.precision:>8.4f} {prf.recall:>8.4f} {prf.f1:>8.4f}")
    if report.uas is not None:
        lines.append(f"{'UAS':<14} {report.uas:>26.4f}")
        lines.append(f"{'LAS':<14} {report.las:>26.4f}")
    return "\n".join(lines)

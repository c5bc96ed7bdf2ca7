"""Per-sentence parsing pipeline: encode, score, decode, repair, serialize."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .conllu import NodeId, Sentence
from .decoding import decode_graph, decode_tree
from .graph import from_graph
from .model import EudParser


@dataclass
class ParseStats:
    sentences: int = 0
    fallback_heads: int = 0
    repair_edges: int = 0
    skipped: int = 0

    def merge(self, other: "ParseStats") -> None:
        self.sentences += other.sentences
        self.fallback_heads += other.fallback_heads
        self.repair_edges += other.repair_edges
        self.skipped += other.skipped


def parse_sentence(model: EudParser, sentence: Sentence, threshold: float | None = None) -> tuple[Sentence, ParseStats]:
    """Parse one sentence with a trained model; DEPS (and, for multitask
    models, HEAD/DEPREL) are rewritten, everything else passes through."""
    hp = model.hp
    scores = model.score(sentence, training=False)
    decoded = decode_graph(
        scores.arc.data,
        scores.label.data,
        model.vocab.labels,
        tuple(t.id for t in sentence.tokens),
        hp.edge_threshold if threshold is None else threshold,
    )
    out = from_graph(decoded.graph, sentence)
    if hp.mtl_enabled:
        heads, labels = decode_tree(scores.tree_arc.data, scores.tree_label.data)
        tokens = []
        regular_pos = 0
        for tok in out.tokens:
            if tok.is_empty:
                tokens.append(tok)
                continue
            tokens.append(replace(tok, head=NodeId(heads[regular_pos]),
                                  deprel=model.tree_vocab.labels[labels[regular_pos]]))
            regular_pos += 1
        out = replace(out, tokens=tuple(tokens))
    stats = ParseStats(sentences=1, fallback_heads=len(decoded.fallback_heads),
                       repair_edges=len(decoded.added_root_edges))
    return out, stats


def parse_sentences(model: EudParser, sentences: Sequence[Sentence],
                    threshold: float | None = None) -> tuple[list[Sentence], ParseStats]:
    outputs = []
    stats = ParseStats()
    for sentence in sentences:
        out, s = parse_sentence(model, sentence, threshold)
        outputs.append(out)
        stats.merge(s)
    return outputs, stats

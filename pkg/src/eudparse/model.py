"""Arc-factored edge/label scoring and losses, plus the optional joint
basic-tree head.

Every candidate edge (h, d) with h ranging over ROOT and all nodes and d over
all nodes, h != d, is scored by an MLP over the concatenation of the head and
dependent vectors. A separate MLP scores labels per edge. The training loss
interpolates label and edge cross-entropies; with the multitask head enabled,
a biaffine tree scorer shares the encoder and the two losses are combined
with equal weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autodiff import Tensor, einsum, parameter, sigmoid_cross_entropy, softmax_cross_entropy
from .conllu import Sentence
from .encoder import Encoder
from .graph import EudGraph

MASK_VALUE = -1e30
FALLBACK_LABEL = "<unk>"


@dataclass(frozen=True)
class Hyperparams:
    d_enc: int = 768
    edge_ff: int = 300
    label_ff: int = 300
    input_dropout: float = 0.35
    dropout: float = 0.35
    edge_threshold: float = 0.5
    loss_interpolation: float = 0.10
    mtl_enabled: bool = False
    mtl_weight: float = 0.5
    encoder_vocab_size: int = 16384
    encoder_layers: int = 2
    encoder_window: int = 2
    encoder_ngram: int = 3

    def __post_init__(self) -> None:
        if not 0.0 < self.edge_threshold < 1.0:
            raise ValueError("edge_threshold must be in (0, 1)")
        if not 0.0 <= self.loss_interpolation <= 1.0:
            raise ValueError("loss_interpolation must be in [0, 1]")
        if not 0.0 <= self.mtl_weight <= 1.0:
            raise ValueError("mtl_weight must be in [0, 1]")
        for name in ("input_dropout", "dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        for name in ("d_enc", "edge_ff", "label_ff", "encoder_vocab_size", "encoder_ngram"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("encoder_layers", "encoder_window"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class LabelVocab:
    """Ordered label inventory; the last entry is a reserved fallback for
    labels never seen in training."""

    labels: tuple[str, ...]
    index: dict[str, int] = field(compare=False, hash=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("label vocabulary is empty")
        object.__setattr__(self, "index", {label: i for i, label in enumerate(self.labels)})

    @classmethod
    def build(cls, labels: Sequence[str]) -> "LabelVocab":
        distinct = sorted(set(labels) - {FALLBACK_LABEL})
        return cls(labels=tuple(distinct) + (FALLBACK_LABEL,))

    @classmethod
    def from_enhanced(cls, sentences: Sequence[Sentence]) -> "LabelVocab":
        return cls.build([label for s in sentences for t in s.tokens for _, label in t.deps])

    @classmethod
    def from_deprels(cls, sentences: Sequence[Sentence]) -> "LabelVocab":
        return cls.build([t.deprel for s in sentences for t in s.regular_tokens if t.head is not None])

    @property
    def fallback_id(self) -> int:
        return len(self.labels) - 1

    def __len__(self) -> int:
        return len(self.labels)

    def id_of(self, label: str, strict: bool = False) -> int:
        got = self.index.get(label)
        if got is None:
            if strict:
                raise KeyError(f"label {label!r} not in training vocabulary")
            return self.fallback_id
        return got


@dataclass
class ScoreMatrices:
    """Raw scores for one sentence of n nodes (empty nodes count as nodes).

    ``arc`` is (n+1, n): rows are heads 0..n with ROOT first, column j is
    dependent j+1. ``label`` is (n+1, n, |L|). Entries where head equals
    dependent hold a large negative mask value and are ignored by loss and
    decoding. Tree scores cover ROOT + regular tokens only and are present
    iff the multitask head is enabled.
    """

    arc: Tensor
    label: Tensor
    n: int
    tree_arc: Optional[Tensor] = None
    tree_label: Optional[Tensor] = None


@dataclass
class LossTerms:
    edge_loss: Tensor
    label_loss: Tensor
    eud_loss: Tensor
    tree_loss: Optional[Tensor]
    total: Tensor


@dataclass(frozen=True)
class TreeGold:
    """Gold basic tree of a sentence: head major id and deprel id per regular token."""

    heads: tuple[int, ...]
    labels: tuple[int, ...]


def tree_targets(sentence: Sentence, tree_vocab: LabelVocab, strict: bool = False) -> TreeGold:
    heads = []
    labels = []
    for tok in sentence.regular_tokens:
        if tok.head is None:
            raise ValueError(f"token {tok.id} has no basic head; cannot build tree targets")
        heads.append(tok.head.major)
        labels.append(tree_vocab.id_of(tok.deprel, strict=strict))
    return TreeGold(heads=tuple(heads), labels=tuple(labels))


def _pair_hidden(R: Tensor, w_head: Tensor, w_dep: Tensor, bias: Tensor) -> Tensor:
    head_part = R @ w_head
    dep_part = R @ w_dep
    return (head_part[:, None, :] + dep_part[None, :, :] + bias).relu()


def _mask_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(valid, self_mask) over the (n+1, n) score layout."""
    heads = np.arange(n + 1)[:, None]
    deps = np.arange(1, n + 1)[None, :]
    self_mask = heads == deps
    return ~self_mask, self_mask


def score_edges(R: Tensor, params: dict[str, Tensor], dropout: float = 0.0,
                rng: Optional[np.random.Generator] = None) -> Tensor:
    """Score all head/dependent candidates; returns the (n+1, n) arc matrix."""
    hidden = _pair_hidden(R, params["edge.w_head"], params["edge.w_dep"], params["edge.bias"])
    hidden = _dropout(hidden, dropout, rng)
    scores = (hidden @ params["edge.out_weight"] + params["edge.out_bias"]).reshape(R.shape[0], R.shape[0])
    return _apply_self_mask(scores[:, 1:])


def score_labels(R: Tensor, params: dict[str, Tensor], dropout: float = 0.0,
                 rng: Optional[np.random.Generator] = None) -> Tensor:
    """Score every label for every candidate edge; returns (n+1, n, |L|)."""
    hidden = _pair_hidden(R, params["label.w_head"], params["label.w_dep"], params["label.bias"])
    hidden = _dropout(hidden, dropout, rng)
    scores = hidden @ params["label.out_weight"] + params["label.out_bias"]
    n = R.shape[0] - 1
    valid, _ = _mask_arrays(n)
    return scores[:, 1:, :] * valid[:, :, None]


def _apply_self_mask(arc: Tensor) -> Tensor:
    n = arc.shape[1]
    valid, self_mask = _mask_arrays(n)
    return arc * valid + self_mask * MASK_VALUE


def biaffine_tree_scores(R_tree: Tensor, params: dict[str, Tensor], dropout: float = 0.0,
                         rng: Optional[np.random.Generator] = None) -> tuple[Tensor, Tensor]:
    """Biaffine head and label scores over ROOT + regular tokens."""
    heads = _dropout((R_tree @ params["tree.arc_head_weight"] + params["tree.arc_head_bias"]).relu(), dropout, rng)
    deps = _dropout((R_tree @ params["tree.arc_dep_weight"] + params["tree.arc_dep_bias"]).relu(), dropout, rng)
    arc = einsum("hi,ij,dj->hd", heads, params["tree.arc_u"], deps) + (heads @ params["tree.arc_head_score"])[:, None]
    lheads = _dropout((R_tree @ params["tree.label_head_weight"] + params["tree.label_head_bias"]).relu(), dropout, rng)
    ldeps = _dropout((R_tree @ params["tree.label_dep_weight"] + params["tree.label_dep_bias"]).relu(), dropout, rng)
    label = (
        einsum("hi,lij,dj->hdl", lheads, params["tree.label_u"], ldeps)
        + (lheads @ params["tree.label_head_score"])[:, None, :]
        + (ldeps @ params["tree.label_dep_score"])[None, :, :]
        + params["tree.label_bias"]
    )
    n = R_tree.shape[0] - 1
    valid, _ = _mask_arrays(n)
    return _apply_self_mask(arc[:, 1:]), label[:, 1:, :] * valid[:, :, None]


def eud_loss(scores: ScoreMatrices, gold: EudGraph, vocab: LabelVocab,
             interpolation: float) -> tuple[Tensor, Tensor, Tensor]:
    """(edge_loss, label_loss, interpolated loss) against a gold graph.

    Edge loss is the mean sigmoid cross-entropy over all n^2 candidates;
    label loss is the mean softmax cross-entropy over gold edges only.
    """
    n = scores.n
    valid, _ = _mask_arrays(n)
    targets = np.zeros((n + 1, n))
    gold_edges = sorted(gold.edges)
    for h, d, _ in gold_edges:
        targets[h, d - 1] = 1.0
    per_candidate = sigmoid_cross_entropy(scores.arc, targets) * valid
    edge = per_candidate.sum() / float(valid.sum())
    if gold_edges:
        hs = np.array([h for h, _, _ in gold_edges], dtype=np.intp)
        ds = np.array([d - 1 for _, d, _ in gold_edges], dtype=np.intp)
        ids = np.array([vocab.id_of(label, strict=True) for _, _, label in gold_edges], dtype=np.intp)
        label = softmax_cross_entropy(scores.label[hs, ds], ids).sum() / float(len(gold_edges))
    else:
        label = Tensor(0.0)
    interpolated = interpolation * label + (1.0 - interpolation) * edge
    return edge, label, interpolated


def tree_loss(scores: ScoreMatrices, gold: TreeGold) -> Tensor:
    """Head cross-entropy per dependent plus label cross-entropy at gold heads."""
    if scores.tree_arc is None or scores.tree_label is None:
        raise ValueError("tree scores absent; multitask head is disabled")
    t = scores.tree_arc.shape[1]
    _, self_mask = _mask_arrays(t)
    masked = scores.tree_arc + self_mask * MASK_VALUE
    head_ce = softmax_cross_entropy(masked.transpose(1, 0), np.asarray(gold.heads, dtype=np.intp))
    heads = np.asarray(gold.heads, dtype=np.intp)
    deps = np.arange(t, dtype=np.intp)
    label_ce = softmax_cross_entropy(scores.tree_label[heads, deps], np.asarray(gold.labels, dtype=np.intp))
    return head_ce.sum() / float(t) + label_ce.sum() / float(t)


def total_loss(eud: Tensor, tree: Optional[Tensor], mtl_weight: float = 0.5) -> Tensor:
    return eud if tree is None else (1.0 - mtl_weight) * eud + mtl_weight * tree


def pair_features(R: np.ndarray, h: int, d: int) -> np.ndarray:
    """Concatenated head/dependent feature vector for one candidate edge."""
    return np.concatenate([R[h], R[d]])


def _dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    if rng is None or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class EudParser:
    """Encoder plus scoring heads; owns every trainable parameter."""

    def __init__(self, hp: Hyperparams, vocab: LabelVocab,
                 tree_vocab: Optional[LabelVocab] = None, seed: int = 0):
        if hp.mtl_enabled and tree_vocab is None:
            raise ValueError("multitask head enabled but no tree label vocabulary given")
        self.hp = hp
        self.vocab = vocab
        self.tree_vocab = tree_vocab if hp.mtl_enabled else None
        rng = np.random.default_rng([seed, 0x5EED])
        self.encoder = Encoder(hp.d_enc, hp.encoder_vocab_size, hp.encoder_layers,
                               hp.encoder_window, hp.encoder_ngram, rng)
        d, ff, lff, L = hp.d_enc, hp.edge_ff, hp.label_ff, len(vocab)
        self.params: dict[str, Tensor] = dict(self.encoder.parameters())
        self.params.update({
            "edge.w_head": parameter(_glorot(rng, 2 * d, ff, (d, ff))),
            "edge.w_dep": parameter(_glorot(rng, 2 * d, ff, (d, ff))),
            "edge.bias": parameter(np.zeros(ff)),
            "edge.out_weight": parameter(_glorot(rng, ff, 1, (ff, 1))),
            "edge.out_bias": parameter(np.zeros(1)),
            "label.w_head": parameter(_glorot(rng, 2 * d, lff, (d, lff))),
            "label.w_dep": parameter(_glorot(rng, 2 * d, lff, (d, lff))),
            "label.bias": parameter(np.zeros(lff)),
            "label.out_weight": parameter(_glorot(rng, lff, L, (lff, L))),
            "label.out_bias": parameter(np.zeros(L)),
        })
        if hp.mtl_enabled:
            T = len(self.tree_vocab)
            self.params.update({
                "tree.arc_head_weight": parameter(_glorot(rng, d, ff, (d, ff))),
                "tree.arc_head_bias": parameter(np.zeros(ff)),
                "tree.arc_dep_weight": parameter(_glorot(rng, d, ff, (d, ff))),
                "tree.arc_dep_bias": parameter(np.zeros(ff)),
                "tree.arc_u": parameter(_glorot(rng, ff, ff, (ff, ff))),
                "tree.arc_head_score": parameter(np.zeros(ff)),
                "tree.label_head_weight": parameter(_glorot(rng, d, ff, (d, ff))),
                "tree.label_head_bias": parameter(np.zeros(ff)),
                "tree.label_dep_weight": parameter(_glorot(rng, d, ff, (d, ff))),
                "tree.label_dep_bias": parameter(np.zeros(ff)),
                "tree.label_u": parameter(_glorot(rng, ff, ff, (T, ff, ff))),
                "tree.label_head_score": parameter(np.zeros((ff, T))),
                "tree.label_dep_score": parameter(np.zeros((ff, T))),
                "tree.label_bias": parameter(np.zeros(T)),
            })

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def node_forms(self, sentence: Sentence) -> list[str]:
        return [tok.form if tok.form else "_" for tok in sentence.tokens]

    def score(self, sentence: Sentence, training: bool = False,
              rng: Optional[np.random.Generator] = None) -> ScoreMatrices:
        """Run the full forward pass for one sentence."""
        hp = self.hp
        drop_rng = rng if training else None
        alignment = self.encoder.tokenize(self.node_forms(sentence))
        R = self.encoder.encode(alignment, hp.input_dropout if training else 0.0,
                                hp.dropout if training else 0.0, drop_rng)
        dropout = hp.dropout if training else 0.0
        arc = score_edges(R, self.params, dropout, drop_rng)
        label = score_labels(R, self.params, dropout, drop_rng)
        matrices = ScoreMatrices(arc=arc, label=label, n=len(sentence.tokens))
        if hp.mtl_enabled:
            keep = np.array([0] + [i for i, t in enumerate(sentence.tokens, start=1) if not t.is_empty],
                            dtype=np.intp)
            matrices.tree_arc, matrices.tree_label = biaffine_tree_scores(
                R[keep], self.params, dropout, drop_rng)
        return matrices

    def loss(self, scores: ScoreMatrices, gold: EudGraph,
             gold_tree: Optional[TreeGold] = None) -> LossTerms:
        edge, label, eud = eud_loss(scores, gold, self.vocab, self.hp.loss_interpolation)
        tree = None
        if self.hp.mtl_enabled:
            if gold_tree is None:
                raise ValueError("multitask head enabled but no gold tree given")
            tree = tree_loss(scores, gold_tree)
        return LossTerms(edge_loss=edge, label_loss=label, eud_loss=eud, tree_loss=tree,
                         total=total_loss(eud, tree, self.hp.mtl_weight))

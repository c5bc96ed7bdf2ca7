"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from eudparse.conllu import MwtRange, NodeId, Sentence, Token, validate_level2

FORMS = (
    "the", "a", "cat", "dog", "bird", "fox", "mat", "tree", "house", "sun",
    "sat", "ran", "saw", "liked", "chased", "found", "on", "in", "under", "near",
    "big", "small", "red", "old", "new",
)
LABELS = ("nsubj", "obj", "det", "obl:on")


def tok(id_str: str, form: str, head=None, deprel: str = "_", deps=()) -> Token:
    """Compact token builder: deps as an iterable of ("3"|"3.1", label)."""
    parsed_deps = tuple(sorted(((NodeId.parse(h), lbl) for h, lbl in deps),
                               key=lambda hl: (hl[0].major, hl[0].minor, hl[1])))
    return Token(
        id=NodeId.parse(id_str),
        form=form,
        lemma=form,
        head=None if head is None else NodeId(head),
        deprel=deprel,
        deps=parsed_deps,
    )


def sent(tokens, comments=(), mwts=()) -> Sentence:
    return Sentence(comments=tuple(comments), tokens=tuple(tokens),
                    mwt_ranges=tuple(MwtRange(*m) for m in mwts))


def random_tree(n: int, rng: np.random.Generator) -> dict[int, int]:
    """Random head assignment forming a tree over tokens 1..n rooted at 0."""
    order = [int(x) + 1 for x in rng.permutation(n)]
    heads = {order[0]: 0}
    placed = [order[0]]
    for token in order[1:]:
        heads[token] = placed[int(rng.integers(len(placed)))]
        placed.append(token)
    return heads


def synth_treebank(count: int, seed: int = 0, multihead: bool = True,
                   empties: bool = True, mwts: bool = False) -> list[Sentence]:
    """Deterministic synthetic treebank whose DEPS extend the basic tree.

    Every third sentence gives one token a second head; every fifth carries
    an empty node that both depends on the root token and heads an extra
    edge; with ``mwts``, every fourth sentence spans its first two tokens
    with a multiword-token range. All sentences pass level-2 validation.
    """
    rng = np.random.default_rng(seed)
    sort_key = lambda hl: (hl[0].major, hl[0].minor, hl[1])
    sentences = []
    for i in range(count):
        n = int(rng.integers(3, 8))
        forms = [FORMS[int(rng.integers(len(FORMS)))] for _ in range(n)]
        heads = random_tree(n, rng)
        deprels = {}
        deps: dict[int, list] = {}
        for t in range(1, n + 1):
            deprels[t] = "root" if heads[t] == 0 else LABELS[int(rng.integers(len(LABELS)))]
            deps[t] = [(NodeId(heads[t]), deprels[t])]
        root = next(t for t in heads if heads[t] == 0)
        if multihead and i % 3 == 0:
            d = 1 if root != 1 else 2
            extra_head = next(h for h in range(1, n + 1) if h not in (d, heads[d]))
            label = LABELS[int(rng.integers(len(LABELS)))]
            if (NodeId(extra_head), label) not in deps[d]:
                deps[d].append((NodeId(extra_head), label))
        empty_after = root if empties and i % 5 == 0 else None
        if empty_after is not None and n != empty_after:
            extra = (NodeId(empty_after, 1), "nsubj")
            if extra not in deps[n]:
                deps[n].append(extra)
        tokens = []
        for t in range(1, n + 1):
            tokens.append(Token(
                id=NodeId(t), form=forms[t - 1], lemma=forms[t - 1], upos="X",
                head=NodeId(heads[t]), deprel=deprels[t],
                deps=tuple(sorted(deps[t], key=sort_key)),
            ))
            if t == empty_after:
                tokens.append(Token(id=NodeId(t, 1), form="gone", lemma="gone", upos="X",
                                    deps=((NodeId(t), "obj"),)))
        ranges = ()
        if mwts and i % 4 == 0:
            ranges = (MwtRange(1, 2, forms[0] + forms[1], misc="SpaceAfter=No"),)
        sentence = Sentence(comments=(f"# sent_id = synth-{i}",), tokens=tuple(tokens),
                            mwt_ranges=ranges)
        assert not validate_level2(sentence), f"synthetic sentence {i} invalid"
        sentences.append(sentence)
    return sentences


@pytest.fixture
def tiny_treebank() -> list[Sentence]:
    return synth_treebank(8, seed=7)


def finite_difference(build_loss, param, step: float = 1e-4) -> np.ndarray:
    """Central finite differences of a scalar closure w.r.t. one tensor."""
    fd = np.zeros_like(param.data)
    flat = param.data.ravel()
    fd_flat = fd.ravel()
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        up = build_loss()
        flat[i] = old - step
        down = build_loss()
        flat[i] = old
        fd_flat[i] = (up - down) / (2.0 * step)
    return fd


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max elementwise |a - f| / max(1, |a|, |f|)."""
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))

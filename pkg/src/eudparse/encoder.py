"""Trainable desk-scale token encoder.

Tokens are segmented into hashed subword pieces (a whole-token hash first,
then character trigrams), embedded, and passed through a small stack of
context-mixing feedforward layers. Each token is represented by the output
vector of its first piece, and a learned ROOT vector is prepended, so the
interface matches what a pretrained contextual encoder would provide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .autodiff import Tensor, concat, parameter, window_sum

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(text: str) -> int:
    """Deterministic 64-bit FNV-1a hash of a UTF-8 string."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class SubwordAlignment:
    """Piece ids for a sentence plus the position of each token's first piece."""

    pieces: tuple[int, ...]
    token_first: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.pieces or not self.token_first:
            raise ValueError("alignment must cover at least one token")
        prev = -1
        for pos in self.token_first:
            if not (prev < pos < len(self.pieces)):
                raise ValueError("token_first must be strictly increasing and in range")
            prev = pos


def subword_tokenize(tokens: Sequence[str], vocab_size: int, ngram: int = 3) -> SubwordAlignment:
    """Segment tokens into hashed pieces: whole-token hash, then n-gram hashes."""
    pieces: list[int] = []
    token_first: list[int] = []
    for tok in tokens:
        if not tok:
            raise ValueError("cannot tokenize an empty token string")
        token_first.append(len(pieces))
        pieces.append(fnv1a64(tok) % vocab_size)
        for i in range(len(tok) - ngram + 1):
            pieces.append(fnv1a64(tok[i : i + ngram]) % vocab_size)
    return SubwordAlignment(pieces=tuple(pieces), token_first=tuple(token_first))


def filter_first(E: Tensor, alignment: SubwordAlignment) -> Tensor:
    """Select the first-piece output row for every token."""
    if E.shape[0] != len(alignment.pieces):
        raise ValueError(f"E has {E.shape[0]} rows but alignment has {len(alignment.pieces)} pieces")
    return E[np.asarray(alignment.token_first, dtype=np.intp)]


class Encoder:
    """Hashed-subword embedding table with window-mixing feedforward layers."""

    def __init__(self, dim: int, vocab_size: int, layers: int, window: int, ngram: int, rng: np.random.Generator):
        self.dim = dim
        self.vocab_size = vocab_size
        self.n_layers = layers
        self.window = window
        self.ngram = ngram
        self.embeddings = parameter(rng.normal(0.0, 0.5, size=(vocab_size, dim)))
        self.root = parameter(rng.normal(0.0, 0.5, size=(1, dim)))
        scale = np.sqrt(6.0 / (2 * dim))
        self.mixers = [
            (parameter(rng.uniform(-scale, scale, size=(dim, dim))),
             parameter(rng.uniform(-scale, scale, size=(dim, dim))),
             parameter(np.zeros(dim)))
            for _ in range(layers)
        ]

    def parameters(self) -> dict[str, Tensor]:
        named = {"encoder.embeddings": self.embeddings, "encoder.root": self.root}
        for i, (w_self, w_ctx, b) in enumerate(self.mixers):
            named[f"encoder.mixer{i}.self_weight"] = w_self
            named[f"encoder.mixer{i}.ctx_weight"] = w_ctx
            named[f"encoder.mixer{i}.bias"] = b
        return named

    def tokenize(self, tokens: Sequence[str]) -> SubwordAlignment:
        return subword_tokenize(tokens, self.vocab_size, self.ngram)

    def encode(
        self,
        alignment: SubwordAlignment,
        input_dropout: float = 0.0,
        dropout: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        """Return R: the ROOT row followed by one contextual vector per token.

        Dropout rates are only applied when an RNG is supplied (training mode);
        inverted dropout keeps expectations unchanged.
        """
        ids = np.asarray(alignment.pieces, dtype=np.intp)
        bad = ids[(ids < 0) | (ids >= self.vocab_size)]
        if bad.size:
            raise ValueError(f"piece id {bad[0]} outside vocabulary of size {self.vocab_size}")
        hidden = self.embeddings[ids]
        hidden = _dropout(hidden, input_dropout, rng)
        for w_self, w_ctx, bias in self.mixers:
            # the centre piece keeps its own projection so that token identity
            # survives the (position-symmetric) additive window sum
            mixed = window_sum(hidden, self.window)
            hidden = (hidden @ w_self + mixed @ w_ctx + bias).relu()
            hidden = _dropout(hidden, dropout, rng)
        tokens = filter_first(hidden, alignment)
        return concat([self.root, tokens], axis=0)


def _dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    if rng is None or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep

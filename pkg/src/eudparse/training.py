"""Training loop, optimizers, treebank concatenation and checkpointing.

Checkpoint container format (version 1)
---------------------------------------
A checkpoint file is, in order:

* 8 magic bytes ``EUDPKT01``
* a little-endian uint32 header length
* a UTF-8 JSON header with keys ``format_version``, ``meta`` (hyperparams,
  train config, label vocabularies, best epoch, dev-metric history) and
  ``tensors`` (ordered list of {name, shape}); all tensors are float64
* the raw little-endian tensor payloads, concatenated in header order
* a trailing SHA-256 digest (32 bytes) of everything before it

Loading verifies the magic, the format version and the digest, and restores
every tensor bit-for-bit. Training is deterministic: given the same data,
configuration and seed, two runs produce byte-identical checkpoint files.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .autodiff import Tensor
from .conllu import Sentence, validate_level2
from .evaluation import elas
from .graph import to_graph
from .model import EudParser, Hyperparams, LabelVocab, TreeGold, tree_targets
from .pipeline import parse_sentences

logger = logging.getLogger(__name__)

MAGIC = b"EUDPKT01"
FORMAT_VERSION = 1


class TrainingError(Exception):
    pass


class CheckpointError(Exception):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 42
    patience: int = 0
    optimizer: str = "adam"
    dev_metric: str = "exact"

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.dev_metric not in ("exact", "coarse"):
            raise ValueError(f"unknown dev metric {self.dev_metric!r}")


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    hyperparams: Hyperparams
    train_config: TrainConfig
    label_vocab: LabelVocab
    tree_vocab: Optional[LabelVocab]
    epoch: int
    history: tuple[dict, ...]

    def build_model(self) -> EudParser:
        model = EudParser(self.hyperparams, self.label_vocab, self.tree_vocab, seed=self.train_config.seed)
        for name, tensor in model.parameters().items():
            stored = self.params.get(name)
            if stored is None or stored.shape != tensor.data.shape:
                raise CheckpointError(f"checkpoint tensor {name!r} missing or mis-shaped")
            tensor.data = stored.copy()
        return model


def concat_treebanks(treebanks: Sequence[Sequence[Sentence]],
                     names: Optional[Sequence[str]] = None) -> list[Sentence]:
    """Concatenate treebanks, tagging each sentence with a provenance comment."""
    if not treebanks:
        raise ValueError("need at least one treebank")
    if names is None:
        names = [f"treebank_{i}" for i in range(len(treebanks))]
    if len(names) != len(treebanks):
        raise ValueError("names and treebanks differ in length")
    out = []
    for name, bank in zip(names, treebanks):
        for sentence in bank:
            comment = f"# source = {name}"
            out.append(dataclasses.replace(sentence, comments=(comment,) + sentence.comments))
    return out


class Adam:
    """Adaptive-moment estimation with bias correction."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self) -> None:
        self.t += 1
        for name in sorted(self.params):
            p = self.params[name]
            if p.grad is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= self.b1
            m += (1 - self.b1) * p.grad
            v *= self.b2
            v += (1 - self.b2) * p.grad ** 2
            mhat = m / (1 - self.b1 ** self.t)
            vhat = v / (1 - self.b2 ** self.t)
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class Sgd:
    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3):
        self.params = params
        self.lr = lr

    def step(self) -> None:
        for name in sorted(self.params):
            p = self.params[name]
            if p.grad is not None:
                p.data -= self.lr * p.grad


def _zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None


def _snapshot(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in params.items()}


def train(train_data: Sequence[Sentence], dev_data: Sequence[Sentence],
          hp: Hyperparams, config: TrainConfig) -> Checkpoint:
    """Train a parser; returns the checkpoint of the best dev epoch.

    Sentences failing level-2 validation are skipped with a warning. After
    every epoch the dev set is parsed and scored with ELAS; the best-scoring
    parameters are kept, and training stops early after ``patience``
    non-improving epochs (0 disables early stopping).
    """
    usable = []
    for i, sentence in enumerate(train_data):
        violations = validate_level2(sentence)
        if violations:
            logger.warning("skipping training sentence %d: %s", i, violations[0].message)
        else:
            usable.append(sentence)
    if not usable:
        raise TrainingError("no valid training sentences")
    vocab = LabelVocab.from_enhanced(usable)
    if len(vocab) <= 1:
        raise TrainingError("training data contains no enhanced-dependency labels")
    tree_vocab = LabelVocab.from_deprels(usable) if hp.mtl_enabled else None
    model = EudParser(hp, vocab, tree_vocab, seed=config.seed)
    golds = [to_graph(s) for s in usable]
    gold_trees: list[Optional[TreeGold]] = [
        tree_targets(s, tree_vocab, strict=True) if hp.mtl_enabled else None for s in usable
    ]
    if config.optimizer == "adam":
        optimizer = Adam(model.parameters(), lr=config.learning_rate)
    else:
        optimizer = Sgd(model.parameters(), lr=config.learning_rate)
    coarse = config.dev_metric == "coarse"
    best_score = -1.0
    best_params = _snapshot(model.parameters())
    best_epoch = -1
    bad_epochs = 0
    history: list[dict] = []
    for epoch in range(config.epochs):
        rng = np.random.default_rng([config.seed, epoch])
        order = rng.permutation(len(usable))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            _zero_grads(model.parameters())
            batch_loss = 0.0
            for idx in batch:
                scores = model.score(usable[idx], training=True, rng=rng)
                terms = model.loss(scores, golds[idx], gold_trees[idx])
                scaled = terms.total / float(len(batch))
                if not np.isfinite(scaled.data):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}, sentence {idx}")
                scaled.backward()
                batch_loss += scaled.item()
            optimizer.step()
            losses.append(batch_loss)
        parsed, _ = parse_sentences(model, dev_data)
        dev_exact = elas(dev_data, parsed, coarse=False).f1
        dev_coarse = elas(dev_data, parsed, coarse=True).f1
        score = dev_coarse if coarse else dev_exact
        history.append({
            "epoch": epoch,
            "train_loss": float(np.mean(losses)) if losses else 0.0,
            "dev_elas_exact": dev_exact,
            "dev_elas_coarse": dev_coarse,
        })
        logger.info("epoch %d: train_loss=%.4f dev_elas=%.4f", epoch, history[-1]["train_loss"], score)
        if score > best_score:
            best_score = score
            best_params = _snapshot(model.parameters())
            best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if config.patience > 0 and bad_epochs >= config.patience:
                break
    return Checkpoint(params=best_params, hyperparams=hp, train_config=config,
                      label_vocab=vocab, tree_vocab=tree_vocab, epoch=best_epoch,
                      history=tuple(history))


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> None:
    names = sorted(checkpoint.params)
    header = {
        "format_version": FORMAT_VERSION,
        "meta": {
            "hyperparams": dataclasses.asdict(checkpoint.hyperparams),
            "train_config": dataclasses.asdict(checkpoint.train_config),
            "labels": list(checkpoint.label_vocab.labels),
            "tree_labels": list(checkpoint.tree_vocab.labels) if checkpoint.tree_vocab else None,
            "epoch": checkpoint.epoch,
            "history": list(checkpoint.history),
        },
        "tensors": [{"name": n, "shape": list(checkpoint.params[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    digest = hashlib.sha256()
    with open(path, "wb") as f:
        for chunk in (MAGIC, struct.pack("<I", len(blob)), blob):
            f.write(chunk)
            digest.update(chunk)
        for name in names:
            raw = np.ascontiguousarray(checkpoint.params[name], dtype="<f8").tobytes()
            f.write(raw)
            digest.update(raw)
        f.write(digest.digest())


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 4 + 32 or not raw.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    body, stored_digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != stored_digest:
        raise CheckpointError(f"{path}: integrity check failed (truncated or corrupted)")
    header_len = struct.unpack("<I", raw[8:12])[0]
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: bad header ({exc})") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {header.get('format_version')} not supported (expected {FORMAT_VERSION})")
    meta = header["meta"]
    params: dict[str, np.ndarray] = {}
    offset = 12 + header_len
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * 8
        params[entry["name"]] = np.frombuffer(body[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(body):
        raise CheckpointError(f"{path}: payload size mismatch")
    return Checkpoint(
        params=params,
        hyperparams=Hyperparams(**meta["hyperparams"]),
        train_config=TrainConfig(**meta["train_config"]),
        label_vocab=LabelVocab(labels=tuple(meta["labels"])),
        tree_vocab=LabelVocab(labels=tuple(meta["tree_labels"])) if meta["tree_labels"] else None,
        epoch=meta["epoch"],
        history=tuple(meta["history"]),
    )

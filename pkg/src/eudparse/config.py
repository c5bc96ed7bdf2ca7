"""Flat key-value configuration files with dotted keys.

Example::

    # parser profile
    encoder.dim = 64
    model.edge_threshold = 0.5
    training.epochs = 120

Unknown keys are rejected so typos surface immediately.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Union

from .model import Hyperparams
from .training import TrainConfig


class ConfigError(Exception):
    pass


_HYPER_KEYS = {
    "encoder.dim": "d_enc",
    "encoder.vocab_size": "encoder_vocab_size",
    "encoder.layers": "encoder_layers",
    "encoder.window": "encoder_window",
    "encoder.ngram": "encoder_ngram",
    "model.edge_ff": "edge_ff",
    "model.label_ff": "label_ff",
    "model.input_dropout": "input_dropout",
    "model.dropout": "dropout",
    "model.edge_threshold": "edge_threshold",
    "model.loss_interpolation": "loss_interpolation",
    "model.mtl_enabled": "mtl_enabled",
    "model.mtl_weight": "mtl_weight",
}

_TRAIN_KEYS = {
    "training.epochs": "epochs",
    "training.batch_size": "batch_size",
    "training.learning_rate": "learning_rate",
    "training.seed": "seed",
    "training.patience": "patience",
    "training.optimizer": "optimizer",
    "training.dev_metric": "dev_metric",
}


def _convert(value: str) -> Any:
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def parse_config_text(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {no}: expected 'key = value', got {raw!r}")
        key = key.strip()
        if key not in _HYPER_KEYS and key not in _TRAIN_KEYS:
            raise ConfigError(f"line {no}: unknown configuration key {key!r}")
        if key in values:
            raise ConfigError(f"line {no}: duplicate configuration key {key!r}")
        values[key] = _convert(value.strip())
    return values


def load_config(path: Union[str, Path, None]) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def build_settings(values: dict[str, Any], overrides: dict[str, Any] | None = None
                   ) -> tuple[Hyperparams, TrainConfig]:
    """Materialize typed settings from config values plus CLI overrides."""
    merged = dict(values)
    merged.update(overrides or {})
    hyper_kwargs = {}
    train_kwargs = {}
    for key, value in merged.items():
        if key in _HYPER_KEYS:
            hyper_kwargs[_HYPER_KEYS[key]] = value
        elif key in _TRAIN_KEYS:
            train_kwargs[_TRAIN_KEYS[key]] = value
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return Hyperparams(**hyper_kwargs), TrainConfig(**train_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def config_snapshot(hp: Hyperparams, config: TrainConfig) -> dict[str, Any]:
    """Flat dotted-key view of the effective settings (for run manifests)."""
    out = {}
    hp_fields = dataclasses.asdict(hp)
    tc_fields = dataclasses.asdict(config)
    for dotted, attr in _HYPER_KEYS.items():
        out[dotted] = hp_fields[attr]
    for dotted, attr in _TRAIN_KEYS.items():
        out[dotted] = tc_fields[attr]
    return out

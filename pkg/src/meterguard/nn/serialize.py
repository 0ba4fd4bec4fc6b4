"""JSON model files.

Floats are written with ``repr`` precision, which round-trips float64
exactly, so a loaded model reproduces the saved parameters bit for bit.
"""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

import numpy as np

from meterguard.data.preprocess import StandardizationRecord
from meterguard.errors import IoFailure, ValidationError
from meterguard.fileio import write_atomic
from meterguard.nn.autoencoder import AutoencoderModel, Variant
from meterguard.nn.training import TrainConfig

FORMAT = "meterguard-autoencoder/1"


def model_to_dict(model: AutoencoderModel) -> dict:
    return {
        "format": FORMAT,
        "variant": model.variant.value,
        "hidden": model.hidden,
        "window_len": model.window_len,
        "n_channels": model.n_channels,
        "gcn_features": model.gcn_features,
        "adjacency": None if model.adjacency is None else model.adjacency.tolist(),
        "params": {
            name: {"shape": list(a.shape), "data": a.ravel().tolist()} for name, a in sorted(model.params.items())
        },
        "standardization": None if model.standardization is None else model.standardization.to_dict(),
        "threshold": model.threshold,
        "train_config": None if model.train_config is None else dataclasses.asdict(model.train_config),
        "meta": model.meta,
    }


def model_from_dict(d: dict) -> AutoencoderModel:
    if d.get("format") != FORMAT:
        raise ValidationError(f"not a model file (format {d.get('format')!r})")
    try:
        params = {
            name: np.asarray(p["data"], dtype=np.float64).reshape(p["shape"]) for name, p in d["params"].items()
        }
        model = AutoencoderModel(
            variant=Variant(d["variant"]),
            hidden=int(d["hidden"]),
            window_len=int(d["window_len"]),
            params=params,
            n_channels=int(d["n_channels"]),
            gcn_features=int(d["gcn_features"]),
            adjacency=None if d["adjacency"] is None else np.asarray(d["adjacency"], dtype=float),
            standardization=None
            if d["standardization"] is None
            else StandardizationRecord.from_dict(d["standardization"]),
            threshold=d["threshold"],
            train_config=None if d["train_config"] is None else TrainConfig(**d["train_config"]),
            meta=d.get("meta", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"corrupt model file: {exc}") from exc
    return model


def save_model(model: AutoencoderModel, path: str | os.PathLike) -> None:
    write_atomic(path, json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n")


def load_model(path: str | os.PathLike) -> AutoencoderModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not JSON: {exc}") from exc
    return model_from_dict(d)

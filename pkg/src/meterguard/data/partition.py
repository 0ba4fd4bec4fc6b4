"""Cutting household matrices into windows and the 80/20 train/validation split."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from meterguard.data.types import RESOURCES, Label, LabelSet, SeriesSet, households
from meterguard.errors import InsufficientNormalData

TRAIN_FRACTION = 0.8


@dataclass
class DatasetPartition:
    train: np.ndarray  # (n, window_len, 5)
    validation: np.ndarray
    test: np.ndarray
    window_len: int
    seed: int
    test_labels: np.ndarray | None = None  # (m, window_len, 5) Label codes
    test_index: list[tuple[int, int]] = field(default_factory=list)  # (household, start step)
    meta: dict = field(default_factory=dict)


def household_arrays(series: SeriesSet, labels: LabelSet | None, household_id: int):
    """(T, 5) standardized values with missing encoded as 0, and (T, 5) labels."""
    cols = [series[(household_id, r)] for r in RESOURCES]
    values = np.stack([np.where(c.quality, c.values, 0.0) for c in cols], axis=1)
    if labels is None:
        lab = np.stack([np.where(c.quality, Label.NORMAL, Label.MISSING) for c in cols], axis=1)
    else:
        lab = np.stack([labels[(household_id, r)] for r in RESOURCES], axis=1)
    return values, lab.astype(np.int8)


def window_starts(n: int, window_len: int, stride: int) -> list[int]:
    return list(range(0, n - window_len + 1, stride))


def pad_to_windows(a: np.ndarray, window_len: int) -> np.ndarray:
    """Edge-replicate rows so the length is a multiple of ``window_len``."""
    extra = (-len(a)) % window_len
    if extra == 0:
        return a
    return np.concatenate([a, np.repeat(a[-1:], extra, axis=0)], axis=0)


def partition_dataset(
    series: SeriesSet,
    labels: LabelSet,
    window_len: int,
    seed: int,
    *,
    stride: int | None = None,
    ground_truth: LabelSet | None = None,
    max_windows: int | None = None,
) -> DatasetPartition:
    """Split Normal-only windows 80/20 into train/validation; test is every window.

    ``series`` must already be standardized. Training windows are taken every
    ``stride`` steps (default: non-overlapping); test windows never overlap and
    the tail is edge-padded. ``max_windows`` caps the shuffled normal pool.
    """
    stride = window_len if stride is None else stride
    pool, test, test_labels, test_index = [], [], [], []
    for hid in households(series):
        values, lab = household_arrays(series, labels, hid)
        for s in window_starts(len(values), window_len, stride):
            if np.all(lab[s : s + window_len] == Label.NORMAL):
                pool.append(values[s : s + window_len])
        truth = lab if ground_truth is None else household_arrays(series, ground_truth, hid)[1]
        pv, pl = pad_to_windows(values, window_len), pad_to_windows(truth, window_len)
        for s in range(0, len(pv), window_len):
            test.append(pv[s : s + window_len])
            test_labels.append(pl[s : s + window_len])
            test_index.append((hid, s))
    if len(pool) < 2:
        raise InsufficientNormalData(f"only {len(pool)} normal-only windows of length {window_len}")
    rng = np.random.default_rng(seed)
    pool = np.asarray(pool)[rng.permutation(len(pool))]
    available = len(pool)
    if max_windows is not None:
        pool = pool[:max_windows]
    n_train = int(round(TRAIN_FRACTION * len(pool)))
    n_train = min(max(n_train, 1), len(pool) - 1)
    return DatasetPartition(
        train=pool[:n_train],
        validation=pool[n_train:],
        test=np.asarray(test),
        window_len=window_len,
        seed=seed,
        test_labels=np.asarray(test_labels),
        test_index=test_index,
        meta={"normal_windows": available, "used_windows": len(pool), "stride": stride},
    )

"""Local outlier factor labeling used to assemble the normal training pool."""

from __future__ import annotations

import numpy as np

from meterguard.data.types import Label, LabelSet, SeriesSet, sorted_set, time_of_day_hours
from meterguard.errors import SeriesTooShort


def lof_scores(features: np.ndarray, k: int) -> np.ndarray:
    """LOF of every row of ``features`` with k-distance neighborhoods (ties included).

    Zero-distance convention: a point whose neighbors all coincide with it has
    infinite reachability density; the density ratio inf/inf counts as 1, so
    a cloud of identical points scores exactly 1 everywhere.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    if k < 1 or n <= k:
        raise SeriesTooShort(f"need more than k={k} points, got {n}")
    # direct differences, one feature at a time: exact zeros for identical rows and
    # bit-identical distances for mirrored pairs, so tied k-distances stay tied
    d2 = np.zeros((n, n))
    for col in X.T:
        diff = col[:, None] - col[None, :]
        d2 += diff * diff
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, np.inf)
    kdist = np.partition(dist, k - 1, axis=1)[:, k - 1]
    neigh = dist <= kdist[:, None]
    counts = neigh.sum(axis=1)
    reach = np.maximum(dist, kdist[None, :])
    mean_reach = np.where(neigh, reach, 0.0).sum(axis=1) / counts
    with np.errstate(divide="ignore"):
        lrd = np.where(mean_reach > 0, 1.0 / np.where(mean_reach > 0, mean_reach, 1.0), np.inf)
    # ratio lrd[o] / lrd[p] with inf/inf -> 1
    num = lrd[None, :]
    den = lrd[:, None]
    both_inf = np.isinf(num) & np.isinf(den)
    with np.errstate(invalid="ignore"):
        ratio = np.where(both_inf, 1.0, num / den)
    return np.where(neigh, ratio, 0.0).sum(axis=1) / counts


def _zscore(v: np.ndarray) -> np.ndarray:
    sd = v.std()
    return np.zeros_like(v) if sd == 0 else (v - v.mean()) / sd


def series_features(values: np.ndarray, timestamps: np.ndarray) -> np.ndarray:
    """(standardized value, sin, cos of time of day)."""
    phase = 2 * np.pi * time_of_day_hours(timestamps) / 24.0
    return np.column_stack([_zscore(values), np.sin(phase), np.cos(phase)])


def label_reference_anomalies(series: SeriesSet, k: int = 20, lof_threshold: float = 1.5) -> LabelSet:
    """Per-series labels: Missing from quality flags, Outlier where LOF exceeds the threshold."""
    out = {}
    for key, s in sorted_set(series).items():
        labels = np.full(len(s), Label.NORMAL, dtype=np.int8)
        labels[~s.quality] = Label.MISSING
        present = np.flatnonzero(s.quality)
        if len(present) <= k:
            raise SeriesTooShort(f"series {key} has {len(present)} present points, need more than {k}")
        scores = lof_scores(series_features(s.values[present], s.timestamps[present]), k)
        labels[present[scores > lof_threshold]] = Label.OUTLIER
        out[key] = labels
    return out

"""Seeded injection of outliers and missing readings with ground truth."""

from __future__ import annotations

import numpy as np

from meterguard.data.types import Label, LabelSet, SeriesSet, sorted_set
from meterguard.errors import RateOutOfRange

MAX_TOTAL_RATE = 0.05


def labels_from_quality(series: SeriesSet) -> LabelSet:
    out = {}
    for key, s in sorted_set(series).items():
        lab = np.full(len(s), Label.NORMAL, dtype=np.int8)
        lab[~s.quality] = Label.MISSING
        out[key] = lab
    return out


def inject_anomalies(
    series: SeriesSet,
    seed: int,
    outlier_rate: float = 0.006,
    missing_rate: float = 0.002,
    factor_range: tuple[float, float] = (3.0, 8.0),
    dropout_prob: float = 0.5,
) -> tuple[SeriesSet, LabelSet]:
    """Corrupt a share of the points and return the corrupted set plus labels.

    ``round(rate * N)`` points of each kind are drawn without replacement from
    the present readings of the whole set (N counts every point). An outlier
    is either a multiplicative spike with factor uniform in ``factor_range``
    or, with probability ``dropout_prob``, a dropout to zero.
    """
    if outlier_rate < 0 or missing_rate < 0 or outlier_rate + missing_rate > MAX_TOTAL_RATE:
        raise RateOutOfRange(
            f"rates must be >= 0 with outlier + missing <= {MAX_TOTAL_RATE}, got {outlier_rate} + {missing_rate}"
        )
    ordered = sorted_set(series)
    labels = labels_from_quality(ordered)
    keys = list(ordered)
    lengths = np.array([len(ordered[k]) for k in keys])
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    n_total = int(offsets[-1])
    present = np.concatenate([ordered[k].quality for k in keys]) if keys else np.zeros(0, bool)

    n_out = int(round(outlier_rate * n_total))
    n_miss = int(round(missing_rate * n_total))
    if n_out + n_miss == 0:
        return {k: s.with_values(s.values.copy()) for k, s in ordered.items()}, labels

    rng = np.random.default_rng(seed)
    candidates = np.flatnonzero(present)
    if n_out + n_miss > len(candidates):
        raise RateOutOfRange("not enough present readings to corrupt")
    chosen = rng.choice(candidates, size=n_out + n_miss, replace=False)
    outlier_idx, missing_idx = chosen[:n_out], chosen[n_out:]
    dropout = rng.random(n_out) < dropout_prob
    factors = rng.uniform(*factor_range, n_out)

    values = np.concatenate([ordered[k].values for k in keys])
    quality = present.copy()
    flat_labels = np.concatenate([labels[k] for k in keys])
    values[outlier_idx] = np.where(dropout, 0.0, values[outlier_idx] * factors)
    flat_labels[outlier_idx] = Label.OUTLIER
    values[missing_idx] = np.nan
    quality[missing_idx] = False
    flat_labels[missing_idx] = Label.MISSING

    out, out_labels = {}, {}
    for i, k in enumerate(keys):
        sl = slice(offsets[i], offsets[i + 1])
        out[k] = ordered[k].with_values(values[sl].copy(), quality[sl].copy())
        out_labels[k] = flat_labels[sl].copy()
    return out, out_labels

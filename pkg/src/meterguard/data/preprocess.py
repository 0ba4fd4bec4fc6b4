"""Cleaning, 15-minute resampling, denoising and standardization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from meterguard.data.types import RESOURCES, STEP, ResourceSeries, SeriesSet, sorted_set
from meterguard.data.wavelet import dwt_denoise
from meterguard.errors import EmptyChannel, EmptySeries


class DegenerateChannel(UserWarning):
    """A resource channel has zero spread and is mapped to all zeros."""


def _step_floor(ts: np.ndarray) -> np.ndarray:
    secs = ts.astype("datetime64[s]").astype(np.int64)
    step = int(STEP / np.timedelta64(1, "s"))
    return (secs // step * step).astype("datetime64[s]")


def clean_tags(s: ResourceSeries) -> tuple[np.ndarray, np.ndarray]:
    """Timestamps and values of usable readings: present, finite and non-negative."""
    v = s.values
    keep = s.quality & np.isfinite(v)
    keep[keep] = v[keep] >= 0
    return s.timestamps[keep], v[keep]


def resample(s: ResourceSeries, grid_start: np.datetime64, n_steps: int) -> ResourceSeries:
    """Bucket-mean onto ``n_steps`` 15-minute slots from ``grid_start``; empty slots are missing."""
    ts, v = clean_tags(s)
    idx = ((_step_floor(ts) - grid_start) // STEP).astype(np.int64)
    ok = (idx >= 0) & (idx < n_steps)
    sums = np.bincount(idx[ok], weights=v[ok], minlength=n_steps)
    counts = np.bincount(idx[ok], minlength=n_steps)
    values = np.full(n_steps, np.nan)
    filled = counts > 0
    values[filled] = sums[filled] / counts[filled]
    return ResourceSeries.regular(s.household_id, s.resource, grid_start, values, filled)


def preprocess(series: SeriesSet) -> SeriesSet:
    """Drop invalid tag values and put every household on one shared 15-minute grid."""
    out = {}
    by_house: dict[int, list[ResourceSeries]] = {}
    for s in sorted_set(series).values():
        if len(s) == 0:
            raise EmptySeries(f"series {s.key} has no readings")
        if len(clean_tags(s)[0]) == 0:
            raise EmptySeries(f"series {s.key} has no valid readings")
        by_house.setdefault(s.household_id, []).append(s)
    for hid, group in by_house.items():
        lo = min(_step_floor(s.timestamps[:1])[0] for s in group)
        hi = max(_step_floor(s.timestamps[-1:])[0] for s in group)
        n_steps = int((hi - lo) // STEP) + 1
        for s in group:
            r = resample(s, lo, n_steps)
            r.check_invariants()
            out[r.key] = r
    return out


@dataclass(frozen=True)
class StandardizationRecord:
    mean: tuple[float, ...]  # indexed by ResourceKind
    std: tuple[float, ...]

    def forward(self, resource: int, values: np.ndarray) -> np.ndarray:
        sd = self.std[resource]
        if sd == 0:
            return np.where(np.isfinite(values), 0.0, values)
        return (values - self.mean[resource]) / sd

    def inverse(self, resource: int, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.std[resource] + self.mean[resource]

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationRecord":
        return cls(tuple(float(x) for x in d["mean"]), tuple(float(x) for x in d["std"]))


def fit_standardization(series: SeriesSet, fit_masks: dict | None = None) -> StandardizationRecord:
    """Per-resource mean and population std over present points (optionally masked)."""
    means, stds = [], []
    for r in RESOURCES:
        chunks = []
        for key, s in series.items():
            if key[1] != r:
                continue
            m = s.quality if fit_masks is None else s.quality & fit_masks[key]
            chunks.append(s.values[m])
        pool = np.concatenate(chunks) if chunks else np.zeros(0)
        if len(pool) < 2:
            raise EmptyChannel(f"resource {r.csv_name} has fewer than 2 usable points")
        means.append(float(pool.mean()))
        sd = float(pool.std())
        if sd == 0:
            warnings.warn(f"resource {r.csv_name} is constant; standardized to zeros", DegenerateChannel)
        stds.append(sd)
    return StandardizationRecord(tuple(means), tuple(stds))


def apply_standardization(series: SeriesSet, record: StandardizationRecord) -> SeriesSet:
    return {k: s.with_values(record.forward(int(s.resource), s.values)) for k, s in series.items()}


def standardize(series: SeriesSet, fit_masks: dict | None = None) -> tuple[SeriesSet, StandardizationRecord]:
    """Map present values to (x - mean) / std per resource.

    Statistics come from the points selected by ``fit_masks`` (the training
    split); without masks every present point is used.
    """
    record = fit_standardization(series, fit_masks)
    return apply_standardization(series, record), record


def destandardize(series: SeriesSet, record: StandardizationRecord) -> SeriesSet:
    return {k: s.with_values(record.inverse(int(s.resource), s.values)) for k, s in series.items()}


def denoise_series(s: ResourceSeries, levels: int = 2, threshold: float | None = None) -> ResourceSeries:
    """Wavelet-denoise present values; gaps are bridged by linear interpolation first."""
    v = s.values.copy()
    q = s.quality
    if q.sum() < 2:
        return s
    idx = np.arange(len(v))
    filled = np.interp(idx, idx[q], v[q])
    out = dwt_denoise(filled, levels, threshold)
    out = np.maximum(out, 0.0)
    out[~q] = np.nan
    return s.with_values(out)


def denoise(series: SeriesSet, levels: int = 2) -> SeriesSet:
    return {k: denoise_series(s, levels) for k, s in sorted_set(series).items()}


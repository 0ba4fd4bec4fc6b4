"""Core data containers for multi-resource meter readings."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

STEP = np.timedelta64(15, "m")
STEPS_PER_DAY = 96
STEP_HOURS = 0.25


class ResourceKind(enum.IntEnum):
    GAS = 0
    ELECTRIC = 1
    WATER = 2
    HEATING = 3
    HOT_WATER = 4

    @property
    def csv_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_csv(cls, name: str) -> "ResourceKind":
        return cls[name.strip().upper()]


RESOURCES = tuple(ResourceKind)


class Label(enum.IntEnum):
    NORMAL = 0
    OUTLIER = 1
    MISSING = 2


@dataclass(frozen=True)
class ResourceSeries:
    """Readings of one resource for one household.

    ``values`` holds energy per interval in kWh with NaN where no reading is
    present; ``quality`` is True where a reading is present. Timestamps are
    UTC ``datetime64[s]``; after preprocessing they sit on a 15-minute grid.
    """

    household_id: int
    resource: ResourceKind
    timestamps: np.ndarray
    values: np.ndarray
    quality: np.ndarray

    def __post_init__(self):
        if not (len(self.timestamps) == len(self.values) == len(self.quality)):
            raise ValueError("timestamps, values and quality must have equal length")

    @classmethod
    def regular(cls, household_id, resource, start, values, quality=None) -> "ResourceSeries":
        values = np.asarray(values, dtype=float)
        if quality is None:
            quality = np.isfinite(values)
        ts = np.datetime64(start, "s") + np.arange(len(values)) * STEP
        return cls(household_id, ResourceKind(resource), ts.astype("datetime64[s]"), values, np.asarray(quality, bool))

    @property
    def key(self) -> tuple[int, ResourceKind]:
        return (self.household_id, self.resource)

    @property
    def start(self) -> np.datetime64:
        return self.timestamps[0]

    @property
    def step(self) -> np.timedelta64 | None:
        """The common spacing, or None if the clock is irregular."""
        if len(self.timestamps) < 2:
            return STEP
        d = np.diff(self.timestamps)
        return d[0] if np.all(d == d[0]) else None

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values, quality=None) -> "ResourceSeries":
        return replace(
            self,
            values=np.asarray(values, dtype=float),
            quality=self.quality.copy() if quality is None else np.asarray(quality, bool),
        )

    def check_invariants(self) -> None:
        if self.step != STEP:
            raise ValueError(f"{self.key}: step is not 15 minutes")
        present = self.values[self.quality]
        if not np.all(np.isfinite(present)):
            raise ValueError(f"{self.key}: present values must be finite")
        if np.any(present < 0):
            raise ValueError(f"{self.key}: negative energy reading")
        if np.any(np.isfinite(self.values[~self.quality])):
            raise ValueError(f"{self.key}: missing points must carry no value")


SeriesSet = dict  # (household_id, ResourceKind) -> ResourceSeries
LabelSet = dict  # (household_id, ResourceKind) -> int8 array of Label codes


def sorted_set(series) -> SeriesSet:
    items = series.values() if isinstance(series, dict) else series
    return {s.key: s for s in sorted(items, key=lambda s: (s.household_id, int(s.resource)))}


def households(series: SeriesSet) -> list[int]:
    return sorted({k[0] for k in series})


def household_matrix(series: SeriesSet, household_id: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack the five resources of a household into (T, 5) values and quality."""
    cols = [series[(household_id, r)] for r in RESOURCES]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError(f"household {household_id}: resources have different lengths")
    values = np.stack([c.values for c in cols], axis=1)
    quality = np.stack([c.quality for c in cols], axis=1)
    return values, quality


def time_of_day_hours(timestamps: np.ndarray) -> np.ndarray:
    secs = (timestamps.astype("datetime64[s]") - timestamps.astype("datetime64[D]")).astype(np.int64)
    return secs / 3600.0

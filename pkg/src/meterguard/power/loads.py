"""Load-class containers used by the scheduler and the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from meterguard.errors import InfeasibleWindow


@dataclass(frozen=True)
class ShiftableLoad:
    """A deferrable appliance run.

    ``profile`` is the power draw (kW) for each 15-minute step of the run;
    the run must start at or after ``earliest`` and finish by ``latest``
    (exclusive step index, relative to the scheduling horizon).
    """

    name: str
    profile: tuple[float, ...]
    earliest: int
    latest: int

    @property
    def duration(self) -> int:
        return len(self.profile)

    @property
    def energy_kwh(self) -> float:
        return float(sum(self.profile)) * 0.25

    def candidate_starts(self, horizon: int) -> range:
        if self.duration == 0 or any(p < 0 for p in self.profile):
            raise InfeasibleWindow(f"{self.name}: profile must be non-empty and non-negative")
        lo, hi = self.earliest, self.latest - self.duration
        if lo < 0 or self.latest > horizon or hi < lo:
            raise InfeasibleWindow(
                f"{self.name}: {self.duration}-step run does not fit in [{self.earliest}, {self.latest}) "
                f"of a {horizon}-step horizon"
            )
        return range(lo, hi + 1)


@dataclass
class LoadSet:
    shiftable: list[ShiftableLoad] = field(default_factory=list)
    non_shiftable: list[np.ndarray] = field(default_factory=list)  # includes HVAC
    interruptible: list[np.ndarray] = field(default_factory=list)  # metered, detector-cleaned

    def base_profile(self, horizon: int) -> np.ndarray:
        base = np.zeros(horizon)
        for p in (*self.non_shiftable, *self.interruptible):
            p = np.asarray(p, dtype=float)
            if len(p) != horizon or np.any(p < 0):
                raise ValueError("fixed load profiles must be non-negative and span the horizon")
            base += p
        return base

"""Synthetic fleet of households standing in for private smart-meter data.

Each household gets five resource channels (kWh per 15 minutes), a rooftop
PV trace, an HVAC profile, a daily list of shiftable appliance runs and EV
trip consumption. Channels share daily drivers (cold mornings push heating
and gas, showers push water, hot water and gas) so the resources are
correlated the way a real dwelling's would be.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from meterguard.data.types import RESOURCES, STEPS_PER_DAY, ResourceKind, ResourceSeries, SeriesSet
from meterguard.power.loads import ShiftableLoad

DEFAULT_START = "2024-01-01T00:00:00"

# name, kW, steps, earliest hour, latest hour, probability of running on a day
APPLIANCES = (
    ("washer", 1.0, 4, 7, 22, 0.6),
    ("dishwasher", 1.2, 6, 12, 24, 0.8),
    ("dryer", 2.0, 4, 9, 23, 0.4),
)


@dataclass
class SyntheticDataset:
    series: SeriesSet  # clean readings
    pv_kw: dict[int, np.ndarray]
    hvac_kw: dict[int, np.ndarray]
    shiftable: dict[int, list[list[ShiftableLoad]]]  # household -> day -> loads
    ev_trip_soc: dict[int, np.ndarray]  # household -> per-day SOC used while away
    start: np.datetime64
    days: int
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def household_ids(self) -> list[int]:
        return sorted(self.pv_kw)

    @property
    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(self.days * STEPS_PER_DAY) * np.timedelta64(15, "m")


def _bump(tod: np.ndarray, center: np.ndarray | float, width: float) -> np.ndarray:
    d = (tod - center + 12.0) % 24.0 - 12.0  # wrap around midnight
    return np.exp(-0.5 * (d / width) ** 2)


def _household(rng: np.random.Generator, days: int):
    n = days * STEPS_PER_DAY
    tod = np.tile(np.arange(STEPS_PER_DAY) / 4.0, days)

    def daily(lo, hi):
        return np.repeat(rng.uniform(lo, hi, days), STEPS_PER_DAY)

    scale = rng.uniform(0.88, 1.15, 5)
    shift = daily(-0.4, 0.4)
    cold = daily(0.7, 1.3)
    shower_m = daily(0.6, 1.2)
    shower_e = daily(0.5, 1.1)
    evening = daily(0.8, 1.2)

    heating = 0.30 + 0.10 * cold * np.cos(2 * np.pi * (tod - 4.0) / 24.0)
    heating += 0.08 * cold * _bump(tod, 6.5 + shift, 1.2) + 0.06 * cold * _bump(tod, 18.5 + shift, 1.5)
    hot_water = 0.06 + 0.22 * shower_m * _bump(tod, 7.2 + shift, 0.7) + 0.16 * shower_e * _bump(tod, 21.0 + shift, 0.8)
    water = 0.05 + 0.08 * shower_m * _bump(tod, 7.2 + shift, 0.7) + 0.06 * shower_e * _bump(tod, 21.0 + shift, 0.8)
    water += 0.03 * _bump(tod, 12.5 + shift, 1.5)
    cooking = 0.10 * evening * _bump(tod, 18.5 + shift, 0.7) + 0.04 * _bump(tod, 12.5 + shift, 0.6)
    gas = 0.06 + 0.5 * heating + 0.5 * hot_water + cooking
    electric = 0.20 + 0.14 * _bump(tod, 7.5 + shift, 0.9) + 0.34 * evening * _bump(tod, 20.0 + shift, 1.4)
    electric += 0.04 * _bump(tod, 13.0 + shift, 2.0)

    channels = {
        ResourceKind.GAS: gas,
        ResourceKind.ELECTRIC: electric,
        ResourceKind.WATER: water,
        ResourceKind.HEATING: heating,
        ResourceKind.HOT_WATER: hot_water,
    }
    values = {}
    for r in RESOURCES:
        noisy = scale[r] * channels[r] * (1.0 + 0.05 * rng.standard_normal(n))
        values[r] = np.maximum(noisy, 0.005)

    # PV: winter bell between ~08:00 and 16:30, day-level cloudiness
    capacity = rng.uniform(2.0, 4.0)
    sun = np.clip(np.sin(np.pi * (tod - 8.0) / 8.5), 0.0, None) ** 1.5
    sun[(tod < 8.0) | (tod > 16.5)] = 0.0
    pv = capacity * sun * daily(0.3, 1.0)

    hvac_scale = rng.uniform(0.8, 1.2)
    hvac = hvac_scale * (0.3 + 0.6 * _bump(tod, 7.0, 1.2) + 0.8 * _bump(tod, 19.5, 2.0))

    shiftable = []
    for _ in range(days):
        todays = []
        for name, kw, steps, lo, hi, prob in APPLIANCES:
            if rng.random() < prob:
                todays.append(ShiftableLoad(name, (kw,) * steps, lo * 4, hi * 4))
        shiftable.append(todays)
    ev_trip = rng.uniform(0.08, 0.25, days)
    return values, pv, hvac, shiftable, ev_trip


def generate_synthetic(seed: int, households: int, days: int, start: str = DEFAULT_START) -> SyntheticDataset:
    """Build a deterministic fleet; household ``h`` draws from its own stream."""
    if households < 1 or days < 1:
        raise ValueError("households and days must be at least 1")
    start_ts = np.datetime64(start, "s")
    series = {}
    pv, hvac, shift, trips = {}, {}, {}, {}
    for h in range(households):
        rng = np.random.default_rng([seed, h])
        values, pv[h], hvac[h], shift[h], trips[h] = _household(rng, days)
        for r in RESOURCES:
            s = ResourceSeries.regular(h, r, start_ts, values[r])
            series[s.key] = s
    return SyntheticDataset(
        series=series,
        pv_kw=pv,
        hvac_kw=hvac,
        shiftable=shift,
        ev_trip_soc=trips,
        start=start_ts,
        days=days,
        seed=seed,
    )

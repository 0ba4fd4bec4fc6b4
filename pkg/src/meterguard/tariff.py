"""Three-part demand-response price: time-of-use + progressive tier + climate charge.

Time-of-use bands are half-open on the left and closed on the right,
``(start, end]`` in hours of the day, and may wrap past midnight. A 15-minute
billing step is priced at its end instant, so the interval (09:00, 09:15]
is mid-peak while (08:45, 09:00] is still off-peak.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from meterguard.errors import MisalignedSeries, ValidationError

DAY = 86400
STEP_SECONDS = 900

# (start hour, end hour, $/kWh)
DEFAULT_TOU = (
    (23.0, 9.0, 0.06),
    (9.0, 10.0, 0.12),
    (10.0, 12.0, 0.18),
    (12.0, 13.0, 0.12),
    (13.0, 17.0, 0.18),
    (17.0, 23.0, 0.12),
)
# (upper bound kWh inclusive or None, $/kWh)
DEFAULT_TIERS = ((300.0, 0.008), (450.0, 0.018), (None, 0.027))


@dataclass(frozen=True)
class TariffConfig:
    tou_bands: tuple = DEFAULT_TOU
    tiers: tuple = DEFAULT_TIERS
    r_rps: float = 0.005
    r_ets: float = 0.003
    r_cgr: float = 0.002
    export_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tou_bands", tuple(tuple(b) for b in self.tou_bands))
        object.__setattr__(self, "tiers", tuple(tuple(t) for t in self.tiers))
        for name in ("r_rps", "r_ets", "r_cgr", "export_rate"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if any(rate < 0 for *_, rate in self.tou_bands) or any(rate < 0 for _, rate in self.tiers):
            raise ValidationError("rates must be non-negative")
        _check_partition(self.tou_bands)
        bounds = [u for u, _ in self.tiers[:-1]]
        if not self.tiers or self.tiers[-1][0] is not None or any(u is None for u in bounds):
            raise ValidationError("tiers need finite upper bounds and an open last tier")
        if any(b <= a for a, b in zip(bounds, bounds[1:])) or (bounds and bounds[0] < 0):
            raise ValidationError("tier thresholds must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "tou_bands": [list(b) for b in self.tou_bands],
            "tiers": [list(t) for t in self.tiers],
            "r_rps": self.r_rps,
            "r_ets": self.r_ets,
            "r_cgr": self.r_cgr,
            "export_rate": self.export_rate,
        }


def _band_seconds(band) -> tuple[int, int]:
    a, b, _ = band
    return int(round(a * 3600)) % DAY, int(round(b * 3600)) % DAY


def _in_band(s: int, a: int, b: int) -> bool:
    if a < b:
        return a < s <= b
    return s > a or s <= b  # wraps midnight (a == b would cover the whole day)


def _check_partition(bands) -> None:
    if not bands:
        raise ValidationError("at least one ToU band is required")
    spans = [_band_seconds(b) for b in bands]
    total = sum((b - a) % DAY or DAY for a, b in spans)
    if total != DAY:
        raise ValidationError(f"ToU bands cover {total / 3600:g} h, not 24 h")
    cuts = sorted({x for ab in spans for x in ab})
    probes = [(c + 1) % DAY for c in cuts]  # one second past every boundary
    for p in probes:
        hits = sum(_in_band(p, a, b) for a, b in spans)
        if hits != 1:
            raise ValidationError("ToU bands overlap or leave a gap")


def seconds_of_day(t) -> int:
    """Accepts datetime/time, numpy datetime64, 'HH:MM[:SS]' strings or hours as float."""
    if isinstance(t, dt.datetime):
        return t.hour * 3600 + t.minute * 60 + t.second
    if isinstance(t, dt.time):
        return t.hour * 3600 + t.minute * 60 + t.second
    if isinstance(t, np.datetime64):
        s = t.astype("datetime64[s]")
        return int((s - s.astype("datetime64[D]")).astype(np.int64))
    if isinstance(t, str):
        parts = [int(p) for p in t.split(":")]
        parts += [0] * (3 - len(parts))
        return (parts[0] * 3600 + parts[1] * 60 + parts[2]) % DAY
    return int(round(float(t) * 3600)) % DAY


def tou_rate(t, config: TariffConfig | None = None) -> float:
    config = config or TariffConfig()
    s = seconds_of_day(t)
    for band in config.tou_bands:
        if _in_band(s, *_band_seconds(band)):
            return band[2]
    raise AssertionError("validated bands always match")


def progressive_rate(pw_total: float, config: TariffConfig | None = None) -> float:
    config = config or TariffConfig()
    if pw_total < 0:
        raise ValidationError("cumulative consumption cannot be negative")
    for upper, rate in config.tiers:
        if upper is None or pw_total <= upper:
            return rate
    raise AssertionError("last tier is open")


def ccec_rate(config: TariffConfig | None = None) -> float:
    config = config or TariffConfig()
    return config.r_rps + config.r_ets + config.r_cgr


@dataclass
class BillingState:
    pw_total: float = 0.0
    period_start: np.datetime64 | None = None

    def add(self, kwh: float) -> None:
        if kwh < 0:
            raise ValidationError("billed energy must be non-negative")
        self.pw_total += kwh


def dr_price(t, billing: BillingState | float, config: TariffConfig | None = None) -> float:
    """Sum of the three per-kWh components at time ``t`` and cumulative usage."""
    config = config or TariffConfig()
    pw_total = billing.pw_total if isinstance(billing, BillingState) else float(billing)
    return tou_rate(t, config) + progressive_rate(pw_total, config) + ccec_rate(config)


def _month(ts: np.datetime64) -> np.datetime64:
    return ts.astype("datetime64[M]")


@dataclass
class Bill:
    total: float
    prices: np.ndarray  # $/kWh applied at each step
    import_cost: float
    export_credit: float
    billed_kwh: float
    periods: list = field(default_factory=list)


def compute_bill(net_kwh, timestamps, config: TariffConfig | None = None) -> Bill:
    """Bill a series of net grid energy per 15-minute step.

    Imports are charged at the DR price given the usage accumulated before the
    step; ``pw_total`` resets when a calendar month starts. Exports are
    credited at ``export_rate``.
    """
    config = config or TariffConfig()
    net = np.asarray(net_kwh, dtype=float)
    ts = np.asarray(timestamps).astype("datetime64[s]")
    if len(net) != len(ts):
        raise MisalignedSeries(f"{len(net)} energies for {len(ts)} timestamps")
    if len(ts) and np.any(ts.astype(np.int64) % STEP_SECONDS):
        raise MisalignedSeries("timestamps are not on the 15-minute grid")
    if len(ts) > 1 and np.any(np.diff(ts) != np.timedelta64(STEP_SECONDS, "s")):
        raise MisalignedSeries("timestamps are not consecutive 15-minute steps")
    state = BillingState()
    prices = np.empty(len(net))
    total = import_cost = export_credit = 0.0
    periods = []
    ccec = ccec_rate(config)
    step = np.timedelta64(STEP_SECONDS, "s")
    for k in range(len(net)):
        if state.period_start is None or _month(ts[k]) != state.period_start:
            if state.period_start is not None:
                periods.append((str(state.period_start), state.pw_total))
            state = BillingState(0.0, _month(ts[k]))
        price = tou_rate(ts[k] + step, config) + progressive_rate(state.pw_total, config) + ccec
        prices[k] = price
        e = net[k]
        if e > 0:
            cost = e * price
            import_cost += cost
            total += cost
            state.add(e)
        elif e < 0:
            credit = -e * config.export_rate
            export_credit += credit
            total -= credit
    if state.period_start is not None:
        periods.append((str(state.period_start), state.pw_total))
    billed = float(np.sum(np.maximum(net, 0.0)))
    return Bill(total, prices, import_cost, export_credit, billed, periods)


def price_trace(timestamps, pw_total: float, config: TariffConfig | None = None) -> np.ndarray:
    """DR price per step at a fixed cumulative usage (used for day-ahead scheduling)."""
    config = config or TariffConfig()
    step = np.timedelta64(STEP_SECONDS, "s")
    ts = np.asarray(timestamps).astype("datetime64[s]")
    base = progressive_rate(pw_total, config) + ccec_rate(config)
    return np.array([tou_rate(t + step, config) + base for t in ts])

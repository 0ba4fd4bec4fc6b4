"""Battery and EV state of charge."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from meterguard.errors import UnavailableUnit, ValidationError

DT_HOURS = 0.25
_POWER_TOL = 1e-9


class DispatchMode(enum.IntEnum):
    DISCHARGE = -1
    IDLE = 0
    CHARGE = 1


class StorageKind(str, enum.Enum):
    BSS = "bss"
    EV = "ev"


def in_window(hour: float, start: float, end: float) -> bool:
    """``start <= hour < end`` on a 24 h clock; windows may wrap midnight."""
    hour %= 24.0
    if start <= end:
        return start <= hour < end
    return hour >= start or hour < end


@dataclass(frozen=True)
class StorageUnit:
    kind: StorageKind
    capacity: float  # kWh
    soc: float
    soc_min: float = 0.2
    soc_max: float = 0.9
    p_charge_max: float = 3.0  # kW
    p_discharge_max: float = 3.0
    efficiency: float = 0.95
    availability: tuple[tuple[float, float], ...] | None = None  # None: always plugged in
    desired_soc: float | None = None
    deadline_hour: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StorageKind(self.kind))
        if self.availability is not None:
            object.__setattr__(self, "availability", tuple(tuple(w) for w in self.availability))
        if self.capacity <= 0:
            raise ValidationError("capacity must be positive")
        if not 0.0 <= self.soc_min < self.soc_max <= 1.0:
            raise ValidationError("need 0 <= soc_min < soc_max <= 1")
        if not self.soc_min <= self.soc <= self.soc_max:
            raise ValidationError(f"soc {self.soc} outside [{self.soc_min}, {self.soc_max}]")
        if self.p_charge_max < 0 or self.p_discharge_max < 0:
            raise ValidationError("power limits must be non-negative")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValidationError("efficiency must be in (0, 1]")
        if (self.desired_soc is None) != (self.deadline_hour is None):
            raise ValidationError("desired_soc and deadline_hour go together")
        if self.desired_soc is not None and not self.soc_min <= self.desired_soc <= self.soc_max:
            raise ValidationError("desired_soc must lie within the soc bounds")

    @classmethod
    def bss(cls, soc: float = 0.5, capacity: float = 10.0, **kw) -> "StorageUnit":
        return cls(StorageKind.BSS, capacity, soc, **kw)

    @classmethod
    def ev(cls, soc: float = 0.8, capacity: float = 40.0, **kw) -> "StorageUnit":
        kw.setdefault("availability", ((19.0, 8.0),))
        kw.setdefault("desired_soc", 0.8)
        kw.setdefault("deadline_hour", 8.0)
        return cls(StorageKind.EV, capacity, soc, **kw)

    def available(self, hour: float | None) -> bool:
        if self.availability is None or hour is None:
            return True
        return any(in_window(hour, a, b) for a, b in self.availability)

    def with_soc(self, soc: float) -> "StorageUnit":
        return replace(self, soc=soc)

    def energy_kwh(self) -> float:
        return self.soc * self.capacity


def deliverable(unit: StorageUnit, mode: DispatchMode | int, power: float, dt: float = DT_HOURS) -> float:
    """Largest power not above ``power`` that keeps the SOC inside its bounds."""
    mode = DispatchMode(mode)
    if mode == DispatchMode.IDLE or power <= 0:
        return 0.0
    if mode == DispatchMode.CHARGE:
        room = (unit.soc_max - unit.soc) * unit.capacity / (dt * unit.efficiency)
    else:
        room = (unit.soc - unit.soc_min) * unit.capacity * unit.efficiency / dt
    return min(power, max(room, 0.0))


def soc_step(
    unit: StorageUnit,
    mode: DispatchMode | int,
    power: float,
    dt: float = DT_HOURS,
    hour: float | None = None,
) -> tuple[StorageUnit, float]:
    """Advance the SOC by one step; returns the new unit and the power actually delivered.

    Charging stores ``power * dt * efficiency``, discharging draws
    ``power * dt / efficiency`` from the cell. A request that would cross a
    bound lands exactly on it and the reported power shrinks to match.
    """
    mode = DispatchMode(mode)
    if mode == DispatchMode.IDLE:
        return unit, 0.0
    if hour is not None and not unit.available(hour):
        raise UnavailableUnit(f"{unit.kind.value} is not plugged in at hour {hour:g}")
    limit = unit.p_charge_max if mode == DispatchMode.CHARGE else unit.p_discharge_max
    if power < 0 or power > limit + _POWER_TOL:
        raise ValidationError(f"power {power} kW outside [0, {limit}]")
    if mode == DispatchMode.CHARGE:
        soc = unit.soc + power * dt * unit.efficiency / unit.capacity
        if soc >= unit.soc_max:
            return unit.with_soc(unit.soc_max), deliverable(unit, mode, power, dt)
    else:
        soc = unit.soc - power * dt / (unit.efficiency * unit.capacity)
        if soc <= unit.soc_min:
            return unit.with_soc(unit.soc_min), deliverable(unit, mode, power, dt)
    return unit.with_soc(soc), float(power)


def steps_until(hour: float, deadline: float, dt: float = DT_HOURS) -> int:
    """Whole steps from the step starting at ``hour`` up to ``deadline`` (wrapping midnight)."""
    span = (deadline - hour) % 24.0
    return int(round(span / dt))


def must_charge(unit: StorageUnit, hour: float | None, dt: float = DT_HOURS) -> bool:
    """Deadline guard: True when skipping this step would make the target SOC unreachable."""
    if unit.desired_soc is None or hour is None or not unit.available(hour):
        return False
    short = unit.desired_soc - unit.soc
    if short <= 1e-12:
        return False
    per_step = unit.p_charge_max * dt * unit.efficiency / unit.capacity
    left = steps_until(hour, unit.deadline_hour, dt)
    return short > per_step * (left - 1) + 1e-12

"""Per-step supply dispatch: PV first, then storage, grid covers the rest."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from meterguard.errors import EmptySeries, ValidationError
from meterguard.power.storage import DT_HOURS, DispatchMode, StorageUnit, deliverable, must_charge, soc_step


class Rule(str, enum.Enum):
    CONVENTIONAL = "conventional"
    PROPOSED = "proposed"


@dataclass(frozen=True)
class SupplyFrame:
    """What the controller believes about one step (powers in kW)."""

    pw_grid: float  # measured pre-storage demand; 0 when the reading is missing
    pw_pv: float
    pw_max: float = 4.0
    pw_grid_hat: float = 0.0  # detector reconstruction of the same quantity
    o_lstm: int = 1

    def __post_init__(self):
        for name in ("pw_grid", "pw_pv", "pw_max", "pw_grid_hat"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be finite and non-negative, got {v}")
        if self.o_lstm not in (0, 1):
            raise ValidationError("o_lstm must be 0 or 1")


def _decide(load: float, frame: SupplyFrame, unit: StorageUnit) -> DispatchMode:
    net = load - frame.pw_pv
    if net > frame.pw_max and unit.soc > unit.soc_min:
        return DispatchMode.DISCHARGE
    if net < frame.pw_max and unit.soc < unit.soc_max:
        return DispatchMode.CHARGE
    return DispatchMode.IDLE


def believed_load(frame: SupplyFrame, rule: Rule | str) -> float:
    if Rule(rule) == Rule.CONVENTIONAL:
        return frame.pw_grid
    return max(frame.pw_grid * frame.o_lstm, frame.pw_grid_hat)


def conventional_mode(frame: SupplyFrame, unit: StorageUnit) -> DispatchMode:
    return _decide(frame.pw_grid, frame, unit)


def proposed_mode(frame: SupplyFrame, unit: StorageUnit) -> DispatchMode:
    """Same thresholds, but a flagged reading is replaced by the reconstruction."""
    return _decide(believed_load(frame, Rule.PROPOSED), frame, unit)


RULES = {Rule.CONVENTIONAL: conventional_mode, Rule.PROPOSED: proposed_mode}


@dataclass(frozen=True)
class DispatchResult:
    bss: StorageUnit
    ev: StorageUnit
    mode_bss: DispatchMode
    mode_ev: DispatchMode
    pw_bss: float  # realized magnitude, kW
    pw_ev: float
    pw_grid: float  # realized grid import
    pv_used: float
    pv_export: float
    o_grid: int
    o_pv: int
    objective: float  # grid*o_grid - pv_used*o_pv + bss*O_bss + ev*O_ev
    load: float

    @property
    def storage_kw(self) -> float:
        """Net storage draw: positive while charging."""
        return self.pw_bss * self.mode_bss + self.pw_ev * self.mode_ev

    def balance_residual(self) -> float:
        charge = sum(p for p, m in ((self.pw_bss, self.mode_bss), (self.pw_ev, self.mode_ev)) if m > 0)
        discharge = sum(p for p, m in ((self.pw_bss, self.mode_bss), (self.pw_ev, self.mode_ev)) if m < 0)
        return self.load + charge - (self.pv_used + discharge + self.pw_grid)


def dispatch_supply(
    frame: SupplyFrame,
    bss: StorageUnit,
    ev: StorageUnit,
    rule: Rule | str = Rule.CONVENTIONAL,
    *,
    hour: float | None = None,
    load: float | None = None,
    dt: float = DT_HOURS,
) -> DispatchResult:
    """Decide modes from the controller's belief, then settle the step physically.

    Magnitudes follow the belief: a discharging unit covers the believed
    residual load, a charging unit fills the headroom below ``pw_max``; the
    battery is served before the EV. ``load`` is the true demand (defaults to
    ``frame.pw_grid``); storage never discharges past it, so nothing is exported
    from the cells.
    """
    rule = Rule(rule)
    g = believed_load(frame, rule)
    decide = RULES[rule]
    net_belief = g - frame.pw_pv
    load = frame.pw_grid if load is None else float(load)
    if load < 0 or not np.isfinite(load):
        raise ValidationError("load must be finite and non-negative")

    modes, requests = [], []
    used_dis = used_ch = 0.0
    for unit in (bss, ev):
        if not unit.available(hour):
            modes.append(DispatchMode.IDLE)
            requests.append(0.0)
            continue
        if unit is ev and must_charge(unit, hour, dt):
            mode, want = DispatchMode.CHARGE, unit.p_charge_max
        else:
            mode = decide(frame, unit)
            if mode == DispatchMode.DISCHARGE:
                want = min(unit.p_discharge_max, max(net_belief - used_dis, 0.0))
            elif mode == DispatchMode.CHARGE:
                want = min(unit.p_charge_max, max(frame.pw_max - net_belief - used_ch, 0.0))
            else:
                want = 0.0
        p = deliverable(unit, mode, want, dt)
        if mode == DispatchMode.DISCHARGE:
            used_dis += p
        elif mode == DispatchMode.CHARGE:
            used_ch += p
        modes.append(mode)
        requests.append(p)

    # physical settlement: discharge only what the real demand can absorb
    charge = sum(p for p, m in zip(requests, modes) if m == DispatchMode.CHARGE)
    room = max(load + charge - frame.pw_pv, 0.0)
    for k, m in enumerate(modes):
        if m == DispatchMode.DISCHARGE:
            requests[k] = min(requests[k], room)
            room -= requests[k]

    new_units, powers = [], []
    for unit, m, p in zip((bss, ev), modes, requests):
        u, actual = soc_step(unit, m, p, dt, hour if m != DispatchMode.IDLE else None)
        new_units.append(u)
        powers.append(actual)

    charge = sum(p for p, m in zip(powers, modes) if m == DispatchMode.CHARGE)
    discharge = sum(p for p, m in zip(powers, modes) if m == DispatchMode.DISCHARGE)
    demand = load + charge
    pv_used = min(frame.pw_pv, demand)
    grid = max(demand - pv_used - discharge, 0.0)
    o_grid = int(grid > 0)
    o_pv = int(frame.pw_pv > 0)
    objective = grid * o_grid - pv_used * o_pv + powers[0] * int(modes[0]) + powers[1] * int(modes[1])
    return DispatchResult(
        bss=new_units[0],
        ev=new_units[1],
        mode_bss=modes[0],
        mode_ev=modes[1],
        pw_bss=powers[0],
        pw_ev=powers[1],
        pw_grid=grid,
        pv_used=pv_used,
        pv_export=frame.pw_pv - pv_used,
        o_grid=o_grid,
        o_pv=o_pv,
        objective=objective,
        load=load,
    )


def peak_load(total) -> float:
    """Maximum of a (fleet-average) power series."""
    total = np.asarray(total, dtype=float)
    if total.size == 0:
        raise EmptySeries("peak of an empty series")
    return float(np.max(total))

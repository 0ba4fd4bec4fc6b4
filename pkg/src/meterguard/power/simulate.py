"""Step-by-step household simulation: schedule each day, then dispatch each step."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from meterguard.data.types import STEP_HOURS, STEPS_PER_DAY
from meterguard.errors import MisalignedSeries, ValidationError
from meterguard.power.dispatch import Rule, SupplyFrame, dispatch_supply
from meterguard.power.loads import ShiftableLoad
from meterguard.power.scheduler import SchedulerConfig, schedule_shiftable, shift_profile
from meterguard.power.storage import StorageUnit
from meterguard.tariff import TariffConfig, compute_bill, price_trace


@dataclass(frozen=True)
class StorageConfig:
    bss_capacity: float = 10.0
    ev_capacity: float = 40.0
    efficiency: float = 0.95
    soc_min: float = 0.2
    soc_max: float = 0.9
    p_charge_max: float = 3.0
    p_discharge_max: float = 3.0
    bss_soc0: float = 0.5
    ev_soc0: float = 0.8
    ev_window: tuple[float, float] = (19.0, 8.0)
    ev_desired_soc: float = 0.8
    ev_deadline: float = 8.0
    pw_max: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "ev_window", tuple(self.ev_window))
        if self.pw_max < 0:
            raise ValidationError("pw_max must be non-negative")
        self.make_bss()
        self.make_ev()

    def _common(self) -> dict:
        return dict(
            soc_min=self.soc_min,
            soc_max=self.soc_max,
            p_charge_max=self.p_charge_max,
            p_discharge_max=self.p_discharge_max,
            efficiency=self.efficiency,
        )

    def make_bss(self) -> StorageUnit:
        return StorageUnit.bss(self.bss_soc0, self.bss_capacity, **self._common())

    def make_ev(self) -> StorageUnit:
        return StorageUnit.ev(
            self.ev_soc0,
            self.ev_capacity,
            availability=(self.ev_window,),
            desired_soc=self.ev_desired_soc,
            deadline_hour=self.ev_deadline,
            **self._common(),
        )


@dataclass
class HouseholdInputs:
    """Everything one household's controller and plant need, in kW per step.

    ``measured_kw`` is the electric reading as metered (NaN when missing).
    ``cleaned_kw`` is the detector-imputed version and ``o_lstm`` its per-step
    verdict; both are None when no detector runs. The metered electric profile
    is the household's interruptible load: raw readings (missing as 0) without
    a detector, the cleaned profile with one.
    """

    household_id: int
    timestamps: np.ndarray
    measured_kw: np.ndarray
    hvac_kw: np.ndarray
    pv_kw: np.ndarray
    shiftable: list[list[ShiftableLoad]]  # per day
    ev_trip_soc: np.ndarray  # per day
    cleaned_kw: np.ndarray | None = None
    o_lstm: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.timestamps)
        if (self.cleaned_kw is None) != (self.o_lstm is None):
            raise ValidationError("cleaned_kw and o_lstm come together")
        arrays = [self.measured_kw, self.hvac_kw, self.pv_kw]
        arrays += [a for a in (self.cleaned_kw, self.o_lstm) if a is not None]
        if any(len(a) != n for a in arrays):
            raise MisalignedSeries("household inputs differ in length")
        if n % STEPS_PER_DAY or len(self.shiftable) != n // STEPS_PER_DAY:
            raise MisalignedSeries("simulation runs whole days with one load list per day")


@dataclass
class HouseholdTrace:
    household_id: int
    grid_kw: np.ndarray  # realized import
    storage_kw: np.ndarray  # BSS + EV, positive while charging
    hvac_kw: np.ndarray
    appliance_kw: np.ndarray  # scheduled shiftable loads
    bss_soc: np.ndarray
    ev_soc: np.ndarray
    cost_usd: float
    balance_residual: float  # worst per-step energy-balance error
    starts: list[tuple[int, ...]] = field(default_factory=list)


def _hours(timestamps: np.ndarray) -> np.ndarray:
    ts = timestamps.astype("datetime64[s]")
    return (ts - ts.astype("datetime64[D]")).astype(np.int64) / 3600.0


def simulate_household(
    inputs: HouseholdInputs,
    rule: Rule | str,
    storage: StorageConfig | None = None,
    tariff: TariffConfig | None = None,
    scheduler: SchedulerConfig | None = None,
) -> HouseholdTrace:
    rule = Rule(rule)
    storage = storage or StorageConfig()
    tariff = tariff or TariffConfig()
    scheduler = scheduler or SchedulerConfig()
    n = len(inputs.timestamps)
    hours = _hours(inputs.timestamps)
    measured = np.nan_to_num(inputs.measured_kw, nan=0.0)
    if inputs.cleaned_kw is not None:
        interruptible, o_lstm = inputs.cleaned_kw, inputs.o_lstm.astype(int)
    elif rule == Rule.PROPOSED:
        raise ValidationError("the proposed rule needs detector output")
    else:
        interruptible, o_lstm = measured, np.ones(n, dtype=int)
    pv = inputs.pv_kw

    bss, ev = storage.make_bss(), storage.make_ev()
    grid = np.empty(n)
    stor = np.empty(n)
    appliances = np.empty(n)
    bss_soc = np.empty(n)
    ev_soc = np.empty(n)
    worst = 0.0
    starts = []
    month = None
    billed = 0.0
    for d in range(n // STEPS_PER_DAY):
        day = slice(d * STEPS_PER_DAY, (d + 1) * STEPS_PER_DAY)
        day_month = inputs.timestamps[day.start].astype("datetime64[M]")
        if day_month != month:
            month, billed = day_month, 0.0
        prices = price_trace(inputs.timestamps[day], billed, tariff)
        loads = inputs.shiftable[d]
        plan = schedule_shiftable(
            loads, STEPS_PER_DAY, prices, pv[day], interruptible[day] + inputs.hvac_kw[day], scheduler
        )
        starts.append(plan.starts)
        appliances[day] = shift_profile(loads, plan.starts, STEPS_PER_DAY)
        for t in range(day.start, day.stop):
            if hours[t] == storage.ev_window[0]:  # the car comes home
                used = float(inputs.ev_trip_soc[d])
                ev = ev.with_soc(max(ev.soc - used, ev.soc_min))
            fixed = inputs.hvac_kw[t] + appliances[t]
            frame = SupplyFrame(
                pw_grid=measured[t] + fixed,
                pw_pv=pv[t],
                pw_max=storage.pw_max,
                pw_grid_hat=interruptible[t] + fixed,
                o_lstm=int(o_lstm[t]),
            )
            res = dispatch_supply(frame, bss, ev, rule, hour=hours[t], load=interruptible[t] + fixed)
            bss, ev = res.bss, res.ev
            grid[t] = res.pw_grid
            stor[t] = res.storage_kw
            bss_soc[t] = bss.soc
            ev_soc[t] = ev.soc
            worst = max(worst, abs(res.balance_residual()))
            billed += res.pw_grid * STEP_HOURS
    bill = compute_bill(grid * STEP_HOURS, inputs.timestamps, tariff)
    return HouseholdTrace(
        household_id=inputs.household_id,
        grid_kw=grid,
        storage_kw=stor,
        hvac_kw=np.asarray(inputs.hvac_kw, dtype=float).copy(),
        appliance_kw=appliances,
        bss_soc=bss_soc,
        ev_soc=ev_soc,
        cost_usd=bill.total,
        balance_residual=worst,
        starts=starts,
    )

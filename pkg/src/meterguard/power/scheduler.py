"""Day-ahead start-time selection for shiftable appliances.

Objective for a set of start times::

    J = alpha * max_t (total_t - pv_t)+  +  beta * sum_t (total_t - pv_t)+ * price_t * dt

Small instances are solved by enumeration; larger ones by greedy insertion
followed by first-improvement local search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from meterguard.errors import ValidationError
from meterguard.power.loads import LoadSet, ShiftableLoad
from meterguard.power.storage import DT_HOURS

EXHAUSTIVE_LIMIT = 10_000
_TOL = 1e-12


@dataclass(frozen=True)
class SchedulerConfig:
    alpha: float = 1.0  # weight on peak kW
    beta: float = 1.0  # weight on $
    exhaustive_limit: int = EXHAUSTIVE_LIMIT
    pair_moves: bool = True

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("objective weights must be non-negative")
        if self.exhaustive_limit < 1:
            raise ValidationError("exhaustive_limit must be at least 1")


@dataclass(frozen=True)
class Schedule:
    starts: tuple[int, ...]
    objective: float
    method: str

    def profile(self, loads: list[ShiftableLoad], horizon: int) -> np.ndarray:
        return shift_profile(loads, self.starts, horizon)


def shift_profile(loads, starts, horizon: int) -> np.ndarray:
    out = np.zeros(horizon)
    for load, s in zip(loads, starts):
        out[s : s + load.duration] += load.profile
    return out


class _Problem:
    def __init__(self, loads, base, pv, prices, config, dt):
        self.loads = loads
        self.base = base
        self.pv = pv
        self.prices = prices * dt
        self.alpha, self.beta = config.alpha, config.beta
        self.horizon = len(base)
        self.candidates = [list(ld.candidate_starts(self.horizon)) for ld in loads]
        self.profiles = [np.asarray(ld.profile, dtype=float) for ld in loads]

    def value(self, starts) -> float:
        # profiles are always added in load-index order, so equal schedules give equal bits
        net = self.base - self.pv
        if any(s is not None for s in starts):
            net = net.copy()
            for prof, s in zip(self.profiles, starts):
                if s is not None:
                    net[s : s + len(prof)] += prof
        pos = np.maximum(net, 0.0)
        return self.alpha * float(pos.max()) + self.beta * float(pos @ self.prices)


def objective(loads, starts, base, pv, prices, alpha: float = 1.0, beta: float = 1.0, dt: float = DT_HOURS) -> float:
    return _Problem(list(loads), *_arrays(base, pv, prices), SchedulerConfig(alpha, beta), dt).value(list(starts))


def _arrays(base, pv, prices):
    base = np.asarray(base, dtype=float)
    pv = np.zeros_like(base) if pv is None else np.asarray(pv, dtype=float)
    prices = np.asarray(prices, dtype=float)
    if not (base.shape == pv.shape == prices.shape) or base.ndim != 1:
        raise ValidationError("base load, pv and prices must be 1-D and equally long")
    return base, pv, prices


def _exhaustive(p: _Problem) -> tuple[list[int], float]:
    best, best_j = None, math.inf
    for combo in itertools.product(*p.candidates):  # lexicographic: earliest starts first
        j = p.value(combo)
        if j < best_j - _TOL:
            best, best_j = list(combo), j
    return best, best_j


def _greedy(p: _Problem) -> list[int]:
    order = sorted(range(len(p.loads)), key=lambda i: (-p.loads[i].energy_kwh, i))
    starts: list[int | None] = [None] * len(p.loads)
    for i in order:
        best, best_j = None, math.inf
        for s in p.candidates[i]:
            starts[i] = s
            j = p.value(starts)
            if j < best_j - _TOL:
                best, best_j = s, j
        starts[i] = best
    return starts


def _improve(p: _Problem, starts: list[int], pair_moves: bool) -> tuple[list[int], float]:
    """First-improvement descent; single-load moves, then joint moves of two loads."""
    current = p.value(starts)
    n = len(starts)
    while True:
        moved = False
        for i in range(n):
            for s in p.candidates[i]:
                if s == starts[i]:
                    continue
                trial = starts.copy()
                trial[i] = s
                j = p.value(trial)
                if j < current - _TOL:
                    starts, current, moved = trial, j, True
                    break
            if moved:
                break
        if moved:
            continue
        if pair_moves:
            for i, k in itertools.combinations(range(n), 2):
                for si, sk in itertools.product(p.candidates[i], p.candidates[k]):
                    if si == starts[i] and sk == starts[k]:
                        continue
                    trial = starts.copy()
                    trial[i], trial[k] = si, sk
                    j = p.value(trial)
                    if j < current - _TOL:
                        starts, current, moved = trial, j, True
                        break
                if moved:
                    break
        if not moved:
            return starts, current


def schedule_shiftable(
    loads: LoadSet | list[ShiftableLoad],
    horizon: int,
    prices,
    pv=None,
    base=None,
    config: SchedulerConfig | None = None,
    *,
    method: str = "auto",
    dt: float = DT_HOURS,
) -> Schedule:
    """Pick a start step for every shiftable load.

    ``base`` defaults to the fixed profiles of a :class:`LoadSet` (zeros for a
    plain list). ``method`` is "auto", "exhaustive" or "heuristic".
    """
    config = config or SchedulerConfig()
    if isinstance(loads, LoadSet):
        shiftable = list(loads.shiftable)
        base = loads.base_profile(horizon) if base is None else base
    else:
        shiftable = list(loads)
    base = np.zeros(horizon) if base is None else base
    base, pv, prices = _arrays(base, pv, prices)
    if len(base) != horizon:
        raise ValidationError(f"profiles have {len(base)} steps, horizon is {horizon}")
    p = _Problem(shiftable, base, pv, prices, config, dt)
    if not shiftable:
        return Schedule((), p.value([]), "empty")
    if method not in ("auto", "exhaustive", "heuristic"):
        raise ValidationError(f"unknown method {method!r}")
    size = math.prod(len(c) for c in p.candidates)
    if method == "exhaustive" or (method == "auto" and size <= config.exhaustive_limit):
        starts, j = _exhaustive(p)
        return Schedule(tuple(starts), j, "exhaustive")
    starts, j = _improve(p, _greedy(p), config.pair_moves)
    return Schedule(tuple(starts), j, "heuristic")

"""The eight acceptance criteria, each reported as one PASS/FAIL line.

Run on its own with ``python3 -m pytest tests/test_acceptance.py -v``; the
lines appear in the terminal summary. Criteria 4 and 5 train the full-size
detectors (three variants, three seeds) and take several minutes.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE
from meterguard.config import DataConfig
from meterguard.data.wavelet import haar_dwt, haar_idwt
from meterguard.detector import confusion_metrics, roc_auc
from meterguard.nn.autoencoder import Variant, autoencoder_forward, init_model, loss_and_grads
from meterguard.nn.training import TrainConfig
from meterguard.power.dispatch import Rule, SupplyFrame, conventional_mode, proposed_mode
from meterguard.power.scheduler import SchedulerConfig, schedule_shiftable
from meterguard.power.storage import StorageUnit
from meterguard.scenario import (
    ScenarioConfig,
    build_reference,
    detect_fleet,
    prepare_training,
    run_scenario,
    train_detector,
)
from meterguard.tariff import DAY, TariffConfig, _band_seconds, _in_band, progressive_rate, tou_rate
from test_power import random_instance, run_day

# pinned tolerances and budgets
GRAD_TOL = 1e-4
AUC_TOL = 1e-12
AUC_FLOOR = 0.90
AUC_SLACK = 0.02
DWT_TOL = 1e-9
BALANCE_TOL = 1e-9

# first verified run of the reference scenarios; exact, no drift allowed
FROZEN = {
    1: {"peak_load_kw": 4.456863416515041, "electricity_cost_usd": 74.88481581025181},
    4: {"peak_load_kw": 4.0, "electricity_cost_usd": 74.3486995989689},
}


@contextmanager
def criterion(number: int, title: str, budget_s: float | None = None, already_s: float = 0.0):
    """Time the block (plus ``already_s`` spent in fixtures) and record one PASS/FAIL line."""
    t0 = time.perf_counter() - already_s
    status, detail = "FAIL", ""
    try:
        yield
        status = "PASS"
    except AssertionError as exc:
        detail = f" -- {str(exc).splitlines()[0]}" if str(exc) else ""
        raise
    finally:
        dt = time.perf_counter() - t0
        over = budget_s is not None and dt > budget_s
        if over and status == "PASS":
            status, detail = "FAIL", f" -- over the {budget_s:g} s budget"
        budget = f" / {budget_s:g} s" if budget_s is not None else ""
        ACCEPTANCE.append(f"[{status}] AC{number} {title} ({dt:.2f} s{budget}){detail}")
        if over:
            pytest.fail(f"criterion {number} took {dt:.1f} s, budget {budget_s:g} s")


# ----------------------------------------------------------------------------- 1


def test_ac1_gradient_check():
    with criterion(1, "gradients match central differences", 30):
        worst = 0.0
        for variant, seed in itertools.product(Variant, range(10)):
            hidden, window = 2 + seed % 3, 3 + seed % 2
            m = init_model(variant, hidden, window, seed=seed)
            x = np.random.default_rng(seed).normal(size=(2, window, 5))
            _, grads = loss_and_grads(m, x)

            def loss():  # forward pass only, so the numeric side never touches backprop
                return float(np.mean((autoencoder_forward(m, x) - x) ** 2))

            err = oracles.finite_difference_check(loss, m.params, grads, step=1e-5)
            worst = max(worst, err)
        assert worst <= GRAD_TOL, f"max relative error {worst:.2e}"


# ----------------------------------------------------------------------------- 2


def _unit(soc):
    u = StorageUnit("bss", 10.0, 0.5)
    object.__setattr__(u, "soc", float(soc))  # the grid probes states outside [soc_min, soc_max] too
    return u


def test_ac2_rule_table():
    with criterion(2, "rule table matches transcription on the exhaustive grid", 1):
        mismatches = cases = 0
        for delta, soc, o, hat in itertools.product(
            np.arange(-10, 11) * 0.5, np.round(np.arange(2, 20) * 0.05, 2), (0, 1), (0.0, 2.0, 6.0)
        ):
            g = 1.0 + max(delta, 0.0)
            pv = g - delta
            f = SupplyFrame(pw_grid=g, pw_pv=pv, pw_max=4.0, pw_grid_hat=hat, o_lstm=o)
            unit = _unit(soc)
            mismatches += conventional_mode(f, unit) != oracles.rule_table(g, pv, 4.0, soc, 0.2, 0.9)
            mismatches += proposed_mode(f, unit) != oracles.rule_table(g, pv, 4.0, soc, 0.2, 0.9, o, hat)
            cases += 1
        assert cases == 21 * 18 * 2 * 3
        assert mismatches == 0, f"{mismatches} mismatches"


# ----------------------------------------------------------------------------- 3


def test_ac3_tariff():
    with criterion(3, "tariff examples and 24 h band partition", 1):
        for t, rate in [("08:00", 0.06), ("09:00", 0.06), ("09:00:01", 0.12), ("11:00", 0.18), ("12:30", 0.12),
                        ("15:00", 0.18), ("20:00", 0.12), ("23:30", 0.06)]:
            assert tou_rate(t) == rate, t
        for total, rate in [(250, 0.008), (300, 0.008), (400, 0.018), (450, 0.018), (500, 0.027)]:
            assert progressive_rate(total) == rate, total
        cfg = TariffConfig()
        bands = [(_band_seconds(b), b[2]) for b in cfg.tou_bands]
        for s in range(DAY):
            hits = [rate for (a, b), rate in bands if _in_band(s, a, b)]
            assert len(hits) == 1, f"second {s} in {len(hits)} bands"


# ----------------------------------------------------------------------------- 4 and 5

REFERENCE = DataConfig()  # seed 42, 20 households, 14 days, 0.8 % anomalies
SEEDS = (0, 1, 2)


@pytest.fixture(scope="module")
def reference():
    return build_reference(REFERENCE)


@pytest.fixture(scope="module")
def trained(reference):
    t0 = time.perf_counter()
    training = prepare_training(reference.observed, REFERENCE)
    models = {(v, s): train_detector(v, training, TrainConfig(seed=s))[0] for s in SEEDS for v in Variant}
    return models, time.perf_counter() - t0


def test_ac4_detector_quality(reference, trained):
    models, train_s = trained
    with criterion(4, "detector AUC floor and variant ordering, training included", 600, train_s):
        auc = {
            key: detect_fleet(m, reference.observed, reference.truth).metrics.auc for key, m in models.items()
        }
        med = {v: float(np.median([auc[(v, s)] for s in SEEDS])) for v in Variant}
        summary = ", ".join(f"{v.value} {med[v]:.4f}" for v in Variant)
        ACCEPTANCE.append(f"      AC4 median AUC: {summary}; GCN-BiLSTM seed 0 {auc[(Variant.GCN_BILSTM, 0)]:.4f}")
        assert auc[(Variant.GCN_BILSTM, 0)] >= AUC_FLOOR, summary
        assert med[Variant.GCN_BILSTM] >= med[Variant.BILSTM] >= med[Variant.LSTM] - AUC_SLACK, summary


def test_ac5_scenario_direction(reference, trained):
    models, _ = trained
    variants = {2: Variant.LSTM, 3: Variant.BILSTM, 4: Variant.GCN_BILSTM}
    with criterion(5, "scenario 4 no worse than scenario 1; silent detectors reproduce scenario 1", 300):
        s1 = run_scenario(ScenarioConfig(1), reference)
        s4 = run_scenario(ScenarioConfig(4), reference, models[(Variant.GCN_BILSTM, 0)])
        ACCEPTANCE.append(
            f"      AC5 S1 peak {s1.peak_load_kw!r} kW cost {s1.electricity_cost_usd!r}; "
            f"S4 peak {s4.peak_load_kw!r} kW cost {s4.electricity_cost_usd!r}"
        )
        assert s4.peak_load_kw <= s1.peak_load_kw and s4.electricity_cost_usd <= s1.electricity_cost_usd
        for sid, r in ((1, s1), (4, s4)):
            assert r.peak_load_kw == FROZEN[sid]["peak_load_kw"], f"S{sid} peak drifted"
            assert r.electricity_cost_usd == FROZEN[sid]["electricity_cost_usd"], f"S{sid} cost drifted"

        clean = build_reference(DataConfig(outlier_rate=0.0, missing_rate=0.0))
        base = run_scenario(ScenarioConfig(1), clean)
        for sid, v in variants.items():
            model = models[(v, 0)]
            errors = np.concatenate([x.e for x in detect_fleet(model, clean.observed, theta=np.inf).verdicts])
            r = run_scenario(ScenarioConfig(sid, theta=float(errors.max())), clean, model)
            for k in base.traces:
                assert np.array_equal(r.traces[k], base.traces[k]), f"S{sid} {k} differs from S1"


# ----------------------------------------------------------------------------- 6


def test_ac6_scheduler_optimality():
    with criterion(6, "heuristic scheduler equals exhaustive optimum on 100 instances", 10):
        violations = 0
        for seed in range(100):
            loads, base, pv, prices, a, b = random_instance(seed)
            assert len(loads) <= 2
            cfg = SchedulerConfig(a, b)
            h = schedule_shiftable(loads, 8, prices, pv, base, cfg, method="heuristic")
            x = schedule_shiftable(loads, 8, prices, pv, base, cfg, method="exhaustive")
            ref = oracles.brute_force_schedule(
                [(ld.earliest, ld.latest) for ld in loads], [ld.profile for ld in loads], base, pv, prices, a, b
            )
            violations += h.objective != x.objective or abs(x.objective - ref) > 1e-12 * max(1.0, abs(ref))
        assert violations == 0, f"{violations} violations"


# ----------------------------------------------------------------------------- 7


def test_ac7_metric_oracles():
    with criterion(7, "AUC and confusion metrics match brute-force oracles"):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(50):
            n = int(rng.integers(2, 501))
            y = rng.random(n) < rng.uniform(0.05, 0.5)
            y[0], y[1] = True, False
            scores = np.round(rng.normal(size=n) + y, int(rng.integers(0, 3)))  # rounding makes ties
            worst = max(worst, abs(roc_auc(scores, y) - oracles.pairwise_auc(scores, y)))
        assert worst <= AUC_TOL, f"AUC off by {worst:.2e}"
        for _ in range(50):
            tp, tn, fp, fn = (int(v) for v in rng.integers(0, 1000, 4))
            got, ref = confusion_metrics(tp, tn, fp, fn), oracles.confusion(tp, tn, fp, fn)
            assert all(got[k] == ref[k] for k in ref), (tp, tn, fp, fn)


# ----------------------------------------------------------------------------- 8


def test_ac8_numerical_hygiene():
    with criterion(8, "DWT round trip, energy balance and SOC bounds over 1000 days"):
        rng = np.random.default_rng(8)
        dwt = 0.0
        for _ in range(200):
            levels = int(rng.integers(1, 6))
            x = rng.normal(scale=rng.uniform(0.1, 100), size=2**levels * int(rng.integers(1, 50)))
            a, d = haar_dwt(x, levels)
            dwt = max(dwt, float(np.max(np.abs(haar_idwt(a, d) - x))))
        assert dwt <= DWT_TOL, f"DWT round trip error {dwt:.2e}"
        worst, soc_lo, soc_hi, ev_out = 0.0, 1.0, 0.0, 0
        for day in range(1000):
            w, socs, outside = run_day(day, Rule.PROPOSED if day % 2 else Rule.CONVENTIONAL)
            worst = max(worst, w)
            soc_lo, soc_hi = min(soc_lo, socs.min()), max(soc_hi, socs.max())
            ev_out += outside
        assert worst <= BALANCE_TOL, f"energy balance off by {worst:.2e}"
        assert 0.2 <= soc_lo and soc_hi <= 0.9, f"SOC reached [{soc_lo}, {soc_hi}]"
        assert ev_out == 0, f"EV dispatched {ev_out} times while unplugged"

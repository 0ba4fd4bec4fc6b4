import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from meterguard.config import DataConfig
from meterguard.data.types import RESOURCES, ResourceKind
from meterguard.detector import (
    Flag,
    calibrate_threshold,
    classify,
    classify_point,
    confusion_metrics,
    evaluate_detector,
    impute_series,
    reconstruction_error,
    roc_auc,
    roc_curve,
)
from meterguard.errors import EmptyErrors, LengthMismatch, ShapeMismatch
from meterguard.nn.autoencoder import Variant
from meterguard.nn.training import TrainConfig
from meterguard.scenario import build_reference, prepare_training, train_detector

E = ResourceKind.ELECTRIC


@pytest.fixture(scope="module")
def small_model():
    cfg = DataConfig(households=3, days=4, outlier_rate=0.0, missing_rate=0.0, max_windows=200)
    data = build_reference(cfg)
    model, _ = train_detector(Variant.LSTM, prepare_training(data.observed, cfg), TrainConfig(epochs=40, hidden=8))
    return model, data


def household(data, hid=0):
    return {k: s for k, s in data.observed.items() if k[0] == hid}


# ----------------------------------------------------------------------------- errors and threshold


def test_reconstruction_error_examples():
    assert reconstruction_error(np.ones(5), np.ones(5)) == 0.0
    assert reconstruction_error([1, 0, 0, 0, 0], np.zeros(5)) == 1.0
    assert reconstruction_error([3, 4, 0, 0, 0], np.zeros(5)) == 25.0
    assert reconstruction_error(np.ones((3, 5)), np.zeros((3, 5))).tolist() == [5.0, 5.0, 5.0]
    with pytest.raises(ShapeMismatch):
        reconstruction_error(np.ones(5), np.ones(4))


def test_threshold_examples():
    assert calibrate_threshold(np.full(10, 0.2), 37.0) == 0.2
    assert calibrate_threshold(np.arange(1.0, 101.0), 100) == 100.0
    with pytest.raises(EmptyErrors):
        calibrate_threshold([])
    with pytest.raises(ValueError):
        calibrate_threshold([1.0], 0)


def test_threshold_matches_sort_oracle():
    errors = np.random.default_rng(2024).gamma(2.0, 0.5, 1000)
    assert calibrate_threshold(errors, 99.5) == oracles.percentile_by_sort(errors, 99.5)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=300), st.floats(0.1, 100))
def test_threshold_property(errors, q):
    assert calibrate_threshold(errors, q) == pytest.approx(oracles.percentile_by_sort(errors, q), rel=1e-12, abs=1e-9)


# ----------------------------------------------------------------------------- classification


def test_threshold_is_inclusive():
    assert classify_point(0.7, 0.7) == (Flag.NORMAL, 1)
    assert classify_point(0.7 + 1e-12, 0.7) == (Flag.OUTLIER, 0)
    assert classify_point(0.0, 0.7, present=False) == (Flag.MISSING, 0)
    assert classify_point(99.0, 0.7, present=False) == (Flag.MISSING, 0)


@given(st.lists(st.tuples(st.floats(0, 10), st.booleans()), min_size=1, max_size=50), st.floats(0, 10))
def test_vectorized_classification_and_coupling(points, theta):
    e = np.array([p[0] for p in points])
    present = np.array([p[1] for p in points])
    flags, o = classify(e, theta, present)
    for k, (ek, pk) in enumerate(points):
        assert (flags[k], o[k]) == classify_point(ek, theta, pk)
        assert (o[k] == 1) == (flags[k] == Flag.NORMAL)


@given(st.lists(st.tuples(st.floats(0, 10), st.booleans()), min_size=1, max_size=50), st.floats(0, 5), st.floats(0, 5))
def test_raising_theta_is_monotone(points, lo, bump):
    e = np.array([p[0] for p in points])
    truth = np.array([p[1] for p in points])
    present = np.ones(len(e), bool)
    a = evaluate_detector(classify(e, lo, present)[0], truth, e)
    b = evaluate_detector(classify(e, lo + bump, present)[0], truth, e)
    assert b.tn >= a.tn and b.fp <= a.fp


# ----------------------------------------------------------------------------- metrics


def test_confusion_example():
    m = confusion_metrics(99, 99, 1, 1)
    assert m["accuracy"] == 0.99 and m["precision"] == 0.99 and m["recall"] == 0.99
    assert m["f1"] == pytest.approx(0.99, abs=1e-15)


def test_zero_denominators_are_reported():
    m = confusion_metrics(0, 10, 0, 0)
    assert m["precision"] == m["recall"] == m["f1"] == 0.0
    assert set(m["undefined"]) == {"precision", "recall", "f1"}


@settings(max_examples=50)
@given(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000))
def test_confusion_formulas(tp, tn, fp, fn):
    got = confusion_metrics(tp, tn, fp, fn)
    ref = oracles.confusion(tp, tn, fp, fn)
    assert all(got[k] == ref[k] for k in ref)


def test_auc_examples():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc(np.full(7, 3.0), [1, 0, 1, 0, 0, 1, 0]) == 0.5
    assert np.isnan(roc_auc([1.0, 2.0], [1, 1]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 500), st.integers(1, 20))
def test_auc_equals_pairwise_statistic(seed, n, levels):
    rng = np.random.default_rng(seed)
    y = rng.random(n) < 0.3
    y[0], y[1] = True, False
    scores = rng.integers(0, levels, n) + y * rng.random(n)
    assert abs(roc_auc(scores, y) - oracles.pairwise_auc(scores, y)) <= 1e-12


def test_roc_curve_area_matches_auc():
    rng = np.random.default_rng(1)
    y = rng.random(200) < 0.2
    s = rng.normal(size=200) + y
    fpr, tpr, thr = roc_curve(s, y)
    assert fpr[0] == tpr[0] == 0 and fpr[-1] == tpr[-1] == 1 and np.isinf(thr[0])
    assert np.trapezoid(tpr, fpr) == pytest.approx(roc_auc(s, y), abs=1e-12)


def test_evaluate_detector():
    flags = np.array([Flag.NORMAL, Flag.OUTLIER, Flag.MISSING, Flag.NORMAL])
    truth = np.array([False, True, True, True])
    e = np.array([0.1, 5.0, 0.0, 0.2])
    m = evaluate_detector(flags, truth, e)
    assert (m.tp, m.tn, m.fp, m.fn) == (2, 1, 0, 1)
    assert m.mse == 0.1
    # the missing step ranks above everything although its error is 0
    assert m.auc == 1.0
    with pytest.raises(LengthMismatch):
        evaluate_detector(flags, truth[:3], e)


# ----------------------------------------------------------------------------- imputation


def test_clean_household_is_left_alone(small_model):
    model, data = small_model
    house = household(data)
    out, v = impute_series(house, model, 0, theta=np.inf)
    assert all(np.array_equal(out[k].values, house[k].values) for k in house)
    assert np.all(v.flags == Flag.NORMAL) and np.all(np.isnan(v.imputed))


def test_missing_point_is_filled(small_model):
    model, data = small_model
    house = household(data)
    s = house[(0, E)]
    v = s.values.copy()
    q = s.quality.copy()
    v[40], q[40] = np.nan, False
    house[(0, E)] = s.with_values(v, q)
    out, verdicts = impute_series(house, model, 0, theta=np.inf)
    assert verdicts.flags[40] == Flag.MISSING and verdicts.o_lstm[40] == 0
    assert out[(0, E)].quality[40] and out[(0, E)].values[40] == verdicts.reconstruction[40, E]
    assert np.array_equal(np.delete(out[(0, E)].values, 40), np.delete(s.values, 40))
    verdict = verdicts[40]
    assert verdict.flag == Flag.MISSING and verdict.imputed is not None
    assert verdicts[0].imputed is None


def test_spike_is_imputed_near_truth(small_model):
    model, data = small_model
    house = household(data, 1)
    s = house[(1, E)]
    t = int(np.argmax(s.values))
    truth_value = s.values[t]
    v = s.values.copy()
    v[t] *= 5
    house[(1, E)] = s.with_values(v)
    out, verdicts = impute_series(house, model, 1)
    assert verdicts.flags[t] == Flag.OUTLIER
    sigma = model.standardization.std[E]
    assert abs(out[(1, E)].values[t] - truth_value) <= 3 * sigma


def test_imputation_idempotent_on_normal_points(small_model):
    model, data = small_model
    house = household(data, 2)
    out, v1 = impute_series(house, model, 2)
    again, v2 = impute_series(out, model, 2)
    normal = v1.flags == Flag.NORMAL
    for r in RESOURCES:
        assert np.array_equal(again[(2, r)].values[normal], out[(2, r)].values[normal])
    assert np.array_equal(v1.o_lstm == 1, v1.flags == Flag.NORMAL)

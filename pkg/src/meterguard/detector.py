"""Reconstruction-error anomaly detection, imputation and detector evaluation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from meterguard.data.partition import pad_to_windows
from meterguard.data.preprocess import denoise_series
from meterguard.data.types import RESOURCES, Label, SeriesSet
from meterguard.errors import EmptyErrors, LengthMismatch, ShapeMismatch
from meterguard.nn.autoencoder import AutoencoderModel, autoencoder_forward

DEFAULT_PERCENTILE = 99.5


class Flag(enum.IntEnum):
    NORMAL = 0
    OUTLIER = 1
    MISSING = 2


def reconstruction_error(x, x_hat) -> np.ndarray | float:
    """Squared Euclidean distance over the last axis."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ShapeMismatch(f"{x.shape} vs {x_hat.shape}")
    d = x - x_hat
    e = np.sum(d * d, axis=-1)
    return float(e) if np.ndim(e) == 0 else e


def calibrate_threshold(errors, percentile: float = DEFAULT_PERCENTILE) -> float:
    """Linear-interpolated percentile of validation reconstruction errors."""
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise EmptyErrors("no validation errors to calibrate on")
    if not 0 < percentile <= 100:
        raise ValueError("percentile must be in (0, 100]")
    return float(np.percentile(e, percentile, method="linear"))


@dataclass(frozen=True)
class AnomalyVerdict:
    t: int
    e_t: float
    o_lstm: int
    flag: Flag
    imputed: np.ndarray | None = None


def classify_point(e_t: float, theta: float, present: bool = True) -> tuple[Flag, int]:
    """Threshold rule; a missing reading wins over any error value."""
    if not present:
        return Flag.MISSING, 0
    if e_t <= theta:
        return Flag.NORMAL, 1
    return Flag.OUTLIER, 0


def classify(errors: np.ndarray, theta: float, present: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`classify_point`; returns (flags, o_lstm)."""
    errors = np.asarray(errors, dtype=float)
    flags = np.where(errors <= theta, Flag.NORMAL, Flag.OUTLIER).astype(np.int8)
    flags[~np.asarray(present, bool)] = Flag.MISSING
    return flags, (flags == Flag.NORMAL).astype(np.int8)


@dataclass
class Verdicts:
    """Per-timestep detector output for one household."""

    household_id: int
    timestamps: np.ndarray
    e: np.ndarray  # (T,)
    flags: np.ndarray  # (T,) Flag codes
    o_lstm: np.ndarray  # (T,)
    reconstruction: np.ndarray  # (T, 5) de-standardized x_hat for every step
    imputed: np.ndarray  # (T, 5), NaN where the step was left alone

    def __len__(self):
        return len(self.e)

    def __getitem__(self, t: int) -> AnomalyVerdict:
        imp = None if self.flags[t] == Flag.NORMAL else self.imputed[t].copy()
        return AnomalyVerdict(int(t), float(self.e[t]), int(self.o_lstm[t]), Flag(self.flags[t]), imp)


def reconstruct(model: AutoencoderModel, x: np.ndarray, stride: int | None = None) -> np.ndarray:
    """Reconstruct a (T, 5) standardized matrix window by window.

    The tail is edge-padded to a whole window. With ``stride`` smaller than the
    window, overlapping reconstructions are averaged.
    """
    W = model.window_len
    stride = W if stride is None else stride
    n = len(x)
    padded = pad_to_windows(x, W)
    starts = list(range(0, len(padded) - W + 1, stride))
    if starts[-1] != len(padded) - W:
        starts.append(len(padded) - W)
    windows = np.stack([padded[s : s + W] for s in starts])
    recon = autoencoder_forward(model, windows)
    total = np.zeros_like(padded)
    count = np.zeros((len(padded), 1))
    for s, r in zip(starts, recon):
        total[s : s + W] += r
        count[s : s + W] += 1
    return (total / count)[:n]


def model_inputs(model: AutoencoderModel, household: SeriesSet, household_id: int, denoise_levels: int | None = 2):
    """Raw (T, 5) values, presence mask and the standardized model input (missing -> 0)."""
    record = model.standardization
    if record is None:
        raise ValueError("model carries no standardization record")
    cols = [household[(household_id, r)] for r in RESOURCES]
    raw = np.stack([c.values for c in cols], axis=1)
    present = np.stack([c.quality for c in cols], axis=1)
    clean = cols if denoise_levels is None else [denoise_series(c, denoise_levels) for c in cols]
    std = np.stack([record.forward(int(r), c.values) for r, c in zip(RESOURCES, clean)], axis=1)
    std = np.where(present, std, 0.0)
    return raw, present, std, cols[0].timestamps


def impute_series(
    household: SeriesSet,
    model: AutoencoderModel,
    household_id: int | None = None,
    *,
    theta: float | None = None,
    stride: int | None = None,
    denoise_levels: int | None = 2,
) -> tuple[SeriesSet, Verdicts]:
    """Detect and replace bad readings of one household.

    Every step flagged Outlier or Missing gets all five channels replaced by the
    de-standardized reconstruction (clipped at zero); Normal steps are returned
    bit-for-bit unchanged.
    """
    if household_id is None:
        ids = {k[0] for k in household}
        if len(ids) != 1:
            raise ValueError("pass household_id when the set holds several households")
        household_id = ids.pop()
    theta = model.threshold if theta is None else theta
    if theta is None:
        raise ValueError("no threshold: calibrate the model or pass theta")
    record = model.standardization
    raw, present, std, ts = model_inputs(model, household, household_id, denoise_levels)
    x_hat = reconstruct(model, std, stride)
    e = reconstruction_error(std, x_hat)
    flags, o_lstm = classify(e, theta, present.all(axis=1))
    recon = np.stack([record.inverse(int(r), x_hat[:, r]) for r in RESOURCES], axis=1)
    recon = np.maximum(recon, 0.0)
    bad = flags != Flag.NORMAL
    imputed = np.full_like(recon, np.nan)
    imputed[bad] = recon[bad]

    out = {}
    for r in RESOURCES:
        s = household[(household_id, r)]
        values = s.values.copy()
        quality = s.quality.copy()
        values[bad] = recon[bad, r]
        quality[bad] = True
        out[s.key] = s.with_values(values, quality)
    return out, Verdicts(household_id, ts, e, flags, o_lstm, recon, imputed)


def timestep_truth(labels: dict, household_id: int) -> np.ndarray:
    """A step is anomalous when any of its five channels is."""
    lab = np.stack([labels[(household_id, r)] for r in RESOURCES], axis=1)
    return (lab != Label.NORMAL).any(axis=1)


# ----------------------------------------------------------------------------- metrics


def roc_auc(scores, positives) -> float:
    """Mann-Whitney rank statistic with average ranks for ties."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(positives, dtype=bool)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(s, method="average")
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_curve(scores, positives) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds), one point per distinct score, highest threshold first."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(positives, dtype=bool)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    distinct = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tps = np.cumsum(y)[distinct]
    fps = (distinct + 1) - tps
    tpr = np.r_[0.0, tps / max(y.sum(), 1)]
    fpr = np.r_[0.0, fps / max((~y).sum(), 1)]
    return fpr, tpr, np.r_[np.inf, s[distinct]]


@dataclass
class DetectorMetrics:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    mse: float
    auc: float
    undefined: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def confusion_metrics(tp: int, tn: int, fp: int, fn: int) -> dict:
    """Accuracy, precision, recall, F1; a zero denominator yields 0 and is reported."""
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    accuracy = ratio(tp + tn, tp + fn + fp + tn, "accuracy")
    precision = ratio(tp, tp + fp, "precision")
    recall = ratio(tp, tp + fn, "recall")
    f1 = ratio(2 * precision * recall, precision + recall, "f1")
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1, "undefined": undefined}


def evaluate_detector(flags, truth, scores) -> DetectorMetrics:
    """Confusion counts, MSE on truly normal steps and ROC AUC.

    Positive class is "anomalous" (Outlier or Missing). Steps flagged Missing
    come straight from the quality flag, so they rank above every reconstruction
    error in the ROC.
    """
    flags = np.asarray(flags)
    truth = np.asarray(truth, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    if not (len(flags) == len(truth) == len(scores)):
        raise LengthMismatch(f"lengths {len(flags)}, {len(truth)}, {len(scores)}")
    pred = flags != Flag.NORMAL
    tp = int(np.sum(pred & truth))
    tn = int(np.sum(~pred & ~truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    m = confusion_metrics(tp, tn, fp, fn)
    normal_scores = scores[~truth & (flags != Flag.MISSING)]
    mse = float(np.mean(normal_scores)) if len(normal_scores) else float("nan")
    roc_scores = np.where(flags == Flag.MISSING, np.inf, scores)
    return DetectorMetrics(tp, tn, fp, fn, mse=mse, auc=roc_auc(roc_scores, truth), **m)

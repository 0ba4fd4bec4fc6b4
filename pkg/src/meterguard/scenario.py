"""The four power-management scenarios and their comparison.

Scenario 1 dispatches on raw meter readings with the conventional rule.
Scenarios 2, 3 and 4 first clean the readings with the LSTM, BiLSTM and
GCN-BiLSTM detector respectively, then dispatch with the anomaly-aware rule.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from meterguard import detector as det
from meterguard.config import DataConfig, section_dict
from meterguard.data.anomalies import inject_anomalies
from meterguard.data.lof import label_reference_anomalies
from meterguard.data.partition import DatasetPartition, partition_dataset
from meterguard.data.preprocess import StandardizationRecord, denoise, preprocess, standardize
from meterguard.data.synthetic import SyntheticDataset, generate_synthetic
from meterguard.data.types import Label, LabelSet, ResourceKind, SeriesSet, households
from meterguard.errors import ConfigMismatch, MissingModel, MixedDatasets, ValidationError
from meterguard.nn.autoencoder import AutoencoderModel, Variant, autoencoder_forward
from meterguard.nn.serialize import model_to_dict
from meterguard.nn.training import LossHistory, TrainConfig, train_autoencoder
from meterguard.power.dispatch import Rule, peak_load
from meterguard.power.scheduler import SchedulerConfig
from meterguard.power.simulate import HouseholdInputs, StorageConfig, simulate_household
from meterguard.tariff import TariffConfig

KW_PER_KWH_STEP = 4.0  # 15-minute energy -> average power
SCENARIO_VARIANTS = {1: None, 2: Variant.LSTM, 3: Variant.BILSTM, 4: Variant.GCN_BILSTM}
TRACE_COLUMNS = ("total_kw", "storage_kw", "hvac_kw", "appliance_kw")


# ----------------------------------------------------------------------------- data


@dataclass
class ReferenceData:
    """A synthetic fleet, its corrupted + preprocessed readings and ground truth."""

    config: DataConfig
    dataset: SyntheticDataset
    observed: SeriesSet
    truth: LabelSet

    @property
    def household_ids(self) -> list[int]:
        return households(self.observed)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for key in sorted(self.observed):
            s = self.observed[key]
            h.update(np.asarray(key[0]).tobytes() + np.asarray(int(key[1])).tobytes())
            h.update(np.nan_to_num(s.values, nan=-1.0).tobytes())
            h.update(s.quality.tobytes())
            h.update(self.truth[key].tobytes())
        return h.hexdigest()


def build_reference(config: DataConfig | None = None, observed: SeriesSet | None = None) -> ReferenceData:
    """Generate the fleet and corrupt it; ``observed`` replaces the corrupted readings if given."""
    config = config or DataConfig()
    ds = generate_synthetic(config.seed, config.households, config.days, config.start)
    corrupted, truth = inject_anomalies(ds.series, config.seed, config.outlier_rate, config.missing_rate)
    observed = preprocess(corrupted if observed is None else observed)
    for key, s in observed.items():
        if key not in ds.series or len(s) != len(ds.series[key]) or s.start != ds.start:
            raise ConfigMismatch(f"readings for {key} do not match the generated fleet")
    return ReferenceData(config, ds, observed, truth)


# ----------------------------------------------------------------------------- detectors


@dataclass
class TrainingSet:
    partition: DatasetPartition
    record: StandardizationRecord
    reference_labels: LabelSet


def prepare_training(observed: SeriesSet, config: DataConfig, reference_labels: LabelSet | None = None) -> TrainingSet:
    """LOF labels, denoising, standardization on LOF-normal points, windows."""
    if reference_labels is None:
        reference_labels = label_reference_anomalies(observed, config.lof_k, config.lof_threshold)
    smooth = denoise(observed, config.denoise_levels)
    masks = {k: reference_labels[k] == Label.NORMAL for k in reference_labels}
    std, record = standardize(smooth, masks)
    part = partition_dataset(
        std, reference_labels, config.window_len, config.seed, stride=config.stride, max_windows=config.max_windows
    )
    return TrainingSet(part, record, reference_labels)


def train_detector(
    variant: Variant | str, training: TrainingSet, config: TrainConfig | None = None
) -> tuple[AutoencoderModel, LossHistory]:
    """Train one variant and calibrate its threshold on the validation windows."""
    config = config or TrainConfig()
    model, history = train_autoencoder(variant, training.partition, config)
    model.standardization = training.record
    val = training.partition.validation
    errors = det.reconstruction_error(val, autoencoder_forward(model, val)).ravel()
    model.threshold = det.calibrate_threshold(errors, config.threshold_percentile)
    model.meta.update(
        {
            "best_epoch": history.best_epoch,
            "partition": dict(training.partition.meta),
            "train_windows": int(len(training.partition.train)),
            "validation_windows": int(len(val)),
        }
    )
    return model, history


@dataclass
class Detection:
    cleaned: SeriesSet
    verdicts: list[det.Verdicts]
    metrics: det.DetectorMetrics | None


def detect_fleet(
    model: AutoencoderModel,
    observed: SeriesSet,
    truth: LabelSet | None = None,
    *,
    theta: float | None = None,
    denoise_levels: int = 2,
) -> Detection:
    cleaned, verdicts = {}, []
    flags, scores, gt = [], [], []
    for hid in households(observed):
        house = {k: s for k, s in observed.items() if k[0] == hid}
        out, v = det.impute_series(house, model, hid, theta=theta, denoise_levels=denoise_levels)
        cleaned.update(out)
        verdicts.append(v)
        flags.append(v.flags)
        scores.append(v.e)
        if truth is not None:
            gt.append(det.timestep_truth(truth, hid))
    metrics = None
    if truth is not None:
        metrics = det.evaluate_detector(np.concatenate(flags), np.concatenate(gt), np.concatenate(scores))
    return Detection(cleaned, verdicts, metrics)


def model_digest(model: AutoencoderModel) -> str:
    text = json.dumps(model_to_dict(model), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


# ----------------------------------------------------------------------------- scenarios


@dataclass(frozen=True)
class ScenarioConfig:
    id: int
    variant: Variant | None = None
    rule: Rule | None = None
    storage: StorageConfig = field(default_factory=StorageConfig)
    tariff: TariffConfig = field(default_factory=TariffConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    theta: float | None = None  # overrides the model's calibrated threshold

    def __post_init__(self):
        if self.id not in SCENARIO_VARIANTS:
            raise ConfigMismatch(f"scenario id must be 1-4, got {self.id}")
        want_variant = SCENARIO_VARIANTS[self.id]
        want_rule = Rule.CONVENTIONAL if self.id == 1 else Rule.PROPOSED
        variant = None if self.variant is None else Variant(self.variant)
        rule = want_rule if self.rule is None else Rule(self.rule)
        if self.id == 1 and variant is not None:
            raise ConfigMismatch("scenario 1 runs without a detector")
        if variant is None:
            variant = want_variant
        if variant != want_variant or rule != want_rule:
            raise ConfigMismatch(
                f"scenario {self.id} is ({want_variant and want_variant.value}, {want_rule.value}), "
                f"got ({variant and variant.value}, {rule.value})"
            )
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "rule", rule)


@dataclass
class ScenarioResult:
    scenario_id: int
    variant: str | None
    rule: str
    peak_load_kw: float
    electricity_cost_usd: float  # fleet-average bill over the simulated period
    metrics: det.DetectorMetrics | None
    timestamps: np.ndarray
    traces: dict[str, np.ndarray]  # fleet-average kW, one entry per TRACE_COLUMNS
    manifest: dict
    household_costs: list[float] = field(default_factory=list)
    max_balance_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "variant": self.variant,
            "rule": self.rule,
            "peak_load_kw": self.peak_load_kw,
            "electricity_cost_usd": self.electricity_cost_usd,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "timestamps": [str(t) for t in self.timestamps.astype("datetime64[s]")],
            "traces": {k: self.traces[k].tolist() for k in TRACE_COLUMNS},
            "manifest": self.manifest,
            "household_costs": list(self.household_costs),
            "max_balance_residual": self.max_balance_residual,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioResult":
        try:
            return cls(
                scenario_id=int(d["scenario_id"]),
                variant=d["variant"],
                rule=d["rule"],
                peak_load_kw=float(d["peak_load_kw"]),
                electricity_cost_usd=float(d["electricity_cost_usd"]),
                metrics=None if d["metrics"] is None else det.DetectorMetrics(**d["metrics"]),
                timestamps=np.array(d["timestamps"], dtype="datetime64[s]"),
                traces={k: np.asarray(d["traces"][k], dtype=float) for k in TRACE_COLUMNS},
                manifest=d["manifest"],
                household_costs=[float(c) for c in d.get("household_costs", [])],
                max_balance_residual=float(d.get("max_balance_residual", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"not a scenario result: {exc}") from exc


def household_inputs(data: ReferenceData, hid: int, detection: Detection | None = None) -> HouseholdInputs:
    ds = data.dataset
    key = (hid, ResourceKind.ELECTRIC)
    obs = data.observed[key]
    measured = np.where(obs.quality, obs.values, np.nan) * KW_PER_KWH_STEP
    cleaned = o_lstm = None
    if detection is not None:
        cleaned = detection.cleaned[key].values * KW_PER_KWH_STEP
        verdict = next(v for v in detection.verdicts if v.household_id == hid)
        o_lstm = verdict.o_lstm
    return HouseholdInputs(
        household_id=hid,
        timestamps=obs.timestamps,
        measured_kw=measured,
        hvac_kw=ds.hvac_kw[hid],
        pv_kw=ds.pv_kw[hid],
        shiftable=ds.shiftable[hid],
        ev_trip_soc=ds.ev_trip_soc[hid],
        cleaned_kw=cleaned,
        o_lstm=o_lstm,
    )


def scenario_manifest(config: ScenarioConfig, data: ReferenceData, model: AutoencoderModel | None) -> dict:
    model_part = None
    if model is not None:
        model_part = {
            "variant": model.variant.value,
            "sha256": model_digest(model),
            "threshold": model.threshold,
            "train_config": None if model.train_config is None else dataclasses.asdict(model.train_config),
            "meta": model.meta,
        }
    return {
        "scenario": config.id,
        "variant": None if config.variant is None else config.variant.value,
        "rule": config.rule.value,
        "theta_override": config.theta,
        "data": section_dict(data.config),
        "data_fingerprint": data.fingerprint(),
        "storage": section_dict(config.storage),
        "tariff": section_dict(config.tariff),
        "scheduler": section_dict(config.scheduler),
        "model": model_part,
        "cost_period_days": data.config.days,
    }


def run_scenario(config: ScenarioConfig, data: ReferenceData, model: AutoencoderModel | None = None) -> ScenarioResult:
    """Detect and impute (scenarios 2-4), schedule, dispatch, bill, average over the fleet."""
    detection = None
    if config.variant is not None:
        if model is None:
            raise MissingModel(f"scenario {config.id} needs a trained {config.variant.value} model")
        if model.variant != config.variant:
            raise ConfigMismatch(f"scenario {config.id} needs {config.variant.value}, got {model.variant.value}")
        detection = detect_fleet(
            model, data.observed, data.truth, theta=config.theta, denoise_levels=data.config.denoise_levels
        )
    else:
        model = None
    traces = []
    for hid in data.household_ids:
        inputs = household_inputs(data, hid, detection)
        traces.append(simulate_household(inputs, config.rule, config.storage, config.tariff, config.scheduler))
    fleet = {
        "total_kw": np.mean([t.grid_kw for t in traces], axis=0),
        "storage_kw": np.mean([t.storage_kw for t in traces], axis=0),
        "hvac_kw": np.mean([t.hvac_kw for t in traces], axis=0),
        "appliance_kw": np.mean([t.appliance_kw for t in traces], axis=0),
    }
    costs = [t.cost_usd for t in traces]
    return ScenarioResult(
        scenario_id=config.id,
        variant=None if config.variant is None else config.variant.value,
        rule=config.rule.value,
        peak_load_kw=peak_load(fleet["total_kw"]),
        electricity_cost_usd=float(np.mean(costs)),
        metrics=None if detection is None else detection.metrics,
        timestamps=data.dataset.timestamps.astype("datetime64[s]"),
        traces=fleet,
        manifest=scenario_manifest(config, data, model),
        household_costs=costs,
        max_balance_residual=max(t.balance_residual for t in traces),
    )


def scenario_config_from_manifest(manifest: dict) -> ScenarioConfig:
    tariff = manifest["tariff"]
    return ScenarioConfig(
        id=int(manifest["scenario"]),
        variant=manifest["variant"],
        rule=manifest["rule"],
        storage=StorageConfig(**manifest["storage"]),
        tariff=TariffConfig(**tariff),
        scheduler=SchedulerConfig(**manifest["scheduler"]),
        theta=manifest.get("theta_override"),
    )


def rerun_from_manifest(manifest: dict, model: AutoencoderModel | None = None) -> ScenarioResult:
    """Rebuild the dataset and configuration recorded in a manifest and run again."""
    if manifest.get("model") and model is not None and model_digest(model) != manifest["model"]["sha256"]:
        raise ConfigMismatch("model does not match the manifest")
    data = build_reference(DataConfig(**manifest["data"]))
    if data.fingerprint() != manifest["data_fingerprint"]:
        raise MixedDatasets("regenerated data differ from the manifest")
    return run_scenario(scenario_config_from_manifest(manifest), data, model)


# ----------------------------------------------------------------------------- comparison

METRIC_COLUMNS = ("accuracy", "precision", "recall", "f1", "mse", "auc")


def _reduction(base: float, value: float) -> float | None:
    return None if base == 0 else (base - value) / base


def compare_scenarios(results: list[ScenarioResult]) -> list[dict]:
    """Table-style rows ordered by scenario id, with reductions relative to scenario 1."""
    if not results:
        raise ValidationError("no results to compare")
    ref = results[0].manifest
    for r in results[1:]:
        if r.manifest["data"] != ref["data"] or r.manifest["data_fingerprint"] != ref["data_fingerprint"]:
            raise MixedDatasets(f"scenario {r.scenario_id} ran on different data")
    ordered = sorted(results, key=lambda r: r.scenario_id)
    base = next((r for r in ordered if r.scenario_id == 1), None)
    rows = []
    for r in ordered:
        row = {"scenario": r.scenario_id, "variant": r.variant or "none", "rule": r.rule}
        for m in METRIC_COLUMNS:
            row[m] = None if r.metrics is None else getattr(r.metrics, m)
        row["peak_load_kw"] = r.peak_load_kw
        row["electricity_cost_usd"] = r.electricity_cost_usd
        row["peak_reduction"] = None if base is None else _reduction(base.peak_load_kw, r.peak_load_kw)
        row["cost_reduction"] = (
            None if base is None else _reduction(base.electricity_cost_usd, r.electricity_cost_usd)
        )
        rows.append(row)
    return rows

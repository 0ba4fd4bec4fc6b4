"""Command-line entry point: ``meterguard <command> ...``.

A data directory holds ``dataset.json`` (the generator settings),
``readings.csv`` (meter readings), ``labels.csv`` (injected ground truth) and,
after ``preprocess``, ``reference_labels.csv`` (LOF labels for training).
Side information the meters do not carry (PV, HVAC, appliance runs, EV trips)
is regenerated from the seed in ``dataset.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from meterguard.config import Config, DataConfig, load_config, section_dict
from meterguard.data.anomalies import inject_anomalies
from meterguard.data.csvio import ingest_csv, read_labels, write_csv, write_labels, write_verdicts
from meterguard.data.lof import label_reference_anomalies
from meterguard.data.preprocess import preprocess
from meterguard.data.synthetic import generate_synthetic
from meterguard.errors import IoFailure, MeterGuardError, MissingModel, ValidationError
from meterguard.fileio import write_atomic
from meterguard.nn.autoencoder import Variant
from meterguard.nn.serialize import load_model, save_model
from meterguard.report import dumps, export_report, load_result, save_result
from meterguard.scenario import (
    SCENARIO_VARIANTS,
    ScenarioConfig,
    build_reference,
    detect_fleet,
    prepare_training,
    run_scenario,
    train_detector,
)

log = logging.getLogger("meterguard")


def _data_config(directory: Path) -> DataConfig:
    path = directory / "dataset.json"
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"{directory} is not a data directory (no dataset.json): {exc}") from exc
    return Config.from_dict({"data": d}).data


def _readings(directory: Path):
    path = directory / "readings.csv"
    if not path.is_file():
        raise ValidationError(f"{path} not found")
    return ingest_csv(path)


def cmd_generate(args, cfg: Config) -> None:
    cfg = cfg.override("data", households=args.households, days=args.days, seed=args.seed)
    d = cfg.data
    fleet = generate_synthetic(d.seed, d.households, d.days, d.start)
    corrupted, truth = inject_anomalies(fleet.series, d.seed, d.outlier_rate, d.missing_rate)
    out = Path(args.out)
    write_atomic(out / "dataset.json", dumps(section_dict(cfg.data)))
    write_csv(corrupted, out / "readings.csv")
    write_labels(truth, corrupted, out / "labels.csv")
    log.info("wrote %d series to %s", len(corrupted), out)


def cmd_preprocess(args, cfg: Config) -> None:
    src, out = Path(args.input), Path(args.out)
    data_cfg = _data_config(src)
    series = preprocess(_readings(src))
    ref = label_reference_anomalies(series, data_cfg.lof_k, data_cfg.lof_threshold)
    write_atomic(out / "dataset.json", dumps(section_dict(data_cfg)))
    write_csv(series, out / "readings.csv")
    write_labels(ref, series, out / "reference_labels.csv")
    if (src / "labels.csv").is_file():
        write_labels(read_labels(src / "labels.csv", series), series, out / "labels.csv")
    log.info("preprocessed %d series into %s", len(series), out)


def cmd_train(args, cfg: Config) -> None:
    cfg = cfg.override(
        "train", epochs=args.epochs, seed=args.seed, hidden=args.hidden, batch_size=args.batch_size,
        learning_rate=args.learning_rate,
    )
    src = Path(args.data)
    data_cfg = _data_config(src)
    series = preprocess(_readings(src))
    ref_path = src / "reference_labels.csv"
    ref = read_labels(ref_path, series) if ref_path.is_file() else None
    training = prepare_training(series, data_cfg, ref)
    model, history = train_detector(Variant(args.variant), training, cfg.train)
    save_model(model, args.out)
    log.info(
        "%s: best epoch %d, validation MSE %.5f, threshold %.4f",
        args.variant, history.best_epoch, min(history.validation), model.threshold,
    )


def cmd_detect(args, cfg: Config) -> None:
    src, out = Path(args.data), Path(args.out)
    model = load_model(args.model)
    series = preprocess(_readings(src))
    truth = read_labels(src / "labels.csv", series) if (src / "labels.csv").is_file() else None
    data_cfg = _data_config(src) if (src / "dataset.json").is_file() else DataConfig()
    result = detect_fleet(model, series, truth, denoise_levels=data_cfg.denoise_levels)
    write_verdicts(result.verdicts, out / "verdicts.csv")
    write_csv(result.cleaned, out / "readings.csv")
    if result.metrics is not None:
        write_atomic(out / "metrics.json", dumps(result.metrics.to_dict()))
        log.info("AUC %.4f, F1 %.4f", result.metrics.auc, result.metrics.f1)


def cmd_simulate(args, cfg: Config) -> None:
    cfg = cfg.override("storage", pw_max=args.pw_max)
    src, out = Path(args.data), Path(args.out)
    data = build_reference(_data_config(src), observed=_readings(src))
    ids = sorted(SCENARIO_VARIANTS) if args.scenario == "all" else [int(args.scenario)]
    for sid in ids:
        variant = SCENARIO_VARIANTS[sid]
        model = None
        if variant is not None:
            if args.models is None:
                raise ValidationError(f"scenario {sid} needs --models")
            path = Path(args.models) / f"{variant.value}.json"
            if not path.is_file():
                raise MissingModel(f"no model at {path}")
            model = load_model(path)
        config = ScenarioConfig(sid, storage=cfg.storage, tariff=cfg.tariff, scheduler=cfg.scheduler)
        result = run_scenario(config, data, model)
        save_result(result, out / f"scenario_{sid}.json")
        log.info("scenario %d: peak %.3f kW, cost $%.2f", sid, result.peak_load_kw, result.electricity_cost_usd)


def cmd_report(args, cfg: Config) -> None:
    paths = sorted(Path(args.input).glob("scenario_*.json"))
    if not paths:
        raise IoFailure(f"no scenario results in {args.input}")
    written = export_report([load_result(p) for p in paths], args.out)
    for p in written:
        print(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meterguard", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON config with sections data, train, tariff, storage, scheduler")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a corrupted fleet")
    p.add_argument("--households", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("preprocess", help="clean, resample and LOF-label readings")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train one detector variant")
    p.add_argument("--variant", required=True, choices=[v.value for v in Variant])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="flag and impute readings with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="run power-management scenarios")
    p.add_argument("--scenario", required=True, choices=["1", "2", "3", "4", "all"])
    p.add_argument("--data", required=True)
    p.add_argument("--models", help="directory with lstm.json, bilstm.json, gcn-bilstm.json")
    p.add_argument("--out", required=True)
    p.add_argument("--pw-max", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="export comparison table, traces and manifests")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args, load_config(args.config))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MeterGuardError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

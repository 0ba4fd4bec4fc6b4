"""Comparison tables, trace CSVs and manifests on disk."""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

from meterguard.errors import IoFailure
from meterguard.fileio import write_atomic
from meterguard.scenario import TRACE_COLUMNS, ScenarioResult, compare_scenarios

TABLE_COLUMNS = (
    "scenario",
    "variant",
    "rule",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "mse",
    "auc",
    "peak_load_kw",
    "electricity_cost_usd",
    "peak_reduction",
    "cost_reduction",
)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def render_report(results: list[ScenarioResult]) -> dict[str, str]:
    """File name -> content for the whole report, built entirely in memory."""
    if not results:
        raise IoFailure("no scenario results to export")
    rows = compare_scenarios(results)
    files = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for row in rows:
        w.writerow([_cell(row[c]) for c in TABLE_COLUMNS])
    files["comparison.csv"] = buf.getvalue()
    files["comparison.json"] = dumps(rows)
    for r in sorted(results, key=lambda r: r.scenario_id):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("timestamp", *TRACE_COLUMNS))
        for k, ts in enumerate(r.timestamps):
            w.writerow((str(ts) + "Z", *(repr(float(r.traces[c][k])) for c in TRACE_COLUMNS)))
        files[f"traces_scenario_{r.scenario_id}.csv"] = buf.getvalue()
        files[f"manifest_scenario_{r.scenario_id}.json"] = dumps(r.manifest)
    return files


def export_report(results: list[ScenarioResult], path: str | os.PathLike) -> list[Path]:
    """Write the comparison table (CSV + JSON), per-scenario traces and manifests.

    Everything is rendered before the first byte hits the disk and each file
    is replaced atomically, so a failure never leaves a half-written file.
    """
    files = render_report(results)
    out = Path(path)
    written = []
    for name, text in files.items():
        write_atomic(out / name, text)
        written.append(out / name)
    return written


def save_result(result: ScenarioResult, path: str | os.PathLike) -> None:
    write_atomic(path, dumps(result.to_dict()))


def load_result(path: str | os.PathLike) -> ScenarioResult:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return ScenarioResult.from_dict(json.loads(text))

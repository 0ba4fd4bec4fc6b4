"""Meter-reading, label and verdict CSV files."""

from __future__ import annotations

import csv
import io
import math
import os

import numpy as np

from meterguard.data.types import RESOURCES, Label, LabelSet, ResourceKind, ResourceSeries, SeriesSet, sorted_set
from meterguard.errors import DuplicateTimestamp, IoFailure, MalformedRow, NonMonotonicClock
from meterguard.fileio import write_atomic

READINGS_HEADER = ("household_id", "timestamp", "resource", "value_kwh", "quality")
LABELS_HEADER = ("household_id", "timestamp", "resource", "label")
VERDICT_HEADER = ("household_id", "timestamp", "resource", "e_t", "o_lstm", "flag", "imputed_value")


def format_ts(ts: np.datetime64) -> str:
    return str(np.datetime64(ts, "s")) + "Z"


def parse_ts(text: str) -> np.datetime64:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1]
    elif text.endswith("+00:00"):
        text = text[:-6]
    if "T" not in text:
        raise ValueError("timestamp needs a date and a time")
    return np.datetime64(text, "s")


def format_float(x: float) -> str:
    return repr(float(x))


def _read_rows(path, header):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    first = next(reader, None)
    if first is None or tuple(first) != header:
        raise MalformedRow(1, f"header must be {','.join(header)}")
    for row in reader:
        if row:
            yield reader.line_num, row


def _key_fields(line: int, row: list[str]) -> tuple[int, np.datetime64, ResourceKind]:
    try:
        hid = int(row[0])
    except ValueError:
        raise MalformedRow(line, f"household_id {row[0]!r} is not an integer") from None
    if hid < 0:
        raise MalformedRow(line, "household_id must be non-negative")
    try:
        ts = parse_ts(row[1])
    except ValueError:
        raise MalformedRow(line, f"bad timestamp {row[1]!r}") from None
    try:
        resource = ResourceKind.from_csv(row[2])
    except (KeyError, ValueError):
        raise MalformedRow(line, f"unknown resource {row[2]!r}") from None
    return hid, ts, resource


def ingest_csv(path: str | os.PathLike, *, strict_order: bool = False) -> SeriesSet:
    """Read meter readings into one series per (household, resource), sorted by time.

    A present reading whose value is not a number is kept as NaN so that
    preprocessing can drop it as an invalid tag. With ``strict_order`` rows of
    each key must already arrive in increasing time.
    """
    groups: dict[tuple[int, ResourceKind], list[tuple[np.datetime64, float, bool, int]]] = {}
    for line, row in _read_rows(path, READINGS_HEADER):
        if len(row) != len(READINGS_HEADER):
            raise MalformedRow(line, f"expected {len(READINGS_HEADER)} fields, got {len(row)}")
        hid, ts, resource = _key_fields(line, row)
        quality = row[4].strip()
        if quality == "present":
            try:
                value = float(row[3])
            except ValueError:
                value = math.nan
        elif quality == "missing":
            if row[3].strip():
                raise MalformedRow(line, "missing reading carries a value")
            value = math.nan
        else:
            raise MalformedRow(line, f"quality must be present or missing, not {quality!r}")
        key = (hid, resource)
        bucket = groups.setdefault(key, [])
        if strict_order and bucket and ts <= bucket[-1][0]:
            if ts == bucket[-1][0]:
                raise DuplicateTimestamp((hid, resource.csv_name, format_ts(ts)))
            raise NonMonotonicClock((hid, resource.csv_name))
        bucket.append((ts, value, quality == "present", line))

    out = {}
    for (hid, resource), rows in groups.items():
        rows.sort(key=lambda r: (r[0], r[3]))
        ts = np.array([r[0] for r in rows], dtype="datetime64[s]")
        dup = np.flatnonzero(ts[1:] == ts[:-1])
        if len(dup):
            raise DuplicateTimestamp((hid, resource.csv_name, format_ts(ts[dup[0]])))
        values = np.array([r[1] for r in rows], dtype=float)
        quality = np.array([r[2] for r in rows], dtype=bool)
        out[(hid, resource)] = ResourceSeries(hid, resource, ts, values, quality)
    return sorted_set(out)


def readings_csv(series: SeriesSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(READINGS_HEADER)
    for s in sorted_set(series).values():
        name = s.resource.csv_name
        for ts, v, q in zip(s.timestamps, s.values, s.quality):
            if q:
                w.writerow((s.household_id, format_ts(ts), name, format_float(v), "present"))
            else:
                w.writerow((s.household_id, format_ts(ts), name, "", "missing"))
    return buf.getvalue()


def write_csv(series: SeriesSet, path: str | os.PathLike) -> None:
    write_atomic(path, readings_csv(series))


def write_labels(labels: LabelSet, series: SeriesSet, path: str | os.PathLike) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LABELS_HEADER)
    for key, s in sorted_set(series).items():
        for ts, lab in zip(s.timestamps, labels[key]):
            w.writerow((s.household_id, format_ts(ts), s.resource.csv_name, Label(lab).name.lower()))
    write_atomic(path, buf.getvalue())


def read_labels(path: str | os.PathLike, series: SeriesSet) -> LabelSet:
    """Labels aligned to the timestamps of ``series``; every point must be labeled."""
    index = {key: {t: i for i, t in enumerate(s.timestamps.astype(np.int64))} for key, s in series.items()}
    out = {key: np.full(len(s), -1, dtype=np.int8) for key, s in series.items()}
    for line, row in _read_rows(path, LABELS_HEADER):
        if len(row) != len(LABELS_HEADER):
            raise MalformedRow(line, f"expected {len(LABELS_HEADER)} fields, got {len(row)}")
        hid, ts, resource = _key_fields(line, row)
        try:
            lab = Label[row[3].strip().upper()]
        except KeyError:
            raise MalformedRow(line, f"unknown label {row[3]!r}") from None
        pos = index.get((hid, resource), {}).get(int(ts.astype(np.int64)))
        if pos is None:
            raise MalformedRow(line, "label for a point that is not in the readings")
        out[(hid, resource)][pos] = lab
    for key, lab in out.items():
        if np.any(lab < 0):
            raise MalformedRow(0, f"labels do not cover series {key}")
    return out


def verdict_rows(verdicts) -> list[tuple]:
    """One row per (timestep, resource); imputed_value is empty on Normal steps."""
    rows = []
    for t in range(len(verdicts)):
        ts = format_ts(verdicts.timestamps[t])
        flag = int(verdicts.flags[t])
        e = format_float(verdicts.e[t])
        for r in RESOURCES:
            imp = verdicts.imputed[t, r]
            rows.append(
                (
                    verdicts.household_id,
                    ts,
                    r.csv_name,
                    e,
                    int(verdicts.o_lstm[t]),
                    Label(flag).name.lower(),
                    "" if np.isnan(imp) else format_float(imp),
                )
            )
    return rows


def write_verdicts(verdicts_list, path: str | os.PathLike) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VERDICT_HEADER)
    for v in verdicts_list:
        w.writerows(verdict_rows(v))
    write_atomic(path, buf.getvalue())


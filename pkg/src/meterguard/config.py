"""Run configuration: one dataclass per section, loadable from JSON."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from meterguard.data.synthetic import DEFAULT_START
from meterguard.errors import ValidationError
from meterguard.nn.training import TrainConfig
from meterguard.power.scheduler import SchedulerConfig
from meterguard.power.simulate import StorageConfig
from meterguard.tariff import TariffConfig


@dataclass(frozen=True)
class DataConfig:
    seed: int = 42
    households: int = 20
    days: int = 14
    start: str = DEFAULT_START
    outlier_rate: float = 0.006
    missing_rate: float = 0.002
    lof_k: int = 20
    lof_threshold: float = 1.5
    denoise_levels: int = 2
    window_len: int = 16
    stride: int = 2
    max_windows: int | None = 960  # cap on the shuffled normal-window pool

    def __post_init__(self):
        if self.households < 1 or self.days < 1:
            raise ValidationError("households and days must be at least 1")
        if self.window_len < 1 or self.stride < 1 or self.lof_k < 1:
            raise ValidationError("window_len, stride and lof_k must be positive")
        if self.max_windows is not None and self.max_windows < 2:
            raise ValidationError("max_windows must allow a train and a validation window")


SECTIONS = {
    "data": DataConfig,
    "train": TrainConfig,
    "tariff": TariffConfig,
    "storage": StorageConfig,
    "scheduler": SchedulerConfig,
}


@dataclass(frozen=True)
class Config:
    data: DataConfig = field(default_factory=DataConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    tariff: TariffConfig = field(default_factory=TariffConfig)
    storage: StorageConfig = field(default_factory=StorageConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ValidationError(f"unknown config sections: {sorted(unknown)}")
        return cls(**{name: _section(kind, d.get(name, {}), name) for name, kind in SECTIONS.items()})

    def to_dict(self) -> dict:
        return {name: section_dict(getattr(self, name)) for name in SECTIONS}

    def override(self, section: str, **values) -> "Config":
        """Replace keys of one section; ``None`` values are ignored."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        merged = {**section_dict(getattr(self, section)), **values}
        return dataclasses.replace(self, **{section: _section(SECTIONS[section], merged, section)})


def section_dict(obj) -> dict:
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return json.loads(json.dumps(dataclasses.asdict(obj)))  # tuples -> lists


def _section(kind, values: dict, name: str):
    if not isinstance(values, dict):
        raise ValidationError(f"config section {name!r} must be an object")
    allowed = {f.name for f in dataclasses.fields(kind)}
    unknown = set(values) - allowed
    if unknown:
        raise ValidationError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return kind(**values)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad {name!r} section: {exc}") from exc


def load_config(path: str | os.PathLike | None) -> Config:
    if path is None:
        return Config()
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ValidationError("config must be a JSON object")
    return Config.from_dict(d)

"""Run configuration."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

BUNDLED = ("topology1", "topology2")


class ConfigError(ValueError):
    """Invalid configuration value or missing input file."""


def bundled_path(name: str) -> Path:
    """Path of a file shipped in ``mlwdm/data`` (e.g. ``topology1.json``)."""
    return Path(str(resources.files("mlwdm.data").joinpath(name)))


def resolve_input(value: str, suffix: str) -> Path:
    """Existing file path, or the bundled data file named ``value + suffix``."""
    p = Path(value)
    if p.exists():
        return p
    bundled = bundled_path(value + suffix)
    if bundled.exists():
        return bundled
    raise ConfigError(f"input file not found: {value}")


@dataclass
class RunConfig:
    topology: str = ""
    traffic: str = ""
    traffic_models: str | None = None
    k: int = 3
    seed: int = 0
    hours: int = 24
    fda_enabled: bool = True
    fda_tol: float = 1e-4
    fda_max_passes: int = 10
    fda_period_s: float = 3600.0
    output_dir: str = "out"
    mean_holding_s: float = 300.0
    lightpath_capacity_gbps: float | None = None
    hourly_floor: float = 0.1
    full_audit_every: int = 10_000
    trace: bool = True
    force_trace: bool = False
    extra: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)} - {"extra"}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**dict(raw))

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_mapping(raw)

    def validate(self, check_paths: bool = True) -> "RunConfig":
        def positive(name, integer=False):
            v = getattr(self, name)
            ok = isinstance(v, int) and not isinstance(v, bool) if integer else isinstance(v, (int, float)) and not isinstance(v, bool)
            if not ok or v <= 0:
                raise ConfigError(f"{name} must be a positive {'integer' if integer else 'number'}, got {v!r}")

        for name in ("k", "hours", "fda_max_passes", "full_audit_every"):
            positive(name, integer=True)
        for name in ("fda_tol", "fda_period_s", "mean_holding_s"):
            positive(name)
        if self.lightpath_capacity_gbps is not None:
            positive("lightpath_capacity_gbps")
        if not 0 <= self.hourly_floor <= 1:
            raise ConfigError("hourly_floor must lie in [0, 1]")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if check_paths:
            if not self.topology:
                raise ConfigError("a topology path is required")
            if not self.traffic:
                raise ConfigError("a traffic matrix path is required")
            resolve_input(self.topology, ".json")
            resolve_input(self.traffic, ".csv")
            if self.traffic_models and not Path(self.traffic_models).exists():
                raise ConfigError(f"input file not found: {self.traffic_models}")
        return self

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d.pop("extra")
        return d

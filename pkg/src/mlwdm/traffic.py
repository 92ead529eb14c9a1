"""Multimedia traffic models and flow-session generation.

Three rate processes are provided, each sampled as a piecewise-constant
trace: on-off sources (unitary audio), MMPP-N superpositions of on-off
sources (aggregated audio), and the M/G/infinity input process with
Pareto holding times (video). The traffic matrix is embedded at flow level
as Poisson session arrivals whose reserved rate is the model's mean rate.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

HOUR_S = 3600.0
DEFAULT_FLOOR = 0.1
PEAK_LOCAL_HOUR = 14


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for the ``(seed, stream_id)`` pair."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,)))


@dataclass(frozen=True)
class OnOffParams:
    peak_gbps: float
    mean_on_s: float
    mean_off_s: float

    def __post_init__(self):
        if not (self.peak_gbps > 0 and self.mean_on_s > 0 and self.mean_off_s > 0):
            raise ValueError(f"on-off parameters must be positive: {self}")

    @property
    def p_on(self) -> float:
        return self.mean_on_s / (self.mean_on_s + self.mean_off_s)


@dataclass(frozen=True)
class MmppParams:
    n_sources: int
    per_source: OnOffParams

    def __post_init__(self):
        if self.n_sources < 1:
            raise ValueError("MMPP needs at least one source")


@dataclass(frozen=True)
class MgInfParams:
    lambda_per_s: float
    pareto_alpha: float = 1.5
    pareto_xmin_s: float = 1.0
    unit_gbps: float = 1.0

    def __post_init__(self):
        if not self.lambda_per_s > 0:
            raise ValueError("arrival rate must be positive")
        if not self.pareto_alpha > 1:
            raise ValueError("pareto_alpha must exceed 1 for a finite mean")
        if not (self.pareto_xmin_s > 0 and self.unit_gbps > 0):
            raise ValueError("pareto_xmin_s and unit_gbps must be positive")

    @property
    def mean_service_s(self) -> float:
        return self.pareto_alpha * self.pareto_xmin_s / (self.pareto_alpha - 1)


def onoff_mean_rate(p: OnOffParams) -> float:
    return p.peak_gbps * p.mean_on_s / (p.mean_on_s + p.mean_off_s)


def mmpp_mean_rate(p: MmppParams) -> float:
    return p.n_sources * onoff_mean_rate(p.per_source)


def mginf_mean_rate(p: MgInfParams) -> float:
    return p.lambda_per_s * p.mean_service_s * p.unit_gbps


@dataclass(frozen=True)
class RateTrace:
    """Rate ``rates[i]`` holds on ``[times[i], times[i+1])``; the last segment ends at ``horizon_s``."""

    times: np.ndarray
    rates: np.ndarray
    horizon_s: float

    def durations(self) -> np.ndarray:
        return np.diff(np.append(self.times, self.horizon_s))

    def time_average(self) -> float:
        return float(np.dot(self.rates, self.durations()) / self.horizon_s)

    def value_at(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.rates[max(i, 0)])

    def __len__(self) -> int:
        return len(self.times)


def _alternating_durations(p: OnOffParams, rng: np.random.Generator, horizon_s: float, start_on: bool):
    cycle = p.mean_on_s + p.mean_off_s
    chunk = int(2.2 * horizon_s / cycle) + 16
    means = np.array([p.mean_on_s, p.mean_off_s] if start_on else [p.mean_off_s, p.mean_on_s])
    parts, total = [], 0.0
    while total < horizon_s:
        d = rng.exponential(1.0, size=chunk) * np.resize(means, chunk)
        parts.append(d)
        total += float(d.sum())
        # keep the on/off phase aligned across chunks
        if chunk % 2:
            means = means[::-1]
    return np.concatenate(parts)


def sample_onoff_path(p: OnOffParams, rng: np.random.Generator, horizon_s: float) -> RateTrace:
    """Alternating exponential on/off periods, started in the stationary state."""
    if not horizon_s > 0:
        raise ValueError("horizon must be positive")
    start_on = bool(rng.random() < p.p_on)
    durations = _alternating_durations(p, rng, horizon_s, start_on)
    ends = np.cumsum(durations)
    n = int(np.searchsorted(ends, horizon_s, side="left")) + 1
    times = np.concatenate(([0.0], ends[: n - 1]))
    phase = np.arange(n) % 2 == 0
    on = phase if start_on else ~phase
    return RateTrace(times, np.where(on, p.peak_gbps, 0.0), horizon_s)


def _superpose(traces: Sequence[RateTrace], unit: float, horizon_s: float) -> RateTrace:
    """Sum of 0/unit traces, tracked as an integer count of active sources."""
    level0 = sum(int(round(t.rates[0] / unit)) for t in traces)
    times = np.concatenate([t.times[1:] for t in traces])
    steps = np.concatenate([np.sign(np.diff(t.rates)).astype(np.int64) for t in traces])
    order = np.argsort(times, kind="stable")
    times, counts = times[order], level0 + np.cumsum(steps[order])
    # coincident change points keep the last cumulative count
    keep = np.append(times[1:] != times[:-1], True) if len(times) else np.zeros(0, bool)
    times = np.concatenate(([0.0], times[keep]))
    counts = np.concatenate(([level0], counts[keep]))
    return RateTrace(times, counts * unit, horizon_s)


def sample_mmpp_path(p: MmppParams, rng: np.random.Generator, horizon_s: float) -> RateTrace:
    """Superposition of N on-off sources drawn one after another from ``rng``.

    Source i consumes the generator after source i-1, so with N=1 the trace
    is bit-identical to :func:`sample_onoff_path` on the same generator.
    """
    sources = [sample_onoff_path(p.per_source, rng, horizon_s) for _ in range(p.n_sources)]
    if p.n_sources == 1:
        return sources[0]
    return _superpose(sources, p.per_source.peak_gbps, horizon_s)


def sample_mginf_path(p: MgInfParams, rng: np.random.Generator, horizon_s: float) -> RateTrace:
    """Busy-server count of an M/G/infinity queue with Pareto services, times ``unit_gbps``.

    Arrivals start ``10 * E[S]`` before time zero; that warm-up is discarded.
    The queue enters the warm-up already in its stationary state, since
    Pareto sessions older than any finite warm-up would otherwise be lost.
    """
    if not horizon_s > 0:
        raise ValueError("horizon must be positive")
    warmup = 10.0 * p.mean_service_s
    n = int(rng.poisson(p.lambda_per_s * (warmup + horizon_s)))
    starts = np.sort(rng.uniform(-warmup, horizon_s, size=n))
    ends = starts + p.pareto_xmin_s * (1.0 + rng.pareto(p.pareto_alpha, size=n))
    # stationary backlog: Poisson(lambda * E[S]) sessions with equilibrium residual lives
    m = int(rng.poisson(p.lambda_per_s * p.mean_service_s))
    short = rng.random(m) < (p.pareto_alpha - 1) / p.pareto_alpha
    residual = np.where(
        short,
        rng.uniform(0.0, p.pareto_xmin_s, size=m),
        p.pareto_xmin_s * (1.0 + rng.pareto(p.pareto_alpha - 1, size=m)),
    )
    starts = np.concatenate((np.full(m, -warmup), starts))
    ends = np.concatenate((-warmup + residual, ends))
    level0 = int(np.count_nonzero((starts <= 0) & (ends > 0)))
    up = starts[starts > 0]
    down = ends[(ends > 0) & (ends < horizon_s)]
    times = np.concatenate((up, down))
    steps = np.concatenate((np.ones(len(up), np.int64), -np.ones(len(down), np.int64)))
    order = np.argsort(times, kind="stable")
    times, counts = times[order], level0 + np.cumsum(steps[order])
    return RateTrace(np.concatenate(([0.0], times)), np.concatenate(([level0], counts)) * p.unit_gbps, horizon_s)


def hourly_factor(hour_utc: int, tz_offset_h: int, floor: float = DEFAULT_FLOOR) -> float:
    """Diurnal activity multiplier peaking at 14:00 local and bottoming at 02:00."""
    local = (hour_utc + tz_offset_h) % 24
    return floor + (1.0 - floor) * (0.5 + 0.5 * math.cos(2 * math.pi * (local - PEAK_LOCAL_HOUR) / 24))


# ----------------------------------------------------------------------------
# Traffic matrix


@dataclass(frozen=True)
class TrafficModel:
    """A named model entry from the sidecar: one of the three processes."""

    kind: str
    params: OnOffParams | MmppParams | MgInfParams

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "TrafficModel":
        kind = raw.get("kind")
        try:
            if kind == "onoff":
                return cls(kind, OnOffParams(float(raw["peak_gbps"]), float(raw["mean_on_s"]), float(raw["mean_off_s"])))
            if kind == "mmpp":
                per = OnOffParams(float(raw["peak_gbps"]), float(raw["mean_on_s"]), float(raw["mean_off_s"]))
                return cls(kind, MmppParams(int(raw["n_sources"]), per))
            if kind == "mginf":
                return cls(
                    kind,
                    MgInfParams(
                        float(raw["lambda_per_s"]),
                        float(raw.get("pareto_alpha", 1.5)),
                        float(raw.get("pareto_xmin_s", 1.0)),
                        float(raw["unit_gbps"]),
                    ),
                )
        except KeyError as exc:
            raise ValueError(f"model of kind {kind!r} is missing {exc.args[0]!r}") from None
        raise ValueError(f"unknown model kind {kind!r}")

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        if isinstance(p, OnOffParams):
            return {"kind": "onoff", "peak_gbps": p.peak_gbps, "mean_on_s": p.mean_on_s, "mean_off_s": p.mean_off_s}
        if isinstance(p, MmppParams):
            s = p.per_source
            return {"kind": "mmpp", "n_sources": p.n_sources, "peak_gbps": s.peak_gbps, "mean_on_s": s.mean_on_s, "mean_off_s": s.mean_off_s}
        return {
            "kind": "mginf",
            "lambda_per_s": p.lambda_per_s,
            "pareto_alpha": p.pareto_alpha,
            "pareto_xmin_s": p.pareto_xmin_s,
            "unit_gbps": p.unit_gbps,
        }

    def mean_rate_gbps(self) -> float:
        if isinstance(self.params, OnOffParams):
            return onoff_mean_rate(self.params)
        if isinstance(self.params, MmppParams):
            return mmpp_mean_rate(self.params)
        return mginf_mean_rate(self.params)

    def sample(self, rng: np.random.Generator, horizon_s: float) -> RateTrace:
        if isinstance(self.params, OnOffParams):
            return sample_onoff_path(self.params, rng, horizon_s)
        if isinstance(self.params, MmppParams):
            return sample_mmpp_path(self.params, rng, horizon_s)
        return sample_mginf_path(self.params, rng, horizon_s)


@dataclass(frozen=True)
class TrafficMatrix:
    demand_gbps: np.ndarray
    tags: tuple[tuple[str | None, ...], ...]
    models: Mapping[str, TrafficModel]

    def __post_init__(self):
        d = self.demand_gbps
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"traffic matrix must be square, got shape {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("traffic demands must be finite and non-negative")
        if np.any(np.diag(d) != 0):
            raise ValueError("traffic matrix diagonal must be zero")
        n = d.shape[0]
        for s in range(n):
            for t in range(n):
                if d[s, t] > 0 and self.tags[s][t] not in self.models:
                    raise ValueError(f"entry ({s},{t}) uses unknown model {self.tags[s][t]!r}")

    @property
    def size(self) -> int:
        return self.demand_gbps.shape[0]

    def model_for(self, s: int, d: int) -> TrafficModel:
        return self.models[self.tags[s][d]]


def default_models_document() -> dict[str, Any]:
    with resources.files("mlwdm.data").joinpath("models_default.json").open(encoding="utf-8") as fh:
        return json.load(fh)


def matrix_from_arrays(demand, models_doc: Mapping[str, Any] | None = None) -> TrafficMatrix:
    """Build a matrix from an N x N array and a sidecar-style document."""
    demand = np.asarray(demand, dtype=float)
    doc = default_models_document() if models_doc is None else models_doc
    models = {name: TrafficModel.from_dict(raw) for name, raw in doc["models"].items()}
    default = doc.get("default", next(iter(models)))
    n = demand.shape[0] if demand.ndim == 2 else 0
    raw_tags = doc.get("tags")
    if raw_tags is None:
        tags = tuple(tuple(None if s == d else default for d in range(n)) for s in range(n))
    else:
        if len(raw_tags) != n or any(len(row) != n for row in raw_tags):
            raise ValueError(f"tags must be a {n} x {n} array")
        tags = tuple(tuple(None if s == d else (t or default) for d, t in enumerate(row)) for s, row in enumerate(raw_tags))
    return TrafficMatrix(demand, tags, models)


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".models.json")


def read_traffic(csv_path, models_path=None) -> TrafficMatrix:
    """Read an N x N CSV of Gbps plus its ``<stem>.models.json`` sidecar if present."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    try:
        demand = np.array([[float(c) for c in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{csv_path}: non-numeric cell ({exc})") from None
    if len({len(r) for r in rows}) > 1:
        raise ValueError(f"{csv_path}: ragged rows")
    models_path = Path(models_path) if models_path else sidecar_path(csv_path)
    doc = None
    if models_path.exists():
        with open(models_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    return matrix_from_arrays(demand, doc)


def write_traffic(matrix: TrafficMatrix, csv_path, extra: Mapping[str, Any] | None = None) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        for row in matrix.demand_gbps:
            writer.writerow([repr(float(v)) for v in row])
    doc = dict(extra or {})
    doc["models"] = {name: m.to_dict() for name, m in matrix.models.items()}
    doc["tags"] = [list(row) for row in matrix.tags]
    with open(sidecar_path(csv_path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class SessionRequest:
    time_s: float
    src: int
    dst: int
    reserved_gbps: float
    holding_s: float
    model: str


def session_arrival_rate(demand_gbps: float, factor: float, reserved_gbps: float, mean_holding_s: float) -> float:
    """Poisson rate giving ``factor * demand`` of reserved traffic on average (Little's law)."""
    return factor * demand_gbps / (mean_holding_s * reserved_gbps)


def spawn_flows(
    matrix: TrafficMatrix,
    hour: int,
    rng: np.random.Generator,
    mean_holding_s: float = 300.0,
    tz_offsets: Sequence[int] | None = None,
    floor: float = DEFAULT_FLOOR,
) -> list[SessionRequest]:
    """Session arrivals during ``[hour, hour + 1)`` for every non-zero matrix entry.

    The diurnal factor of an entry follows its source node's time zone.
    Entries are visited in row-major order; the result is sorted by time.
    """
    n = matrix.size
    tz = tz_offsets if tz_offsets is not None else [0] * n
    t0 = hour * HOUR_S
    out: list[SessionRequest] = []
    for s in range(n):
        for d in range(n):
            demand = float(matrix.demand_gbps[s, d])
            if demand <= 0:
                continue
            tag = matrix.tags[s][d]
            rate = matrix.models[tag].mean_rate_gbps()
            lam = session_arrival_rate(demand, hourly_factor(hour, tz[s], floor), rate, mean_holding_s)
            count = int(rng.poisson(lam * HOUR_S))
            times = t0 + np.sort(rng.uniform(0.0, HOUR_S, size=count))
            holds = rng.exponential(mean_holding_s, size=count)
            out.extend(SessionRequest(float(t), s, d, rate, float(h), tag) for t, h in zip(times, holds))
    out.sort(key=lambda r: r.time_s)
    return out

"""Deterministic event-driven simulation of the two-layer network.

Events are ordered by ``(time_s, seq)`` where ``seq`` is the insertion
counter, so a run is a pure function of its configuration and seed.
"""

from __future__ import annotations

import dataclasses
import enum
import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Any

from .admission import Decision, Flow, NetworkState, admit_flow, reclaim_empty, terminate_flow
from .config import RunConfig, resolve_input
from .fda import FdaReport, average_packet_delay, fda_reroute
from .topology import InvariantViolation, PhysicalTopology, read_topology
from .traffic import HOUR_S, TrafficMatrix, make_rng, read_traffic, spawn_flows

log = logging.getLogger(__name__)

TRACE_LIMIT = 1_000_000


class EventKind(enum.Enum):
    FLOW_ARRIVAL = "FlowArrival"
    FLOW_DEPARTURE = "FlowDeparture"
    HOUR_BOUNDARY = "HourBoundary"
    FDA_TRIGGER = "FdaTrigger"


@dataclass(frozen=True)
class Event:
    time_s: float
    seq: int
    kind: EventKind
    payload: Any = None


class EventQueue:
    def __init__(self):
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = 0
        self._last = (-math.inf, -1)

    def push(self, time_s: float, kind: EventKind, payload: Any = None) -> Event:
        if time_s < 0:
            raise ValueError("event time must be non-negative")
        ev = Event(time_s, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, (time_s, ev.seq, ev))
        return ev

    def pop(self) -> Event:
        _, _, ev = heapq.heappop(self._heap)
        key = (ev.time_s, ev.seq)
        if key < self._last:
            raise InvariantViolation(f"event {key} popped after {self._last}")
        self._last = key
        return ev

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class MetricsSnapshot:
    hour: int
    offered_flows: int = 0
    admitted_flows: int = 0
    blocked_flows: int = 0
    blocking_ratio: float = 0.0
    active_flows: int = 0
    active_lightpaths: int = 0
    lightpaths_established: int = 0
    lightpaths_released: int = 0
    wavelength_utilization: float = 0.0
    avg_packet_delay_s: float | None = None
    mean_virtual_hops: float | None = None
    fda_passes: int = 0
    fda_moves: int = 0
    fda_T_before: float | None = None
    fda_T_after: float | None = None


@dataclass(frozen=True)
class RoutingRow:
    flow_id: int
    src: int
    dst: int
    reserved_gbps: float
    lightpaths: tuple[int, ...]
    virtual_hops: int
    segments: tuple[tuple[int, tuple[int, ...], int], ...]  # (lightpath, fibers, wavelength)


def routing_table(state: NetworkState) -> list[RoutingRow]:
    rows = []
    for fid in sorted(state.flows):
        flow = state.flows[fid]
        ids = flow.route.lightpath_ids
        segs = tuple((i, state.vt.lightpaths[i].route, state.vt.lightpaths[i].wavelength) for i in ids)
        rows.append(RoutingRow(fid, flow.src, flow.dst, flow.reserved_gbps, ids, len(ids), segs))
    return rows


@dataclass
class SimResult:
    config: RunConfig
    seed: int
    snapshots: list[MetricsSnapshot]
    state: NetworkState
    routing_table: list[RoutingRow]
    trace: list[dict[str, Any]]
    events_processed: int = 0
    fast_audits: int = 0
    full_audits: int = 0
    fda_reports: list[FdaReport] = field(default_factory=list)
    decisions: dict[str, int] = field(default_factory=dict)


class Simulator:
    """One simulation run over a loaded topology and traffic matrix."""

    def __init__(self, topology: PhysicalTopology, matrix: TrafficMatrix, config: RunConfig, seed: int | None = None):
        if matrix.size != topology.num_nodes:
            raise ValueError(f"traffic matrix is {matrix.size}x{matrix.size} but topology has {topology.num_nodes} nodes")
        if config.lightpath_capacity_gbps is not None:
            topology = dataclasses.replace(topology, lightpath_capacity_gbps=float(config.lightpath_capacity_gbps))
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.matrix = matrix
        self.state = NetworkState(topology, config.k)
        self.queue = EventQueue()
        self.tz = [n.timezone_offset_h for n in topology.nodes]
        self.snapshots: list[MetricsSnapshot] = []
        self.trace: list[dict[str, Any]] = []
        self.fda_reports: list[FdaReport] = []
        self.decisions = {d.value: 0 for d in Decision}
        self.events = 0
        self.fast_audits = 0
        self.full_audits = 0
        self._next_flow = 0
        self._hour = MetricsSnapshot(hour=0)

    def _record(self, ev: Event, detail: dict[str, Any]) -> None:
        if not self.config.trace:
            return
        if len(self.trace) >= TRACE_LIMIT and not self.config.force_trace:
            return
        self.trace.append({"time_s": ev.time_s, "seq": ev.seq, "kind": ev.kind.value, "detail": detail})

    def _audit(self, touched=(), flow: Flow | None = None) -> None:
        problems = self.state.vt.fast_audit(touched)
        if flow is not None and flow.route is not None:
            prev = flow.src
            for lp_id in flow.route.lightpath_ids:
                lp = self.state.vt.lightpaths[lp_id]
                if lp.src != prev:
                    problems.append(f"flow {flow.id}: route breaks at lightpath {lp_id}")
                prev = lp.dst
            if prev != flow.dst:
                problems.append(f"flow {flow.id}: route ends at {prev}")
        self.fast_audits += 1
        if problems:
            raise InvariantViolation("; ".join(problems))
        if self.events % self.config.full_audit_every == 0:
            self._full_audit()

    def _full_audit(self) -> None:
        problems = self.state.full_audit()
        self.full_audits += 1
        if problems:
            raise InvariantViolation("; ".join(problems))

    def _on_arrival(self, ev: Event) -> list[int]:
        req = ev.payload
        flow = Flow(self._next_flow, req.src, req.dst, req.reserved_gbps, req.model)
        self._next_flow += 1
        outcome = admit_flow(self.state, flow)
        self._hour.offered_flows += 1
        self.decisions[outcome.decision.value] += 1
        detail = {
            "flow": flow.id,
            "src": flow.src,
            "dst": flow.dst,
            "reserved_gbps": flow.reserved_gbps,
            "model": flow.model,
            "decision": outcome.decision.value,
            "stage": outcome.stage,
            "attempts": outcome.attempts,
        }
        touched: list[int] = []
        if outcome.decision is Decision.BLOCKED:
            self._hour.blocked_flows += 1
        else:
            self._hour.admitted_flows += 1
            if outcome.new_lightpath is not None:
                self._hour.lightpaths_established += 1
                detail["new_lightpath"] = outcome.new_lightpath
            touched = list(outcome.route.lightpath_ids)
            detail["route"] = touched
            self.queue.push(ev.time_s + req.holding_s, EventKind.FLOW_DEPARTURE, flow.id)
        self._record(ev, detail)
        self._audit(touched, flow)
        return touched

    def _on_departure(self, ev: Event) -> None:
        fid = ev.payload
        touched = list(self.state.flows[fid].route.lightpath_ids)
        reclaimed = terminate_flow(self.state, fid)
        self._hour.lightpaths_released += len(reclaimed)
        self._record(ev, {"flow": fid, "reclaimed": reclaimed})
        self._audit(touched)

    def _on_fda(self, ev: Event) -> None:
        report = fda_reroute(self.state, self.config.fda_tol, self.config.fda_max_passes)
        released = reclaim_empty(self.state)
        self._hour.lightpaths_released += len(released)
        self._hour.fda_passes += report.passes
        self._hour.fda_moves += report.moves
        if self._hour.fda_T_before is None:
            self._hour.fda_T_before = report.T_before
        self._hour.fda_T_after = report.T_after
        self.fda_reports.append(report)
        self._record(
            ev,
            {
                "passes": report.passes,
                "moves": report.moves,
                "T_before": report.T_before,
                "T_after": report.T_after,
                "reclaimed": released,
            },
        )
        self._audit()
        self._full_audit()

    def _close_hour(self) -> None:
        snap = self._hour
        st = self.state
        if snap.offered_flows:
            snap.blocking_ratio = snap.blocked_flows / snap.offered_flows
        snap.active_flows = len(st.flows)
        snap.active_lightpaths = len(st.vt.lightpaths)
        snap.wavelength_utilization = st.vt.utilization()
        if st.flows:
            snap.avg_packet_delay_s = average_packet_delay(st.vt, st.flows)
            snap.mean_virtual_hops = math.fsum(f.route.virtual_hops for f in st.flows.values()) / len(st.flows)
        self.snapshots.append(snap)

    def _on_hour(self, ev: Event) -> bool:
        h = ev.payload
        if h > 0:
            self._close_hour()
            log.debug("hour %d closed: %s", h - 1, self.snapshots[-1])
        self._record(ev, {"hour": h})
        if h >= self.config.hours:
            return False
        self._hour = MetricsSnapshot(hour=h)
        rng = make_rng(self.seed, h)
        for req in spawn_flows(self.matrix, h, rng, self.config.mean_holding_s, self.tz, self.config.hourly_floor):
            self.queue.push(req.time_s, EventKind.FLOW_ARRIVAL, req)
        self._audit()
        return True

    def run(self) -> SimResult:
        horizon = self.config.hours * HOUR_S
        if self.config.fda_enabled:
            n = int(math.floor(horizon / self.config.fda_period_s + 1e-9))
            for i in range(1, n + 1):
                self.queue.push(i * self.config.fda_period_s, EventKind.FDA_TRIGGER)
        for h in range(self.config.hours + 1):
            self.queue.push(h * HOUR_S, EventKind.HOUR_BOUNDARY, h)

        while self.queue:
            ev = self.queue.pop()
            self.events += 1
            if ev.kind is EventKind.FLOW_ARRIVAL:
                self._on_arrival(ev)
            elif ev.kind is EventKind.FLOW_DEPARTURE:
                self._on_departure(ev)
            elif ev.kind is EventKind.FDA_TRIGGER:
                self._on_fda(ev)
            elif not self._on_hour(ev):
                break
        self._full_audit()
        return SimResult(
            config=self.config,
            seed=self.seed,
            snapshots=self.snapshots,
            state=self.state,
            routing_table=routing_table(self.state),
            trace=self.trace,
            events_processed=self.events,
            fast_audits=self.fast_audits,
            full_audits=self.full_audits,
            fda_reports=self.fda_reports,
            decisions=self.decisions,
        )


def run(config: RunConfig, seed: int | None = None) -> SimResult:
    """Load inputs named by ``config`` and simulate ``config.hours`` hours."""
    config.validate()
    topology = read_topology(resolve_input(config.topology, ".json"))
    matrix = read_traffic(resolve_input(config.traffic, ".csv"), config.traffic_models)
    return Simulator(topology, matrix, config, seed).run()

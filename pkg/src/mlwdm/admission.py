"""Online flow admission over the two-layer network.

An arriving flow is first groomed onto existing lightpaths. Failing that,
the cascade tries to open exactly one new lightpath: direct, then from a
neighbour already reachable from the source, then towards a neighbour
that already reaches the destination. Departing flows release their load
and any lightpath left carrying nothing is torn down.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .routing import (
    PhysicalRoute,
    VirtualRoute,
    cspf_virtual_route,
    first_fit_wavelength,
    has_room,
    k_shortest_paths,
    make_virtual_route,
)
from .topology import Lightpath, PhysicalTopology, VirtualTopology

DEFAULT_K = 3


class FlowState(enum.Enum):
    ACTIVE = "Active"
    BLOCKED = "Blocked"
    DEPARTED = "Departed"


class Decision(enum.Enum):
    ROUTED_EXISTING = "RoutedExisting"
    ROUTED_NEW_DIRECT = "RoutedNewDirect"
    ROUTED_VIA_SOURCE_ADJACENT = "RoutedViaSourceAdjacent"
    ROUTED_VIA_DESTINATION_ADJACENT = "RoutedViaDestinationAdjacent"
    BLOCKED = "Blocked"


class Failure(enum.Enum):
    NO_TRANSMITTER = "NoTransmitter"
    NO_RECEIVER = "NoReceiver"
    NO_WAVELENGTH = "NoWavelength"
    NO_PATH = "NoPath"


class FlowStateError(LookupError):
    """Unknown flow id, or a flow that is not in the expected state."""


@dataclass
class Flow:
    id: int
    src: int
    dst: int
    reserved_gbps: float
    model: str = "audio-unitary"
    route: VirtualRoute | None = None
    state: FlowState = FlowState.ACTIVE


@dataclass
class AdmissionOutcome:
    decision: Decision
    route: VirtualRoute | None = None
    new_lightpath: int | None = None
    stage: int = 5
    attempts: list[str] = field(default_factory=list)


class NetworkState:
    """Physical topology, live virtual topology and the active flows."""

    def __init__(self, physical: PhysicalTopology, k: int = DEFAULT_K):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.physical = physical
        self.vt = VirtualTopology(physical)
        self.flows: dict[int, Flow] = {}
        self.k = k
        self.next_lightpath_id = 0
        self._ksp: dict[tuple[int, int, int], list[PhysicalRoute]] = {}

    @property
    def capacity_gbps(self) -> float:
        return self.physical.lightpath_capacity_gbps

    def candidate_routes(self, s: int, d: int, k: int | None = None) -> list[PhysicalRoute]:
        key = (s, d, k or self.k)
        if key not in self._ksp:
            self._ksp[key] = k_shortest_paths(self.physical, s, d, key[2])
        return self._ksp[key]

    def flow_rates(self) -> dict[int, float]:
        return {fid: f.reserved_gbps for fid, f in self.flows.items()}

    def refresh_load(self, lp: Lightpath) -> None:
        lp.carried_gbps = math.fsum(self.flows[f].reserved_gbps for f in sorted(lp.flows))

    def full_audit(self) -> list[str]:
        problems = self.vt.full_audit(self.flow_rates())
        for fid, flow in self.flows.items():
            if flow.state is not FlowState.ACTIVE or flow.route is None:
                problems.append(f"flow {fid}: stored but not active")
                continue
            prev = flow.src
            for lp_id in flow.route.lightpath_ids:
                lp = self.vt.lightpaths.get(lp_id)
                if lp is None:
                    problems.append(f"flow {fid}: route uses missing lightpath {lp_id}")
                    break
                if fid not in lp.flows:
                    problems.append(f"flow {fid}: not listed on lightpath {lp_id}")
                if lp.src != prev:
                    problems.append(f"flow {fid}: route breaks at lightpath {lp_id}")
                prev = lp.dst
            if prev != flow.dst:
                problems.append(f"flow {fid}: route ends at {prev}, not {flow.dst}")
        return problems

    def snapshot(self) -> tuple:
        """Hashable picture of the mutable state, for equality checks."""
        lps = tuple(
            (lp.id, lp.src, lp.dst, lp.route, lp.wavelength, lp.carried_gbps, tuple(sorted(lp.flows)))
            for lp in sorted(self.vt.lightpaths.values(), key=lambda x: x.id)
        )
        flows = tuple(
            (f.id, f.route.lightpath_ids if f.route else None) for f in sorted(self.flows.values(), key=lambda x: x.id)
        )
        return lps, tuple(sorted(self.vt.occupancy.items())), tuple(self.vt.tx_used), tuple(self.vt.rx_used), flows


def establish_lightpath(state: NetworkState, s: int, d: int, k: int | None = None) -> Lightpath | Failure:
    """Open a lightpath s->d on the first of the k shortest routes with a free wavelength."""
    if s == d:
        raise ValueError("lightpath endpoints must differ")
    phys = state.physical
    if state.vt.tx_used[s] >= phys.max_transmitters[s]:
        return Failure.NO_TRANSMITTER
    if state.vt.rx_used[d] >= phys.max_receivers[d]:
        return Failure.NO_RECEIVER
    routes = state.candidate_routes(s, d, k)
    if not routes:
        return Failure.NO_PATH
    for route in routes:
        w = first_fit_wavelength(phys, state.vt.occupancy, route)
        if w is None:
            continue
        lp = Lightpath(
            id=state.next_lightpath_id,
            src=s,
            dst=d,
            route=route.links,
            wavelength=w,
            capacity_gbps=state.capacity_gbps,
            length_km=route.length_km,
        )
        state.next_lightpath_id += 1
        state.vt.add(lp)
        return lp
    return Failure.NO_WAVELENGTH


def _rollback(state: NetworkState, lp: Lightpath) -> None:
    state.vt.remove(lp.id)
    if lp.id == state.next_lightpath_id - 1:
        state.next_lightpath_id -= 1


def _best_existing(pool, far_end, rate: float) -> dict[int, Lightpath]:
    """Per far-end node, the lightpath with room and the smallest (delay, id)."""
    best: dict[int, Lightpath] = {}
    for lp in sorted(pool, key=lambda x: (x.delay_s, x.id)):
        if has_room(lp, rate):
            best.setdefault(far_end(lp), lp)
    return best


def _via_neighbour(state: NetworkState, flow: Flow, k: int | None, from_source: bool, attempts: list[str]):
    """Stages 3 and 4: extend an existing lightpath with one new lightpath.

    Each candidate is opened tentatively and rolled back so that every node
    is judged against the same base state; the winner is then reopened.
    """
    vt = state.vt
    rate = flow.reserved_gbps
    if from_source:
        pool = [lp for lp in vt.lightpaths.values() if lp.src == flow.src and lp.dst != flow.dst]
        existing = _best_existing(pool, lambda lp: lp.dst, rate)
    else:
        pool = [lp for lp in vt.lightpaths.values() if lp.dst == flow.dst and lp.src != flow.src]
        existing = _best_existing(pool, lambda lp: lp.src, rate)

    tag = "via-source" if from_source else "via-destination"
    best = None
    for node in sorted(existing):
        s, d = (node, flow.dst) if from_source else (flow.src, node)
        trial = establish_lightpath(state, s, d, k)
        if isinstance(trial, Failure):
            attempts.append(f"{tag}[{node}]:{trial.value}")
            continue
        delay = existing[node].delay_s + trial.delay_s
        attempts.append(f"{tag}[{node}]:ok delay={delay!r}")
        if best is None or delay < best[0]:
            best = (delay, node, trial.route, trial.wavelength)
        _rollback(state, trial)
    if best is None:
        attempts.append(f"{tag}:none")
        return None
    _, node, route, wavelength = best
    s, d = (node, flow.dst) if from_source else (flow.src, node)
    new = establish_lightpath(state, s, d, k)
    assert isinstance(new, Lightpath) and new.route == route and new.wavelength == wavelength
    ids = (existing[node].id, new.id) if from_source else (new.id, existing[node].id)
    return new, ids


def _commit(state: NetworkState, flow: Flow, ids) -> VirtualRoute:
    route = make_virtual_route(state.vt, ids)
    flow.route = route
    flow.state = FlowState.ACTIVE
    state.flows[flow.id] = flow
    for lp_id in ids:
        lp = state.vt.lightpaths[lp_id]
        lp.flows.add(flow.id)
        state.refresh_load(lp)
    return route


def admit_flow(state: NetworkState, flow: Flow, k: int | None = None) -> AdmissionOutcome:
    """Run the five-stage admission cascade, committing the first success."""
    if flow.id in state.flows:
        raise FlowStateError(f"flow {flow.id} is already active")
    attempts: list[str] = []
    if not flow.reserved_gbps > 0:
        raise ValueError(f"flow {flow.id}: reserved rate must be positive")
    if flow.reserved_gbps > state.capacity_gbps:
        attempts.append("precheck:rate exceeds lightpath capacity")
        flow.route, flow.state = None, FlowState.BLOCKED
        return AdmissionOutcome(Decision.BLOCKED, stage=5, attempts=attempts)

    route = cspf_virtual_route(state.vt, flow.src, flow.dst, flow.reserved_gbps)
    if route is not None:
        attempts.append(f"existing:ok hops={route.virtual_hops}")
        route = _commit(state, flow, route.lightpath_ids)
        return AdmissionOutcome(Decision.ROUTED_EXISTING, route, None, 1, attempts)
    attempts.append("existing:none")

    direct = establish_lightpath(state, flow.src, flow.dst, k)
    if isinstance(direct, Lightpath):
        attempts.append(f"direct:ok lightpath={direct.id}")
        route = _commit(state, flow, (direct.id,))
        return AdmissionOutcome(Decision.ROUTED_NEW_DIRECT, route, direct.id, 2, attempts)
    attempts.append(f"direct:{direct.value}")

    for stage, from_source, decision in (
        (3, True, Decision.ROUTED_VIA_SOURCE_ADJACENT),
        (4, False, Decision.ROUTED_VIA_DESTINATION_ADJACENT),
    ):
        found = _via_neighbour(state, flow, k, from_source, attempts)
        if found is not None:
            new, ids = found
            route = _commit(state, flow, ids)
            return AdmissionOutcome(decision, route, new.id, stage, attempts)

    flow.route, flow.state = None, FlowState.BLOCKED
    return AdmissionOutcome(Decision.BLOCKED, stage=5, attempts=attempts)


def terminate_flow(state: NetworkState, flow_id: int) -> list[int]:
    """Remove an active flow; returns ids of lightpaths torn down because they emptied."""
    flow = state.flows.get(flow_id)
    if flow is None:
        raise FlowStateError(f"flow {flow_id} is not active")
    del state.flows[flow_id]
    flow.state = FlowState.DEPARTED
    reclaimed = []
    for lp_id in flow.route.lightpath_ids:
        lp = state.vt.lightpaths[lp_id]
        lp.flows.discard(flow_id)
        if lp.flows:
            state.refresh_load(lp)
        else:
            lp.carried_gbps = 0.0
            state.vt.remove(lp_id)
            reclaimed.append(lp_id)
    return reclaimed


def reclaim_empty(state: NetworkState) -> list[int]:
    """Tear down every lightpath that carries no flow."""
    empty = sorted(lp.id for lp in state.vt.lightpaths.values() if not lp.flows)
    for lp_id in empty:
        state.vt.remove(lp_id)
    return empty

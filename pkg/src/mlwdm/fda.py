"""Network-wide average packet delay and flow-deviation rebalancing.

Each lightpath is an M/M/1 queue whose service rate is its capacity, with
rates in Gbps read as normalized packet rates (packet length absorbed into
the capacity). The average delay is

    T = (1/gamma) * sum_e [ f_e / (C_e - f_e) + f_e * prop_e ]

where gamma is the total reserved rate of active flows. Flows are atomic,
so the rebalancer moves whole flows, one at a time, onto cheaper paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .admission import Flow, NetworkState
from .routing import CAPACITY_EPS, make_virtual_route, shortest_path
from .topology import Lightpath, VirtualTopology


class NoTrafficError(ValueError):
    def __init__(self):
        super().__init__("no traffic")


def lightpath_term(capacity: float, load: float, prop_s: float) -> float:
    """Contribution of one lightpath to gamma * T."""
    if load <= 0:
        return 0.0
    if load >= capacity:
        return math.inf
    return load / (capacity - load) + load * prop_s


def marginal_delay_length(C: float, f: float, prop: float) -> float:
    """Derivative of a lightpath's delay term with respect to its load."""
    if f < 0:
        raise ValueError("load must be non-negative")
    if f >= C:
        return math.inf
    return C / (C - f) ** 2 + prop


def _total_rate(flows) -> float:
    if isinstance(flows, Mapping):
        flows = flows.values()
    return math.fsum(f.reserved_gbps for f in flows)


def average_packet_delay(vt: VirtualTopology, flows: Mapping[int, Flow] | Iterable[Flow]) -> float:
    gamma = _total_rate(flows)
    if gamma <= 0:
        raise NoTrafficError()
    return _delay_sum(vt.lightpaths.values()) / gamma


def _delay_sum(lightpaths: Iterable[Lightpath], loads: Mapping[int, float] | None = None) -> float:
    terms = []
    for lp in lightpaths:
        f = lp.carried_gbps if loads is None else loads[lp.id]
        terms.append(lightpath_term(lp.capacity_gbps, f, lp.delay_s))
    if any(math.isinf(t) for t in terms):
        return math.inf
    return math.fsum(terms)


@dataclass
class FdaReport:
    passes: int = 0
    T_before: float | None = None
    T_after: float | None = None
    moves: int = 0
    history: list[float] = field(default_factory=list)
    converged: bool = False


def _cheapest(vt: VirtualTopology, loads, src: int, dst: int, rate: float, weight) -> tuple[int, ...] | None:
    adj: dict[int, list] = {}
    for lp in vt.lightpaths.values():
        f = loads[lp.id]
        if lp.capacity_gbps - f < rate - CAPACITY_EPS or f + rate >= lp.capacity_gbps:
            continue
        adj.setdefault(lp.src, []).append((lp.id, lp.dst, weight(lp, f)))
    found = shortest_path(adj, src, dst)
    return found[1] if found else None


def fda_reroute(state: NetworkState, tol: float = 1e-4, max_passes: int = 10) -> FdaReport:
    """Move flows one at a time while each move cuts T by more than ``tol * T``.

    For every flow (largest first, then by id) the flow is lifted off its
    route and two candidate paths are computed over lightpaths that could
    still carry it: the shortest under marginal delay lengths, and the
    shortest under the exact delay increment the flow would cause. The
    better candidate is taken if it improves T enough. Lightpath set and
    wavelengths are left untouched.
    """
    vt = state.vt
    report = FdaReport()
    gamma = _total_rate(state.flows)
    if gamma <= 0:
        report.converged = True
        return report
    loads = {lp.id: lp.carried_gbps for lp in vt.lightpaths.values()}
    D = _delay_sum(vt.lightpaths.values(), loads)
    report.T_before = D / gamma
    order = sorted(state.flows.values(), key=lambda f: (-f.reserved_gbps, f.id))

    while report.passes < max_passes:
        report.passes += 1
        moved = 0
        for flow in order:
            r = flow.reserved_gbps
            old = flow.route.lightpath_ids
            for lp_id in old:
                loads[lp_id] -= r
            lifted = D - math.fsum(
                lightpath_term(vt.lightpaths[i].capacity_gbps, loads[i] + r, vt.lightpaths[i].delay_s)
                - lightpath_term(vt.lightpaths[i].capacity_gbps, loads[i], vt.lightpaths[i].delay_s)
                for i in old
            )

            def increment(lp, f):
                return lightpath_term(lp.capacity_gbps, f + r, lp.delay_s) - lightpath_term(lp.capacity_gbps, f, lp.delay_s)

            candidates = {
                _cheapest(vt, loads, flow.src, flow.dst, r, lambda lp, f: marginal_delay_length(lp.capacity_gbps, f, lp.delay_s)),
                _cheapest(vt, loads, flow.src, flow.dst, r, increment),
            }
            best, best_D = None, D
            for path in sorted(c for c in candidates if c is not None and c != old):
                new_D = lifted + math.fsum(increment(vt.lightpaths[i], loads[i]) for i in path)
                if new_D < best_D:
                    best, best_D = path, new_D
            if best is not None and D - best_D > tol * D:
                for lp_id in old:
                    vt.lightpaths[lp_id].flows.discard(flow.id)
                for lp_id in best:
                    vt.lightpaths[lp_id].flows.add(flow.id)
                for lp_id in set(old) | set(best):
                    state.refresh_load(vt.lightpaths[lp_id])
                    loads[lp_id] = vt.lightpaths[lp_id].carried_gbps
                flow.route = make_virtual_route(vt, best)
                D = _delay_sum(vt.lightpaths.values(), loads)
                moved += 1
            else:
                for lp_id in old:
                    loads[lp_id] = vt.lightpaths[lp_id].carried_gbps
        report.moves += moved
        report.history.append(D / gamma)
        if moved == 0:
            report.converged = True
            break
    report.T_after = _delay_sum(vt.lightpaths.values()) / gamma
    return report

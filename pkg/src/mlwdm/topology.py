"""Physical and virtual layer data model.

The physical layer is a directed fiber graph whose nodes sit on a Euclidean
plane (kilometres). The virtual layer is the set of live lightpaths, each
pinned to one wavelength index along its whole physical route, plus the
per-fiber wavelength occupancy and per-node transceiver counters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

SPEED_IN_FIBER_KM_S = 200_000.0
DEFAULT_LIGHTPATH_CAPACITY_GBPS = 10.0


class TopologyError(ValueError):
    """Raised when a topology document violates a structural rule."""


class InvariantViolation(AssertionError):
    """Raised when an audit of the virtual topology finds inconsistent state."""


def exact_units(x: float) -> int:
    """``x`` as an exact integer count of 2**-1074 (the smallest float step)."""
    num, den = float(x).as_integer_ratio()
    return num << (1074 - den.bit_length() + 1)


def propagation_delay_s(length_km: float) -> float:
    """Return the one-way propagation delay over ``length_km`` of fiber."""
    if length_km < 0:
        raise ValueError(f"negative fiber length: {length_km}")
    return length_km / SPEED_IN_FIBER_KM_S


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    x_km: float
    y_km: float
    population: int = 0
    node_type: str = ""
    timezone_offset_h: int = 0


@dataclass(frozen=True)
class FiberLink:
    id: int
    src: int
    dst: int
    num_wavelengths: int
    length_km: float


@dataclass(frozen=True)
class PhysicalTopology:
    nodes: tuple[Node, ...]
    links: tuple[FiberLink, ...]
    max_transmitters: tuple[int, ...]
    max_receivers: tuple[int, ...]
    lightpath_capacity_gbps: float = DEFAULT_LIGHTPATH_CAPACITY_GBPS

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_links(self) -> int:
        return len(self.links)

    @property
    def total_wavelength_slots(self) -> int:
        return sum(link.num_wavelengths for link in self.links)

    def out_links(self, node: int) -> list[FiberLink]:
        return [link for link in self.links if link.src == node]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise TopologyError(msg)


def _finite(value: Any, what: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise TopologyError(f"{what}: not a number ({value!r})") from None
    _require(math.isfinite(x), f"{what}: non-finite coordinate {value!r}")
    return x


def load_topology(document: Mapping[str, Any]) -> PhysicalTopology:
    """Build a validated :class:`PhysicalTopology` from a parsed JSON document.

    Link lengths are derived from node coordinates. A link that carries an
    explicit ``length_km`` must agree with the geometry to 1e-9 relative.
    """
    _require(isinstance(document, Mapping), "topology document must be a JSON object")
    raw_nodes = document.get("nodes")
    raw_links = document.get("links")
    _require(isinstance(raw_nodes, list) and raw_nodes, "topology needs a non-empty 'nodes' array")
    _require(isinstance(raw_links, list), "topology needs a 'links' array")

    by_id: dict[int, Node] = {}
    seen_coords: dict[tuple[float, float], int] = {}
    for raw in raw_nodes:
        nid = raw.get("id")
        _require(isinstance(nid, int) and not isinstance(nid, bool), f"node id must be an integer: {nid!r}")
        _require(nid not in by_id, f"duplicate node id {nid}")
        x = _finite(raw.get("x_km"), f"node {nid} x_km")
        y = _finite(raw.get("y_km"), f"node {nid} y_km")
        _require((x, y) not in seen_coords, f"node {nid} shares coordinates with node {seen_coords.get((x, y))}")
        seen_coords[(x, y)] = nid
        pop = raw.get("population", 0)
        _require(isinstance(pop, int) and pop >= 0, f"node {nid} population must be a non-negative integer")
        tz = raw.get("timezone_offset_h", 0)
        _require(isinstance(tz, int) and -12 <= tz <= 14, f"node {nid} timezone_offset_h out of [-12, 14]")
        by_id[nid] = Node(
            id=nid,
            name=str(raw.get("name", f"n{nid}")),
            x_km=x,
            y_km=y,
            population=pop,
            node_type=str(raw.get("type", "")),
            timezone_offset_h=tz,
        )
    n = len(by_id)
    _require(sorted(by_id) == list(range(n)), f"node ids must be exactly 0..{n - 1}")
    nodes = tuple(by_id[i] for i in range(n))

    links_by_id: dict[int, FiberLink] = {}
    for raw in raw_links:
        lid = raw.get("id")
        _require(isinstance(lid, int) and not isinstance(lid, bool), f"link id must be an integer: {lid!r}")
        _require(lid not in links_by_id, f"duplicate link id {lid}")
        src, dst = raw.get("src"), raw.get("dst")
        for end in (src, dst):
            _require(end in by_id, f"link {lid}: unknown endpoint {end!r}")
        _require(src != dst, f"link {lid}: src equals dst ({src})")
        w = raw.get("num_wavelengths")
        _require(isinstance(w, int) and not isinstance(w, bool) and w >= 1, f"link {lid}: num_wavelengths must be >= 1")
        a, b = by_id[src], by_id[dst]
        length = math.hypot(b.x_km - a.x_km, b.y_km - a.y_km)
        if raw.get("length_km") is not None:
            given = _finite(raw["length_km"], f"link {lid} length_km")
            _require(
                math.isclose(given, length, rel_tol=1e-9, abs_tol=0.0),
                f"link {lid}: explicit length_km {given} conflicts with geometry {length}",
            )
        links_by_id[lid] = FiberLink(lid, src, dst, w, length)
    m = len(links_by_id)
    _require(sorted(links_by_id) == list(range(m)), f"link ids must be exactly 0..{m - 1}")
    links = tuple(links_by_id[i] for i in range(m))

    tx = _per_node_counts(document.get("max_transmitters"), n, "max_transmitters")
    rx = _per_node_counts(document.get("max_receivers"), n, "max_receivers")
    cap = _finite(document.get("lightpath_capacity_gbps", DEFAULT_LIGHTPATH_CAPACITY_GBPS), "lightpath_capacity_gbps")
    _require(cap > 0, "lightpath_capacity_gbps must be positive")
    return PhysicalTopology(nodes, links, tx, rx, cap)


def _per_node_counts(raw: Any, n: int, what: str) -> tuple[int, ...]:
    if isinstance(raw, int) and not isinstance(raw, bool):
        raw = [raw] * n
    _require(isinstance(raw, list) and len(raw) == n, f"{what} must be an array of {n} integers")
    for i, v in enumerate(raw):
        _require(isinstance(v, int) and not isinstance(v, bool) and v >= 0, f"{what}[{i}] must be a non-negative integer")
    return tuple(raw)


def dump_topology(topo: PhysicalTopology) -> dict[str, Any]:
    """Serialize to the same document layout that :func:`load_topology` reads."""
    return {
        "nodes": [
            {
                "id": nd.id,
                "name": nd.name,
                "x_km": nd.x_km,
                "y_km": nd.y_km,
                "population": nd.population,
                "type": nd.node_type,
                "timezone_offset_h": nd.timezone_offset_h,
            }
            for nd in topo.nodes
        ],
        "links": [
            {"id": ln.id, "src": ln.src, "dst": ln.dst, "num_wavelengths": ln.num_wavelengths}
            for ln in topo.links
        ],
        "max_transmitters": list(topo.max_transmitters),
        "max_receivers": list(topo.max_receivers),
        "lightpath_capacity_gbps": topo.lightpath_capacity_gbps,
    }


def read_topology(path) -> PhysicalTopology:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TopologyError(f"{path}: invalid JSON ({exc})") from None
    return load_topology(doc)


@dataclass
class Lightpath:
    id: int
    src: int
    dst: int
    route: tuple[int, ...]
    wavelength: int
    capacity_gbps: float
    length_km: float
    carried_gbps: float = 0.0
    flows: set[int] = field(default_factory=set)

    @property
    def delay_s(self) -> float:
        return propagation_delay_s(self.length_km)

    @cached_property
    def delay_units(self) -> int:
        return exact_units(self.delay_s)

    @property
    def residual_gbps(self) -> float:
        return self.capacity_gbps - self.carried_gbps


class VirtualTopology:
    """Live lightpaths with wavelength occupancy and transceiver bookkeeping.

    All mutation goes through :meth:`add` and :meth:`remove` so the
    occupancy map and counters never drift from the lightpath set.
    """

    def __init__(self, physical: PhysicalTopology):
        self.physical = physical
        self.lightpaths: dict[int, Lightpath] = {}
        self.occupancy: dict[tuple[int, int], int] = {}
        self.tx_used = [0] * physical.num_nodes
        self.rx_used = [0] * physical.num_nodes

    def add(self, lp: Lightpath) -> None:
        if lp.id in self.lightpaths:
            raise InvariantViolation(f"lightpath {lp.id} already registered")
        for fid in lp.route:
            if (fid, lp.wavelength) in self.occupancy:
                raise InvariantViolation(f"fiber {fid} wavelength {lp.wavelength} already occupied")
        for fid in lp.route:
            self.occupancy[(fid, lp.wavelength)] = lp.id
        self.tx_used[lp.src] += 1
        self.rx_used[lp.dst] += 1
        self.lightpaths[lp.id] = lp

    def remove(self, lp_id: int) -> Lightpath:
        lp = self.lightpaths.pop(lp_id)
        for fid in lp.route:
            del self.occupancy[(fid, lp.wavelength)]
        self.tx_used[lp.src] -= 1
        self.rx_used[lp.dst] -= 1
        return lp

    def utilization(self) -> float:
        total = self.physical.total_wavelength_slots
        return len(self.occupancy) / total if total else 0.0

    def fast_audit(self, touched: Iterable[int] = ()) -> list[str]:
        """Cheap consistency checks: global counters plus the touched lightpaths."""
        problems = []
        n_lp = len(self.lightpaths)
        if sum(self.tx_used) != n_lp or sum(self.rx_used) != n_lp:
            problems.append(f"transceiver totals {sum(self.tx_used)}/{sum(self.rx_used)} != {n_lp} lightpaths")
        for node in range(self.physical.num_nodes):
            if self.tx_used[node] > self.physical.max_transmitters[node]:
                problems.append(f"node {node}: tx_used exceeds limit")
            if self.rx_used[node] > self.physical.max_receivers[node]:
                problems.append(f"node {node}: rx_used exceeds limit")
        for lp_id in touched:
            lp = self.lightpaths.get(lp_id)
            if lp is not None:
                problems.extend(_check_load(lp))
        return problems

    def full_audit(self, flow_rates: Mapping[int, float] | None = None) -> list[str]:
        """Recompute every derived quantity from the lightpath set and compare.

        ``flow_rates`` maps active flow id to reserved rate; when given, each
        lightpath's carried load is checked against the sum over its flows.
        """
        problems = []
        links = self.physical.links
        occ: dict[tuple[int, int], int] = {}
        tx = [0] * self.physical.num_nodes
        rx = [0] * self.physical.num_nodes
        for lp_id, lp in self.lightpaths.items():
            if lp_id != lp.id:
                problems.append(f"lightpath key {lp_id} != id {lp.id}")
            if not lp.route:
                problems.append(f"lightpath {lp.id}: empty route")
                continue
            if links[lp.route[0]].src != lp.src or links[lp.route[-1]].dst != lp.dst:
                problems.append(f"lightpath {lp.id}: route endpoints do not match src/dst")
            for a, b in zip(lp.route, lp.route[1:]):
                if links[a].dst != links[b].src:
                    problems.append(f"lightpath {lp.id}: route not contiguous at fibers {a}->{b}")
            length = math.fsum(links[f].length_km for f in lp.route)
            if not math.isclose(length, lp.length_km, rel_tol=1e-9, abs_tol=1e-12):
                problems.append(f"lightpath {lp.id}: stored length {lp.length_km} != {length}")
            for fid in lp.route:
                if not 0 <= lp.wavelength < links[fid].num_wavelengths:
                    problems.append(f"lightpath {lp.id}: wavelength {lp.wavelength} invalid on fiber {fid}")
                if (fid, lp.wavelength) in occ:
                    problems.append(f"fiber {fid} wavelength {lp.wavelength} used twice")
                occ[(fid, lp.wavelength)] = lp.id
            tx[lp.src] += 1
            rx[lp.dst] += 1
            problems.extend(_check_load(lp))
            if flow_rates is not None:
                missing = [f for f in lp.flows if f not in flow_rates]
                if missing:
                    problems.append(f"lightpath {lp.id}: carries unknown flows {sorted(missing)}")
                expected = math.fsum(flow_rates.get(f, 0.0) for f in lp.flows)
                if abs(expected - lp.carried_gbps) > 1e-9 * max(1.0, lp.capacity_gbps):
                    problems.append(f"lightpath {lp.id}: carried {lp.carried_gbps} != flow sum {expected}")
        if occ != self.occupancy:
            problems.append("occupancy map differs from lightpath routes")
        if tx != self.tx_used or rx != self.rx_used:
            problems.append("transceiver counters differ from lightpath endpoints")
        for node in range(self.physical.num_nodes):
            if tx[node] > self.physical.max_transmitters[node] or rx[node] > self.physical.max_receivers[node]:
                problems.append(f"node {node}: transceiver limit exceeded")
        return problems


def _check_load(lp: Lightpath) -> list[str]:
    tol = 1e-9 * max(1.0, lp.capacity_gbps)
    if lp.carried_gbps < -tol or lp.carried_gbps > lp.capacity_gbps + tol:
        return [f"lightpath {lp.id}: carried {lp.carried_gbps} outside [0, {lp.capacity_gbps}]"]
    return []

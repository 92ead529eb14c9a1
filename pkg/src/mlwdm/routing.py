"""Graph algorithms for both network layers.

Paths are ranked by an additive scalar cost followed by the lexicographic
sequence of edge ids, which makes every ordering total and reproducible.
Physical routes rank by (hops, km) and virtual routes by (hops, delay).
Both are packed into one exact integer: the hop count sits above bit
``HOP_SHIFT`` and the length is the exact fixed-point value of the stored
floats, so tie-breaking never depends on summation order.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .topology import Lightpath, PhysicalTopology, VirtualTopology, exact_units

# Residual-capacity slack in Gbps; absorbs float noise in carried sums.
CAPACITY_EPS = 1e-9

HOP_SHIFT = 1280
HOP = 1 << HOP_SHIFT

Edge = tuple[int, Hashable, float]  # (edge id, head node, cost)
Adjacency = Mapping[Hashable, Sequence[Edge]]


def unpack_cost(cost: int) -> tuple[int, float]:
    """Split a packed (hops, length) cost back into hops and a float length."""
    hops = cost >> HOP_SHIFT
    return hops, float(Fraction(cost - (hops << HOP_SHIFT), 1 << 1074))


@dataclass(frozen=True)
class PhysicalRoute:
    links: tuple[int, ...]
    hop_count: int
    length_km: float


@dataclass(frozen=True)
class VirtualRoute:
    lightpath_ids: tuple[int, ...]
    virtual_hops: int
    delay_s: float


def shortest_path(
    adj: Adjacency,
    source: Hashable,
    target: Hashable,
    banned_nodes: frozenset | set = frozenset(),
    banned_edges: frozenset | set = frozenset(),
):
    """Dijkstra on a directed multigraph; returns ``(cost, edge_ids)`` or None.

    Labels compare as ``(cost, edge_ids)``. Edge costs must be positive.
    """
    if source in banned_nodes:
        return None
    heap = [(0, (), source)]
    settled = set()
    while heap:
        cost, edges, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == target:
            return cost, edges
        for eid, head, ecost in adj.get(node, ()):
            if head in settled or head in banned_nodes or eid in banned_edges:
                continue
            heapq.heappush(heap, (cost + ecost, edges + (eid,), head))
    return None


def k_shortest(
    adj: Adjacency,
    source: Hashable,
    target: Hashable,
    k: int,
) -> list[tuple[float, tuple[int, ...]]]:
    """Yen's loopless k-shortest paths on a directed multigraph."""
    edge_info: dict[int, tuple[Hashable, Hashable, float]] = {}
    for tail, out in adj.items():
        for eid, head, ecost in out:
            edge_info[eid] = (tail, head, ecost)

    first = shortest_path(adj, source, target)
    if first is None:
        return []
    accepted = [first]
    seen = {first[1]}
    candidates: list[tuple[float, tuple[int, ...]]] = []
    while len(accepted) < k:
        _, prev_edges = accepted[-1]
        nodes = [source] + [edge_info[e][1] for e in prev_edges]
        root_cost = 0
        for i in range(len(prev_edges)):
            root = prev_edges[:i]
            if i:
                root_cost += edge_info[prev_edges[i - 1]][2]
            banned_edges = {p[i] for _, p in accepted if len(p) > i and p[:i] == root}
            spur = shortest_path(adj, nodes[i], target, frozenset(nodes[:i]), banned_edges)
            if spur is None:
                continue
            path = root + spur[1]
            if path not in seen:
                seen.add(path)
                heapq.heappush(candidates, (root_cost + spur[0], path))
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates))
    return accepted


def _physical_adjacency(topology: PhysicalTopology) -> dict[int, list[Edge]]:
    adj: dict[int, list[Edge]] = {n.id: [] for n in topology.nodes}
    for link in topology.links:
        adj[link.src].append((link.id, link.dst, HOP + exact_units(link.length_km)))
    return adj


def _check_pair(num_nodes: int, s: int, d: int) -> None:
    for v in (s, d):
        if not 0 <= v < num_nodes:
            raise ValueError(f"unknown node {v}")
    if s == d:
        raise ValueError("source and destination must differ")


def k_shortest_paths(topology: PhysicalTopology, s: int, d: int, k: int) -> list[PhysicalRoute]:
    """Up to ``k`` loop-free fiber routes ordered by (hops, km, link ids)."""
    _check_pair(topology.num_nodes, s, d)
    if k < 1:
        raise ValueError("k must be >= 1")
    found = k_shortest(_physical_adjacency(topology), s, d, k)
    return [PhysicalRoute(links, *unpack_cost(cost)) for cost, links in found]


def route_nodes(topology: PhysicalTopology, links: Sequence[int]) -> list[int]:
    if not links:
        return []
    return [topology.links[links[0]].src] + [topology.links[f].dst for f in links]


def first_fit_wavelength(
    topology: PhysicalTopology,
    occupancy: Mapping[tuple[int, int], int],
    route: PhysicalRoute | Sequence[int],
) -> int | None:
    """Lowest wavelength index free on every fiber of ``route``, else None."""
    links = route.links if isinstance(route, PhysicalRoute) else tuple(route)
    if not links:
        return None
    for a, b in zip(links, links[1:]):
        if topology.links[a].dst != topology.links[b].src:
            raise ValueError(f"route not contiguous at fibers {a}->{b}")
    usable = min(topology.links[f].num_wavelengths for f in links)
    for w in range(usable):
        if all((f, w) not in occupancy for f in links):
            return w
    return None


def has_room(lp: Lightpath, rate_gbps: float) -> bool:
    return lp.capacity_gbps - lp.carried_gbps >= rate_gbps - CAPACITY_EPS


def virtual_adjacency(lightpaths: Iterable[Lightpath], cost_of) -> dict[int, list[Edge]]:
    adj: dict[int, list[Edge]] = {}
    for lp in lightpaths:
        adj.setdefault(lp.src, []).append((lp.id, lp.dst, cost_of(lp)))
    return adj


def _delay_cost(lp: Lightpath) -> int:
    return HOP + lp.delay_units


def cspf_virtual_route(vt: VirtualTopology, s: int, d: int, rate_gbps: float) -> VirtualRoute | None:
    """Fewest-virtual-hop route over lightpaths with room for ``rate_gbps``.

    Ties go to the smaller summed propagation delay, then to the smaller
    lightpath-id sequence.
    """
    if rate_gbps <= 0:
        raise ValueError("rate must be positive")
    feasible = (lp for lp in vt.lightpaths.values() if has_room(lp, rate_gbps))
    found = shortest_path(virtual_adjacency(feasible, _delay_cost), s, d)
    if found is None or not found[1]:
        return None
    return make_virtual_route(vt, found[1])


def make_virtual_route(vt: VirtualTopology, lightpath_ids: Sequence[int]) -> VirtualRoute:
    ids = tuple(lightpath_ids)
    delay = math.fsum(vt.lightpaths[i].delay_s for i in ids)
    return VirtualRoute(ids, len(ids), delay)

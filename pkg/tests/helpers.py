import math
import random

from mlwdm.admission import Flow, NetworkState
from mlwdm.routing import make_virtual_route
from mlwdm.topology import Lightpath, VirtualTopology, load_topology

from oracles import simple_paths


def topology_doc(coords, edges, W=4, T=4, R=4, capacity=10.0, tz=None):
    """Topology document from node coordinates and directed (src, dst) edges."""
    n = len(coords)
    W = W if isinstance(W, list) else [W] * len(edges)
    return {
        "nodes": [
            {"id": i, "name": f"n{i}", "x_km": float(x), "y_km": float(y), "population": 0, "type": "core",
             "timezone_offset_h": (tz[i] if tz else 0)}
            for i, (x, y) in enumerate(coords)
        ],
        "links": [{"id": i, "src": s, "dst": d, "num_wavelengths": W[i]} for i, (s, d) in enumerate(edges)],
        "max_transmitters": T if isinstance(T, list) else [T] * n,
        "max_receivers": R if isinstance(R, list) else [R] * n,
        "lightpath_capacity_gbps": capacity,
    }


def make_topology(coords, edges, **kw):
    return load_topology(topology_doc(coords, edges, **kw))


def both_ways(pairs):
    return [e for a, b in pairs for e in ((a, b), (b, a))]


def random_digraph(rng: random.Random, max_nodes=8, max_edges=20, grid=4):
    n = rng.randint(2, max_nodes)
    cells = rng.sample([(x, y) for x in range(grid) for y in range(grid)], n)
    coords = [(100.0 * x, 100.0 * y) for x, y in cells]
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    m = rng.randint(0, min(max_edges, len(pairs)))
    edges = rng.sample(pairs, m)
    # an occasional parallel fiber
    if edges and rng.random() < 0.3 and m < max_edges:
        edges.append(rng.choice(edges))
    return coords, edges


def build_state(topology, lightpaths, flows=()):
    """NetworkState with hand-placed lightpaths ``(src, dst, fibers, wavelength)``
    and flows ``(src, dst, rate, [lightpath ids])``."""
    state = NetworkState(topology)
    for i, (s, d, route, w) in enumerate(lightpaths):
        length = math.fsum(topology.links[f].length_km for f in route)
        state.vt.add(Lightpath(i, s, d, tuple(route), w, topology.lightpath_capacity_gbps, length))
    state.next_lightpath_id = len(lightpaths)
    for j, (s, d, rate, ids) in enumerate(flows):
        flow = Flow(j, s, d, rate)
        flow.route = make_virtual_route(state.vt, ids)
        state.flows[j] = flow
        for i in ids:
            state.vt.lightpaths[i].flows.add(j)
    for lp in state.vt.lightpaths.values():
        state.refresh_load(lp)
    return state


def random_virtual_topology(rng, max_lightpaths=8, max_nodes=6):
    n = rng.randint(2, max_nodes)
    m = rng.randint(0, max_lightpaths)
    coords = [(float(rng.randint(0, 3) * 100 + i), float(rng.randint(0, 3) * 100)) for i in range(n)]
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    ends = [rng.choice(pairs) for _ in range(m)]
    topo = make_topology(coords, ends or [(0, 1)], W=8)
    vt = VirtualTopology(topo)
    for i, (s, d) in enumerate(ends):
        # lengths on a coarse grid so equal-hop ties on delay are common
        length = float(rng.choice([100, 200, 300]))
        carried = float(rng.choice([0, 2, 4, 6, 8, 10]))
        vt.add(Lightpath(i, s, d, (i,), 0, 10.0, length, carried))
    return vt, n


def random_fda_instance(rng):
    """At most 4 lightpaths on 4 nodes and at most 4 routable flows."""
    coords = [(rng.uniform(0, 2000), rng.uniform(0, 2000)) for _ in range(4)]
    pairs = [(a, b) for a in range(4) for b in range(4) if a != b]
    topo = make_topology(coords, pairs, W=8)
    ends = [rng.choice(pairs) for _ in range(rng.randint(1, 4))]
    lightpaths = [(s, d, [pairs.index((s, d))], i) for i, (s, d) in enumerate(ends)]
    out = {}
    for i, (s, d, _, _) in enumerate(lightpaths):
        out.setdefault(s, []).append((i, d))
    load = [0.0] * len(lightpaths)
    flows = []
    for _ in range(rng.randint(1, 4)):
        s, d = rng.choice(pairs)
        rate = rng.choice([0.5, 1.0, 2.0, 3.0, 4.5])
        options = [p for p in simple_paths(out, s, d) if all(load[i] + rate < 10.0 for i in p)]
        if options:
            path = rng.choice(options)
            for i in path:
                load[i] += rate
            flows.append((s, d, rate, list(path)))
    return build_state(topo, lightpaths, flows), out

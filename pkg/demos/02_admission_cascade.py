"""
The admission cascade, one decision at a time
=============================================

A four-node full mesh where transceiver limits push arriving flows
further down the cascade: existing lightpaths, a new direct lightpath,
a detour through a node next to the source, a detour through a node
next to the destination, and finally blocking.
"""

from mlwdm.admission import Flow, NetworkState, admit_flow
from mlwdm.topology import load_topology

coords = [(0, 0), (0, 1000), (500, 10), (1000, 0)]


def mesh(T=4, R=4):
    nodes = [{"id": i, "name": f"n{i}", "x_km": x, "y_km": y} for i, (x, y) in enumerate(coords)]
    pairs = [(a, b) for a in range(4) for b in range(4) if a != b]
    links = [{"id": i, "src": a, "dst": b, "num_wavelengths": 4} for i, (a, b) in enumerate(pairs)]
    doc = {"nodes": nodes, "links": links, "max_transmitters": T, "max_receivers": R, "lightpath_capacity_gbps": 10.0}
    return NetworkState(load_topology(doc))


def show(label, state, flow):
    out = admit_flow(state, flow)
    print(f"{label:>22}: {out.decision.value}")
    for step in out.attempts:
        print(f"{'':>24}{step}")


state = mesh()
show("empty network", state, Flow(0, 0, 3, 1.0))
show("same pair again", state, Flow(1, 0, 3, 1.0))

# node 0 may only transmit on two lightpaths, both already in use
state = mesh(T=[2, 4, 4, 4])
admit_flow(state, Flow(0, 0, 1, 1.0))
admit_flow(state, Flow(1, 0, 2, 1.0))
show("source out of lasers", state, Flow(2, 0, 3, 1.0))

# node 3 has a single receiver, already fed from node 1
state = mesh(R=[4, 4, 4, 1])
admit_flow(state, Flow(0, 1, 3, 1.0))
show("destination full", state, Flow(1, 0, 3, 1.0))

# same, but the lightpath into node 3 is saturated
state = mesh(R=[4, 4, 4, 1])
admit_flow(state, Flow(0, 1, 3, 10.0))
show("no room anywhere", state, Flow(1, 0, 3, 1.0))

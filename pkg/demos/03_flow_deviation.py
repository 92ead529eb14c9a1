"""
Rebalancing with flow deviation
===============================

Three flows are piled onto one of two parallel lightpaths. The
rebalancer moves whole flows while each move lowers the average
packet delay by more than the tolerance.
"""

from mlwdm.admission import Flow, NetworkState
from mlwdm.fda import average_packet_delay, fda_reroute, marginal_delay_length
from mlwdm.routing import make_virtual_route
from mlwdm.topology import Lightpath, load_topology

doc = {
    "nodes": [{"id": 0, "name": "a", "x_km": 0, "y_km": 0}, {"id": 1, "name": "b", "x_km": 400, "y_km": 0}],
    "links": [{"id": 0, "src": 0, "dst": 1, "num_wavelengths": 2}, {"id": 1, "src": 0, "dst": 1, "num_wavelengths": 2}],
    "max_transmitters": 2,
    "max_receivers": 2,
}
state = NetworkState(load_topology(doc))
for i in (0, 1):
    state.vt.add(Lightpath(i, 0, 1, (i,), 0, 10.0, 400.0))

for fid, rate in enumerate([3.0, 2.0, 1.0]):
    flow = Flow(fid, 0, 1, rate)
    flow.route = make_virtual_route(state.vt, [0])
    state.flows[fid] = flow
    state.vt.lightpaths[0].flows.add(fid)
state.refresh_load(state.vt.lightpaths[0])

print("before:", [lp.carried_gbps for lp in state.vt.lightpaths.values()])
print("T =", average_packet_delay(state.vt, state.flows))

# the marginal length grows quickly as a lightpath fills
for f in (0.0, 3.0, 6.0, 9.0):
    print(f"  d/df at f={f}: {marginal_delay_length(10.0, f, 0.002):.4f}")

report = fda_reroute(state)
print("after: ", [lp.carried_gbps for lp in state.vt.lightpaths.values()])
print(f"T {report.T_before:.6f} -> {report.T_after:.6f} in {report.passes} passes, {report.moves} moves")

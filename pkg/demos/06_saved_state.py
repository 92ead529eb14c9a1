"""
Saving and reloading a virtual topology
=======================================

Simulate a short run, write the virtual topology document, read it back
into a fresh network state and recompute the average packet delay.
"""

import json

from mlwdm.config import RunConfig
from mlwdm.fda import average_packet_delay
from mlwdm.reports import load_state, virtual_topology_document
from mlwdm.sim import run

result = run(RunConfig(topology="topology1", traffic="traffic1", hours=14, seed=5, trace=False))
doc = json.loads(json.dumps(virtual_topology_document(result.state)))
print(f"{len(doc['lightpaths'])} lightpaths carrying {len(doc['flows'])} flows")

busiest = max(doc["lightpaths"], key=lambda lp: lp["carried_gbps"])
print(f"busiest lightpath {busiest['id']}: {busiest['src']}->{busiest['dst']} on fibers {busiest['route']}, "
      f"wavelength {busiest['wavelength']}, {busiest['carried_gbps']:.3f} Gbps")

state = load_state(doc, result.state.physical)
print("delay from the live state:", average_packet_delay(result.state.vt, result.state.flows))
print("delay after reloading:    ", average_packet_delay(state.vt, state.flows))

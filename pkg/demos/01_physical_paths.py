"""
Physical routes and first-fit wavelengths
=========================================

Load a bundled topology, list the k shortest fiber routes between two
nodes and see which wavelength first-fit would pick as fibers fill up.
"""

from mlwdm.config import bundled_path
from mlwdm.routing import first_fit_wavelength, k_shortest_paths, route_nodes
from mlwdm.topology import read_topology

topo = read_topology(bundled_path("topology1.json"))
print(f"{topo.num_nodes} nodes, {topo.num_links} fibers, {topo.total_wavelength_slots} wavelength slots")

# routes rank by hop count, then length, then link ids
routes = k_shortest_paths(topo, 0, 7, k=3)
for r in routes:
    path = "->".join(topo.nodes[n].name for n in route_nodes(topo, r.links))
    print(f"  {r.hop_count} hops  {r.length_km:8.1f} km  {path}")

# occupy wavelength 0 on the first fiber of the best route, then 1 as well
occupancy = {}
best = routes[0]
print("free network:", first_fit_wavelength(topo, occupancy, best))
occupancy[(best.links[0], 0)] = 100
print("lambda 0 busy on first hop:", first_fit_wavelength(topo, occupancy, best))
occupancy[(best.links[-1], 1)] = 101
print("lambda 1 busy on last hop too:", first_fit_wavelength(topo, occupancy, best))

"""Flow-level simulator of multimedia traffic routing over IP/MPLS-over-WDM networks."""

from .admission import (
    AdmissionOutcome,
    Decision,
    Failure,
    Flow,
    FlowState,
    NetworkState,
    admit_flow,
    establish_lightpath,
    reclaim_empty,
    terminate_flow,
)
from .config import RunConfig
from .fda import average_packet_delay, fda_reroute, marginal_delay_length
from .routing import (
    PhysicalRoute,
    VirtualRoute,
    cspf_virtual_route,
    first_fit_wavelength,
    k_shortest_paths,
)
from .sim import MetricsSnapshot, Simulator, routing_table, run
from .topology import (
    FiberLink,
    Lightpath,
    Node,
    PhysicalTopology,
    VirtualTopology,
    dump_topology,
    load_topology,
    propagation_delay_s,
    read_topology,
)

__version__ = "0.1.0"

"""Command-line entry point: ``mlwdm {run,validate,ksp,delay}``.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, RunConfig, resolve_input
from .topology import InvariantViolation, read_topology

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class RunFailure(Exception):
    """Failure after inputs validated: simulation or report writing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# flag -> (config field, type); flags only override the config file when given
_RUN_FLAGS = {
    "--topology": ("topology", str),
    "--traffic": ("traffic", str),
    "--traffic-models": ("traffic_models", str),
    "--k": ("k", int),
    "--seed": ("seed", int),
    "--hours": ("hours", int),
    "--fda-tol": ("fda_tol", float),
    "--fda-max-passes": ("fda_max_passes", int),
    "--fda-period": ("fda_period_s", float),
    "--out": ("output_dir", str),
    "--mean-holding": ("mean_holding_s", float),
    "--capacity": ("lightpath_capacity_gbps", float),
    "--hourly-floor": ("hourly_floor", float),
    "--full-audit-every": ("full_audit_every", int),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlwdm", description="Multimedia traffic routing over a multilayer WDM network.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (("run", "run a full simulation"), ("validate", "check config, topology and traffic only")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its values")
        for flag, (dest, typ) in _RUN_FLAGS.items():
            p.add_argument(flag, dest=dest, type=typ, default=None)
        p.add_argument("--fda", dest="fda_enabled", action="store_true", default=None)
        p.add_argument("--no-fda", dest="fda_enabled", action="store_false")
        p.add_argument("--no-trace", dest="trace", action="store_false", default=None)
        p.add_argument("--force-trace", dest="force_trace", action="store_true", default=None)

    p = sub.add_parser("ksp", help="print the k shortest physical paths between two nodes")
    p.add_argument("--topology", required=True)
    p.add_argument("--src", type=int, required=True)
    p.add_argument("--dst", type=int, required=True)
    p.add_argument("--k", type=int, default=3)

    p = sub.add_parser("delay", help="print the average packet delay of a saved virtual topology")
    p.add_argument("--topology", required=True)
    p.add_argument("--state", required=True, help="virtual_topology.json written by 'run'")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(ns.config) if getattr(ns, "config", None) else RunConfig()
    for dest in [d for d, _ in _RUN_FLAGS.values()] + ["fda_enabled", "trace", "force_trace"]:
        value = getattr(ns, dest, None)
        if value is not None:
            setattr(cfg, dest, value)
    return cfg


def parse_cli(argv: list[str]) -> RunConfig:
    """Parse ``run``/``validate`` arguments into a validated :class:`RunConfig`."""
    ns = build_parser().parse_args(argv)
    if ns.command not in ("run", "validate"):
        raise UsageError(f"'{ns.command}' does not take a run configuration")
    return config_from_args(ns).validate()


def _cmd_validate(cfg: RunConfig) -> int:
    from .traffic import read_traffic

    topo = read_topology(resolve_input(cfg.topology, ".json"))
    matrix = read_traffic(resolve_input(cfg.traffic, ".csv"), cfg.traffic_models)
    if matrix.size != topo.num_nodes:
        raise ConfigError(f"traffic matrix is {matrix.size}x{matrix.size} but topology has {topo.num_nodes} nodes")
    print(f"ok: {topo.num_nodes} nodes, {topo.num_links} links, total demand {matrix.demand_gbps.sum():.6g} Gbps")
    return EXIT_OK


def _cmd_run(cfg: RunConfig) -> int:
    from .reports import emit_reports
    from .sim import Simulator
    from .traffic import read_traffic

    topo = read_topology(resolve_input(cfg.topology, ".json"))
    matrix = read_traffic(resolve_input(cfg.traffic, ".csv"), cfg.traffic_models)
    if matrix.size != topo.num_nodes:
        raise ConfigError(f"traffic matrix is {matrix.size}x{matrix.size} but topology has {topo.num_nodes} nodes")
    try:
        result = Simulator(topo, matrix, cfg).run()
        paths = emit_reports(result, cfg.output_dir)
    except Exception as exc:
        raise RunFailure(str(exc)) from exc
    offered = sum(s.offered_flows for s in result.snapshots)
    blocked = sum(s.blocked_flows for s in result.snapshots)
    print(f"{result.events_processed} events, {offered} flows offered, {blocked} blocked")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_ksp(ns) -> int:
    from .routing import k_shortest_paths, route_nodes

    topo = read_topology(resolve_input(ns.topology, ".json"))
    if ns.k < 1:
        raise ConfigError("k must be >= 1")
    try:
        routes = k_shortest_paths(topo, ns.src, ns.dst, ns.k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for i, r in enumerate(routes):
        nodes = "->".join(map(str, route_nodes(topo, r.links)))
        print(f"{i + 1}: hops={r.hop_count} km={r.length_km:.3f} links={list(r.links)} nodes={nodes}")
    if not routes:
        print("no path")
    return EXIT_OK


def _cmd_delay(ns) -> int:
    from .fda import NoTrafficError, average_packet_delay
    from .reports import load_state

    topo = read_topology(resolve_input(ns.topology, ".json"))
    try:
        with open(ns.state, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read state {ns.state}: {exc}") from None
    state = load_state(doc, topo)
    try:
        print(repr(average_packet_delay(state.vt, state.flows)))
    except NoTrafficError:
        print("no traffic")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command in ("run", "validate"):
            cfg = config_from_args(ns).validate()
            return _cmd_run(cfg) if ns.command == "run" else _cmd_validate(cfg)
        if ns.command == "ksp":
            return _cmd_ksp(ns)
        return _cmd_delay(ns)
    except RunFailure as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, InvariantViolation, OSError) as exc:
        # ConfigError and TopologyError are ValueErrors; a saved state failing its audit is bad input
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

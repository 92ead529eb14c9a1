"""Output files for a finished run, and reloading of a saved virtual topology."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from .admission import Flow, FlowState, NetworkState
from .routing import make_virtual_route
from .sim import MetricsSnapshot, RoutingRow, SimResult
from .topology import InvariantViolation, Lightpath, PhysicalTopology

REPORT_FILES = ("virtual_topology.json", "routing_table.csv", "hourly_metrics.csv", "summary.json")
NO_TRAFFIC = "no traffic"


class ReportError(OSError):
    pass


def virtual_topology_document(state: NetworkState) -> dict[str, Any]:
    vt = state.vt
    return {
        "lightpath_capacity_gbps": state.capacity_gbps,
        "lightpaths": [
            {
                "id": lp.id,
                "src": lp.src,
                "dst": lp.dst,
                "route": list(lp.route),
                "wavelength": lp.wavelength,
                "capacity_gbps": lp.capacity_gbps,
                "carried_gbps": lp.carried_gbps,
                "length_km": lp.length_km,
                "propagation_delay_s": lp.delay_s,
                "flows": sorted(lp.flows),
            }
            for lp in sorted(vt.lightpaths.values(), key=lambda x: x.id)
        ],
        "flows": [
            {
                "id": f.id,
                "src": f.src,
                "dst": f.dst,
                "reserved_gbps": f.reserved_gbps,
                "model": f.model,
                "lightpaths": list(f.route.lightpath_ids),
            }
            for f in sorted(state.flows.values(), key=lambda x: x.id)
        ],
        "tx_used": list(vt.tx_used),
        "rx_used": list(vt.rx_used),
    }


def load_state(doc: Mapping[str, Any], topology: PhysicalTopology) -> NetworkState:
    """Rebuild a network state from :func:`virtual_topology_document` output and audit it."""
    state = NetworkState(topology)
    for raw in doc.get("lightpaths", []):
        route = tuple(raw["route"])
        if any(not 0 <= f < topology.num_links for f in route):
            raise InvariantViolation(f"lightpath {raw['id']}: unknown fiber in route")
        lp = Lightpath(
            id=raw["id"],
            src=raw["src"],
            dst=raw["dst"],
            route=route,
            wavelength=raw["wavelength"],
            capacity_gbps=float(raw.get("capacity_gbps", topology.lightpath_capacity_gbps)),
            length_km=float(raw.get("length_km", math.fsum(topology.links[f].length_km for f in route))),
            flows=set(raw.get("flows", [])),
        )
        state.vt.add(lp)
        state.next_lightpath_id = max(state.next_lightpath_id, lp.id + 1)
    for raw in doc.get("flows", []):
        flow = Flow(raw["id"], raw["src"], raw["dst"], float(raw["reserved_gbps"]), raw.get("model", ""), state=FlowState.ACTIVE)
        flow.route = make_virtual_route(state.vt, raw["lightpaths"])
        state.flows[flow.id] = flow
    for lp in state.vt.lightpaths.values():
        state.refresh_load(lp)
    problems = state.full_audit()
    if problems:
        raise InvariantViolation("; ".join(problems))
    return state


def routing_rows(rows: list[RoutingRow]) -> list[list[str]]:
    out = [["flow_id", "src", "dst", "reserved_gbps", "lightpaths", "virtual_hops", "segments"]]
    for r in rows:
        segs = " ".join(f"{lp}:{'-'.join(map(str, fibers))}@w{w}" for lp, fibers, w in r.segments)
        out.append([str(r.flow_id), str(r.src), str(r.dst), repr(r.reserved_gbps), " ".join(map(str, r.lightpaths)), str(r.virtual_hops), segs])
    return out


def _cell(name: str, value: Any) -> str:
    if value is None:
        return NO_TRAFFIC if name == "avg_packet_delay_s" else ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_rows(snapshots: list[MetricsSnapshot]) -> list[list[str]]:
    names = [f.name for f in fields(MetricsSnapshot)]
    return [names] + [[_cell(n, getattr(s, n)) for n in names] for s in snapshots]


def _csv_text(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(rows)
    return buf.getvalue()


def summary_document(result: SimResult, timestamp: str | None = None) -> dict[str, Any]:
    snaps = result.snapshots
    offered = sum(s.offered_flows for s in snaps)
    blocked = sum(s.blocked_flows for s in snaps)
    return {
        "seed": result.seed,
        "config": result.config.to_dict(),
        "hours": len(snaps),
        "offered_flows": offered,
        "admitted_flows": sum(s.admitted_flows for s in snaps),
        "blocked_flows": blocked,
        "blocking_ratio": blocked / offered if offered else 0.0,
        "decisions": result.decisions,
        "events_processed": result.events_processed,
        "fast_audits": result.fast_audits,
        "full_audits": result.full_audits,
        "fda_runs": len(result.fda_reports),
        "fda_moves": sum(r.moves for r in result.fda_reports),
        "final_active_flows": len(result.state.flows),
        "final_lightpaths": len(result.state.vt.lightpaths),
        "generated_at": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def emit_reports(result: SimResult, out_dir) -> list[Path]:
    """Write the report files atomically: all temp files first, then renames.

    On failure no report file from this call is left behind.
    """
    out = Path(out_dir)
    payloads = {
        "virtual_topology.json": json.dumps(virtual_topology_document(result.state), indent=2) + "\n",
        "routing_table.csv": _csv_text(routing_rows(result.routing_table)),
        "hourly_metrics.csv": _csv_text(metrics_rows(result.snapshots)),
        "summary.json": json.dumps(summary_document(result), indent=2) + "\n",
    }
    if result.config.trace:
        payloads["trace.ndjson"] = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in result.trace)

    temps: list[tuple[str, Path]] = []
    placed: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in payloads.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
            temps.append((tmp, out / name))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, final in temps:
            os.replace(tmp, final)
            placed.append(final)
    except OSError as exc:
        # a half-written report set is worse than none
        for path in [Path(t) for t, _ in temps] + placed:
            try:
                os.unlink(path)
            except FileNotFoundError:
                pass
        raise ReportError(f"cannot write reports to {out}: {exc}") from exc
    return [final for _, final in temps]

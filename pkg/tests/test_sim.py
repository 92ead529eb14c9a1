import csv
import io
import json

import numpy as np
import pytest

import mlwdm.sim as sim_module
from mlwdm.admission import Decision, Flow, NetworkState, admit_flow
from mlwdm.config import RunConfig
from mlwdm.reports import NO_TRAFFIC, REPORT_FILES, emit_reports, load_state, virtual_topology_document
from mlwdm.sim import EventKind, EventQueue, Simulator, routing_table
from mlwdm.topology import InvariantViolation
from mlwdm.traffic import matrix_from_arrays

from helpers import both_ways, make_topology

RING = both_ways([(0, 1), (1, 2), (2, 3), (3, 0)])


def ring(**kw):
    return make_topology([(0, 0), (300, 0), (300, 300), (0, 300)], RING, **kw)


def demand(n=4, entries=((0, 2, 3.0), (1, 3, 2.0), (2, 0, 1.0))):
    d = np.zeros((n, n))
    for s, t, v in entries:
        d[s, t] = v
    return matrix_from_arrays(d)


def config(**kw):
    base = dict(topology="x", traffic="y", hours=3, mean_holding_s=120.0, full_audit_every=500)
    base.update(kw)
    return RunConfig(**base)


def test_queue_orders_by_time_then_insertion():
    q = EventQueue()
    q.push(5.0, EventKind.HOUR_BOUNDARY, "b")
    q.push(1.0, EventKind.FLOW_ARRIVAL, "a")
    q.push(5.0, EventKind.FDA_TRIGGER, "c")
    assert [q.pop().payload for _ in range(3)] == ["a", "b", "c"]


def test_queue_refuses_to_go_back_in_time():
    q = EventQueue()
    q.push(5.0, EventKind.FDA_TRIGGER)
    q.pop()
    q.push(1.0, EventKind.FDA_TRIGGER)
    with pytest.raises(InvariantViolation):
        q.pop()
    with pytest.raises(ValueError):
        q.push(-1.0, EventKind.FDA_TRIGGER)


def test_null_run(tmp_path):
    result = Simulator(ring(), demand(entries=()), config()).run()
    assert len(result.snapshots) == 3
    for snap in result.snapshots:
        assert snap.offered_flows == 0 and snap.avg_packet_delay_s is None
    assert result.state.vt.lightpaths == {}
    emit_reports(result, tmp_path)
    assert all((tmp_path / name).exists() for name in REPORT_FILES)
    rows = list(csv.DictReader(io.StringIO((tmp_path / "hourly_metrics.csv").read_text())))
    assert len(rows) == 3 and {r["avg_packet_delay_s"] for r in rows} == {NO_TRAFFIC}
    assert (tmp_path / "routing_table.csv").read_bytes().count(b"\r\n") == 1


def test_same_seed_same_run():
    a = Simulator(ring(), demand(), config(seed=4)).run()
    b = Simulator(ring(), demand(), config(seed=4)).run()
    assert a.snapshots == b.snapshots
    assert a.routing_table == b.routing_table
    assert a.trace == b.trace
    c = Simulator(ring(), demand(), config(seed=5)).run()
    assert c.trace != a.trace


def test_hourly_accounting():
    result = Simulator(ring(T=1, R=1, W=1), demand(entries=((0, 2, 12.0), (1, 3, 9.0), (3, 1, 4.0))), config(hourly_floor=1.0)).run()
    assert sum(s.blocked_flows for s in result.snapshots) > 0
    for snap in result.snapshots:
        assert snap.offered_flows == snap.admitted_flows + snap.blocked_flows
        assert 0 <= snap.blocking_ratio <= 1
        assert 0 <= snap.wavelength_utilization <= 1
    assert result.full_audits >= 3 + 1
    assert result.fast_audits >= result.events_processed - 1


def test_single_pair_below_capacity_never_blocks():
    result = Simulator(ring(T=50, R=50), demand(entries=((0, 2, 4.0),)), config(hours=4)).run()
    assert all(s.blocking_ratio == 0 for s in result.snapshots)
    decisions = {r["detail"]["decision"] for r in result.trace if r["kind"] == "FlowArrival"}
    assert decisions <= {Decision.ROUTED_EXISTING.value, Decision.ROUTED_NEW_DIRECT.value}


def test_fda_runs_just_before_hour_snapshot():
    result = Simulator(ring(), demand(), config()).run()
    marks = [(r["time_s"], r["kind"]) for r in result.trace if r["kind"] in ("FdaTrigger", "HourBoundary")]
    for h in (1, 2, 3):
        i = marks.index((h * 3600.0, "FdaTrigger"))
        assert marks[i + 1] == (h * 3600.0, "HourBoundary")
    assert len(result.fda_reports) == 3


def test_fda_disabled():
    result = Simulator(ring(), demand(), config(fda_enabled=False)).run()
    assert result.fda_reports == [] and all(s.fda_passes == 0 for s in result.snapshots)


def test_corruption_is_caught(monkeypatch):
    def bad_admit(state, flow, k=None):
        out = admit_flow(state, flow, k)
        if out.route is not None:
            state.vt.lightpaths[out.route.lightpath_ids[0]].carried_gbps += 100.0
        return out

    monkeypatch.setattr(sim_module, "admit_flow", bad_admit)
    with pytest.raises(InvariantViolation):
        Simulator(ring(), demand(), config()).run()


def test_size_mismatch():
    with pytest.raises(ValueError, match="3x3"):
        Simulator(ring(), demand(n=3, entries=((0, 1, 1.0),)), config())


def test_capacity_override():
    sim = Simulator(ring(), demand(), config(lightpath_capacity_gbps=40.0))
    assert sim.state.capacity_gbps == 40.0


def test_trace_can_be_disabled():
    result = Simulator(ring(), demand(), config(trace=False)).run()
    assert result.trace == [] and result.events_processed > 0


class TestRoutingTable:
    def test_empty(self):
        assert routing_table(NetworkState(ring())) == []

    def test_one_direct_flow(self):
        state = NetworkState(ring())
        admit_flow(state, Flow(0, 0, 1, 1.0))
        (row,) = routing_table(state)
        assert row.virtual_hops == 1 and row.lightpaths == (0,)
        assert row.segments == ((0, (0,), 0),)

    def test_rows_match_active_flows(self):
        result = Simulator(ring(T=2, R=2), demand(), config(seed=2)).run()
        rows = routing_table(result.state)
        assert [r.flow_id for r in rows] == sorted(result.state.flows)
        for r in rows:
            lps = [result.state.vt.lightpaths[i] for i in r.lightpaths]
            assert lps[0].src == r.src and lps[-1].dst == r.dst
            assert all(a.dst == b.src for a, b in zip(lps, lps[1:]))


def test_state_document_round_trip():
    result = Simulator(ring(), demand(), config(seed=1)).run()
    doc = json.loads(json.dumps(virtual_topology_document(result.state)))
    again = load_state(doc, result.state.physical)
    assert again.snapshot() == result.state.snapshot()


def test_tampered_state_document_rejected():
    result = Simulator(ring(), demand(), config(seed=1)).run()
    doc = virtual_topology_document(result.state)
    assert doc["flows"], "run should end with active flows"
    first = doc["flows"][0]["lightpaths"][0]
    next(lp for lp in doc["lightpaths"] if lp["id"] == first)["flows"] = []
    with pytest.raises(InvariantViolation, match="not listed"):
        load_state(doc, result.state.physical)

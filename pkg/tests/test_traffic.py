import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlwdm.traffic import (
    MgInfParams,
    MmppParams,
    OnOffParams,
    TrafficModel,
    hourly_factor,
    make_rng,
    matrix_from_arrays,
    mginf_mean_rate,
    mmpp_mean_rate,
    onoff_mean_rate,
    read_traffic,
    sample_mginf_path,
    sample_mmpp_path,
    sample_onoff_path,
    session_arrival_rate,
    spawn_flows,
    write_traffic,
)
from mlwdm.config import bundled_path

from oracles import mginf_time_average_sd


def replicated_mean(sample, reps=20, horizon=1e5, seed=7):
    """Grand mean and standard error over independent replications."""
    means = np.array([sample(make_rng(seed, i), horizon).time_average() for i in range(reps)])
    return means.mean(), means.std(ddof=1) / np.sqrt(reps)


AUDIO = OnOffParams(0.16, 0.4, 0.6)


@pytest.mark.parametrize("peak, on, off, mean", [(1, 1, 1, 0.5), (2, 3, 1, 1.5)])
def test_onoff_mean_examples(peak, on, off, mean):
    assert onoff_mean_rate(OnOffParams(peak, on, off)) == mean


def test_model_means():
    assert mmpp_mean_rate(MmppParams(8, AUDIO)) == pytest.approx(8 * 0.064)
    assert mginf_mean_rate(MgInfParams(0.5, 1.5, 1.0, 0.5)) == pytest.approx(0.5 * 3.0 * 0.5)


@pytest.mark.parametrize(
    "make",
    [
        lambda: OnOffParams(0, 1, 1),
        lambda: OnOffParams(1, -1, 1),
        lambda: MmppParams(0, AUDIO),
        lambda: MgInfParams(1.0, pareto_alpha=1.0),
        lambda: MgInfParams(0.0),
    ],
)
def test_parameter_validation(make):
    with pytest.raises(ValueError):
        make()


def test_onoff_time_average_within_three_se():
    mean, se = replicated_mean(lambda r, h: sample_onoff_path(AUDIO, r, h))
    assert abs(mean - onoff_mean_rate(AUDIO)) < 3 * se


def test_onoff_on_durations():
    p = OnOffParams(1.0, 2.0, 3.0)
    trace = sample_onoff_path(p, make_rng(3), 5e4)
    d = trace.durations()[1:-1]  # first and last segments are censored
    on = d[trace.rates[1:-1] > 0]
    assert len(on) > 10**4 // 2
    assert abs(on.mean() - 2.0) < 3 * on.std(ddof=1) / np.sqrt(len(on))


def test_onoff_degenerate_off():
    trace = sample_onoff_path(OnOffParams(1.0, 1.0, 1e-12), make_rng(0), 1000.0)
    assert trace.time_average() == pytest.approx(1.0, abs=1e-9)


def test_onoff_replay_is_bit_identical():
    a = sample_onoff_path(AUDIO, make_rng(11, 2), 1e4)
    b = sample_onoff_path(AUDIO, make_rng(11, 2), 1e4)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.rates, b.rates)


def test_onoff_alternates():
    trace = sample_onoff_path(AUDIO, make_rng(5), 1e4)
    assert np.all(np.diff(trace.times) > 0)
    assert np.all(trace.rates[1:] != trace.rates[:-1])
    assert trace.times[-1] < trace.horizon_s


def test_mmpp_single_source_matches_onoff():
    a = sample_mmpp_path(MmppParams(1, AUDIO), make_rng(9), 1e4)
    b = sample_onoff_path(AUDIO, make_rng(9), 1e4)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.rates, b.rates)


def test_mmpp_support_and_mean():
    p = MmppParams(8, AUDIO)
    trace = sample_mmpp_path(p, make_rng(1), 1e4)
    levels = trace.rates / AUDIO.peak_gbps
    assert np.allclose(levels, np.round(levels)) and levels.min() >= 0 and levels.max() <= 8
    mean, se = replicated_mean(lambda r, h: sample_mmpp_path(p, r, h), reps=10)
    assert abs(mean - mmpp_mean_rate(p)) < 3 * se


def test_mginf_mean_within_three_se():
    # replication spread misses the rare very long sessions, so the standard error is analytic
    p = MgInfParams(1.0, 1.5, 1.0, 1.0)
    mean, _ = replicated_mean(lambda r, h: sample_mginf_path(p, r, h))
    se = mginf_time_average_sd(1.0, 1.5, 1.0, 1.0, 1e5) / np.sqrt(20)
    assert abs(mean - 3.0) < 3 * se


def test_mginf_variance_formula_at_short_horizon():
    p = MgInfParams(1.0, 1.5, 1.0, 1.0)
    means = np.array([sample_mginf_path(p, make_rng(2, i), 50.0).time_average() for i in range(3000)])
    assert means.std(ddof=1) == pytest.approx(mginf_time_average_sd(1.0, 1.5, 1.0, 1.0, 50.0), rel=0.1)


def test_mginf_empty_process():
    trace = sample_mginf_path(MgInfParams(1e-9), make_rng(0), 1e4)
    assert trace.time_average() == 0.0


def test_mginf_replay_and_shape():
    p = MgInfParams(0.5, 1.5, 1.0, 0.5)
    a = sample_mginf_path(p, make_rng(4, 1), 1e4)
    b = sample_mginf_path(p, make_rng(4, 1), 1e4)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.rates, b.rates)
    assert np.all(a.rates >= 0) and np.all(np.diff(a.times) >= 0)
    assert np.allclose(a.rates / 0.5, np.round(a.rates / 0.5))


def test_distinct_streams_differ():
    a = make_rng(1, 0).random(4)
    b = make_rng(1, 1).random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, make_rng(1, 0).random(4))


@pytest.mark.parametrize("tz", range(-12, 15))
def test_hourly_factor_scan(tz):
    values = [hourly_factor(h, tz) for h in range(24)]
    assert all(0.1 - 1e-15 <= v <= 1.0 for v in values)
    assert hourly_factor(24 + 5, tz) == hourly_factor(5, tz)
    assert hourly_factor((14 - tz) % 24, tz) == 1.0
    assert hourly_factor((2 - tz) % 24, tz) == pytest.approx(0.1, abs=1e-15)


def test_model_document_round_trip():
    for raw in [
        {"kind": "onoff", "peak_gbps": 0.1, "mean_on_s": 1.0, "mean_off_s": 2.0},
        {"kind": "mmpp", "n_sources": 3, "peak_gbps": 0.1, "mean_on_s": 1.0, "mean_off_s": 2.0},
        {"kind": "mginf", "lambda_per_s": 0.2, "pareto_alpha": 1.7, "pareto_xmin_s": 2.0, "unit_gbps": 0.3},
    ]:
        assert TrafficModel.from_dict(raw).to_dict() == raw
    with pytest.raises(ValueError, match="unknown model kind"):
        TrafficModel.from_dict({"kind": "poisson"})
    with pytest.raises(ValueError, match="missing"):
        TrafficModel.from_dict({"kind": "onoff"})


class TestMatrix:
    def test_validation(self):
        with pytest.raises(ValueError, match="square"):
            matrix_from_arrays(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="diagonal"):
            matrix_from_arrays(np.eye(2))
        with pytest.raises(ValueError, match="non-negative"):
            matrix_from_arrays([[0, -1], [0, 0]])

    def test_unknown_tag(self):
        doc = {"models": {"a": {"kind": "onoff", "peak_gbps": 1, "mean_on_s": 1, "mean_off_s": 1}},
               "tags": [[None, "b"], ["a", None]]}
        with pytest.raises(ValueError, match="unknown model 'b'"):
            matrix_from_arrays([[0, 1], [1, 0]], doc)

    def test_csv_round_trip(self, tmp_path):
        m = read_traffic(bundled_path("traffic1.csv"))
        assert m.size == 10
        write_traffic(m, tmp_path / "t.csv", extra={"synthetic": True})
        again = read_traffic(tmp_path / "t.csv")
        assert np.array_equal(again.demand_gbps, m.demand_gbps)
        assert again.tags == m.tags and again.models == m.models
        assert json.loads((tmp_path / "t.models.json").read_text())["synthetic"] is True

    def test_ragged_csv(self, tmp_path):
        (tmp_path / "bad.csv").write_text("0,1\n1\n")
        with pytest.raises(ValueError, match="ragged"):
            read_traffic(tmp_path / "bad.csv")


def _one_entry(demand=2.0, tag="audio-unitary"):
    d = np.zeros((3, 3))
    d[0, 2] = demand
    doc = {"models": {"audio-unitary": {"kind": "onoff", "peak_gbps": 0.16, "mean_on_s": 0.4, "mean_off_s": 0.6}},
           "default": tag}
    return matrix_from_arrays(d, doc)


def test_spawn_zero_demand_gives_nothing():
    assert spawn_flows(_one_entry(0.0), 14, make_rng(0)) == []


def test_spawn_replay_identical():
    m = read_traffic(bundled_path("traffic1.csv"))
    assert spawn_flows(m, 3, make_rng(5, 3)) == spawn_flows(m, 3, make_rng(5, 3))


def test_spawn_shapes():
    m = _one_entry()
    flows = spawn_flows(m, 7, make_rng(2))
    assert all(7 * 3600 <= f.time_s < 8 * 3600 for f in flows)
    assert [f.time_s for f in flows] == sorted(f.time_s for f in flows)
    assert {(f.src, f.dst, f.reserved_gbps, f.model) for f in flows} == {(0, 2, 0.064, "audio-unitary")}


def test_spawn_littles_law():
    # expected concurrent sessions = arrival rate * mean holding = factor * demand / reserved
    m = _one_entry(demand=1.0)
    hold = 60.0
    lam = session_arrival_rate(1.0, 1.0, 0.064, hold)
    counts = []
    for rep in range(400):
        flows = spawn_flows(m, 14, make_rng(rep, 14), mean_holding_s=hold)
        # sessions alive at the end of the hour's middle
        t = 14 * 3600 + 1800
        counts.append(sum(1 for f in flows if f.time_s <= t < f.time_s + f.holding_s))
    counts = np.array(counts)
    expected = lam * hold * (1 - np.exp(-1800 / hold))
    assert abs(counts.mean() - expected) < 3 * counts.std(ddof=1) / np.sqrt(len(counts))


def test_source_timezone_drives_factor():
    d = np.zeros((2, 2))
    d[0, 1] = d[1, 0] = 5.0
    m = matrix_from_arrays(d)
    flows = spawn_flows(m, 2, make_rng(0), tz_offsets=[12, 0])
    by_src = [sum(1 for f in flows if f.src == s) for s in (0, 1)]
    # source 0 is at its 14:00 peak, source 1 at its 02:00 trough
    assert by_src[0] > 4 * by_src[1]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(10.0, 2000.0))
def test_sample_paths_are_valid(seed, horizon):
    rng = make_rng(seed)
    for trace in (
        sample_onoff_path(AUDIO, rng, horizon),
        sample_mmpp_path(MmppParams(3, AUDIO), rng, horizon),
        sample_mginf_path(MgInfParams(0.5), rng, horizon),
    ):
        assert trace.times[0] == 0.0 and np.all(np.diff(trace.times) >= 0)
        assert trace.times[-1] < horizon and np.all(trace.rates >= 0)
        assert trace.durations().sum() == pytest.approx(horizon)

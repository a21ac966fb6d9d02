import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zcmac.medium import (COLLIDED, DECODED, IDLE, NO_FAULTS, ConnectivityGraph, FaultModel, TraceBuilder,
                          format_us, random_topology, resolve, resolve_slot, sense, sense_kinds)
from zcmac.protocol import SlotKind


def test_fault_model_validation():
    with pytest.raises(ValueError):
        FaultModel(p1=1.5)
    assert not NO_FAULTS.enabled
    assert FaultModel.symmetric(0.1) == FaultModel(0.1, 0.1, 0.0)


def test_sensing_without_faults_is_exact():
    rng = np.random.default_rng(0)
    for kind in SlotKind:
        assert sense(kind, NO_FAULTS, rng) == (kind,)


def test_sensing_error_rates():
    n = 200_000
    rng = np.random.default_rng(1)
    fm = FaultModel(0.1, 0.2, 0.05)
    idle = np.full(n, int(SlotKind.EMPTY), dtype=np.int8)
    sensed, double = sense_kinds(idle, fm, rng.random(n))
    assert abs((sensed == SlotKind.COLLISION).mean() - 0.1) < 0.005
    assert abs(double.mean() - 0.9 * 0.2) < 0.005
    assert not (double & (sensed == SlotKind.COLLISION)).any()
    busy = np.full(n, int(SlotKind.BUSY), dtype=np.int8)
    sensed, double = sense_kinds(busy, fm, rng.random(n))
    assert abs((sensed == SlotKind.EMPTY).mean() - 0.05) < 0.005
    assert not double.any()


def test_double_count_reported_as_two_slots():
    fm = FaultModel(0.0, 1.0, 0.0)
    assert sense(SlotKind.EMPTY, fm, np.random.default_rng(0)) == (SlotKind.EMPTY, SlotKind.EMPTY)


@pytest.mark.parametrize("n,expected", [(0, SlotKind.EMPTY), (1, SlotKind.BUSY), (3, SlotKind.COLLISION)])
def test_single_domain_resolution(n, expected):
    res = resolve(np.arange(n), None)
    assert res.observed_kinds(None) == expected
    assert res.any_failed == (n > 1)


def two_isolated_pairs() -> ConnectivityGraph:
    adj = np.zeros((4, 4), dtype=bool)
    adj[0, 1] = adj[1, 0] = adj[2, 3] = adj[3, 2] = True
    return ConnectivityGraph(adj, [(0, 1), (2, 3)])


def test_isolated_pairs_both_succeed():
    res = resolve(np.array([0, 2]), two_isolated_pairs(), np.array([1, 3]))
    assert res.success.tolist() == [True, True]
    assert res.observed_kinds(np.array([1, 3])).tolist() == [SlotKind.BUSY, SlotKind.BUSY]


def test_hidden_terminal_collides_at_the_receiver():
    # 0 -> 1 <- 2, with 0 and 2 out of range of each other
    adj = np.zeros((3, 3), dtype=bool)
    adj[0, 1] = adj[1, 0] = adj[1, 2] = adj[2, 1] = True
    g = ConnectivityGraph(adj)
    res = resolve(np.array([0, 2]), g, np.array([1, 1]))
    assert not res.success.any()
    rec = resolve_slot([0, 2], g, receivers={0: 1, 2: 1})
    assert rec.per_receiver_result == {1: COLLIDED}


def test_lone_transmitter_heard_as_collision_when_it_failed():
    # 0 -> 1 fails because 2 also reaches 1; node 3 only hears 0
    adj = np.zeros((4, 4), dtype=bool)
    for a, b in [(0, 1), (2, 1), (0, 3)]:
        adj[a, b] = adj[b, a] = True
    res = resolve(np.array([0, 2]), ConnectivityGraph(adj), np.array([1, 1]))
    assert res.observed_kinds(np.array([3]))[0] == SlotKind.COLLISION


def test_resolve_slot_single_domain_record():
    g = ConnectivityGraph.complete(3)
    rec = resolve_slot([1], g, wall_time_ns=5000, durations_ns=(10, 20, 1))
    assert rec.per_receiver_result == {0: DECODED, 2: DECODED}
    assert rec.duration_ns == 10 and rec.wall_time == 5.0
    assert resolve_slot([], g, durations_ns=(10, 20, 1)).per_receiver_result == {0: IDLE, 1: IDLE, 2: IDLE}
    assert resolve_slot([0, 1], g, durations_ns=(10, 20, 1)).duration_ns == 20


def test_graph_validation():
    with pytest.raises(ValueError):
        ConnectivityGraph(np.array([[0, 1], [0, 0]], dtype=bool))
    with pytest.raises(ValueError):
        ConnectivityGraph(np.zeros((2, 2), dtype=bool), [(0, 1)])
    with pytest.raises(ValueError):
        random_topology(3, 0.5, np.random.default_rng(0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.floats(0.0, 1.0), st.integers(0, 1000))
def test_random_topology_properties(pairs, gamma, seed):
    g = random_topology(2 * pairs, gamma, np.random.default_rng(seed))
    assert np.array_equal(g.adjacency, g.adjacency.T)
    assert not g.adjacency.diagonal().any()
    assert all(g.adjacency[a, b] for a, b in g.flow_pairs)
    if gamma == 1.0:
        assert g.is_complete()


def test_trace_expansion_and_csv(tmp_path):
    tb = TraceBuilder()
    tb.add_idle_run(0, 20_000, 3)
    tb.add(60_000, 2_150_500, int(SlotKind.BUSY), [4], 8 * 2346)
    tb.add(2_210_500, 2_266_000, int(SlotKind.COLLISION), [1, 2], 0)
    trace = tb.build()
    assert trace.n_slots == 5
    assert trace.counts() == {"idle": 3, "success": 1, "collision": 1}
    e = trace.expanded()
    assert e.start_ns.tolist() == [0, 20_000, 40_000, 60_000, 2_210_500]
    assert e.transmitters(4).tolist() == [1, 2]
    p = tmp_path / "t.csv"
    trace.write_csv(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["wall_time_us", "duration_us", "kind", "transmitters"]
    assert rows[2] == ["20.000", "20.000", "idle", ""]
    assert rows[4] == ["60.000", "2150.500", "success", "4"]
    assert rows[5] == ["2210.500", "2266.000", "collision", "1;2"]
    assert [r.wall_time_ns for r in trace.records()] == e.start_ns.tolist()


def test_format_us():
    assert format_us(1) == "0.001"
    assert format_us(-1500) == "-1.500"

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import ReferenceZc, expanded_rows
from zcmac.engine import (DeliveryLog, RunStreams, RuntimeCapExceeded, SimulationSetup, StationSpec,
                          ZcSimulator, simulate_zc)
from zcmac.medium import ConnectivityGraph, FaultModel
from zcmac.protocol import Role
from zcmac.traffic import TrafficSource


def _delivery_rows(log: DeliveryLog):
    return sorted(zip(*(getattr(log, f).tolist()
                        for f in ("station", "start_ns", "end_ns", "enqueue_ns", "payload_bytes"))))


def assert_matches_reference(setup: SimulationSetup, seed: int, replay: bool = True):
    ref = ReferenceZc(setup, seed).run()
    sim = ZcSimulator(setup, seed)
    if not replay:
        sim._maybe_replay = lambda: None
    res = sim.run()
    assert expanded_rows(res.trace) == ref.rows
    assert _delivery_rows(res.deliveries) == sorted(ref.deliveries)
    assert res.convergence_log == ref.convergence_log
    assert res.stats["attempts"] == ref.attempts
    assert res.stats["collided"] == ref.collided
    assert res.stats["picks"] == ref.picks
    assert res.stats["failed_picks"] == ref.failed_picks
    assert res.end_ns == ref.now
    return res


@pytest.mark.parametrize("mode", ["immediate", "cycle-end"])
@pytest.mark.parametrize("replay", [True, False])
def test_backlogged_matches_reference(mode, replay):
    setup = SimulationSetup(8, [StationSpec() for _ in range(7)], duration_s=0.6, reselection_mode=mode)
    res = assert_matches_reference(setup, 11, replay)
    if replay:
        assert res.stats["replayed_rounds"] > 0


def test_access_point_with_anchor_matches_reference():
    stations = [StationSpec(sources=[TrafficSource("periodic-cbr", 240, 8000.0, 500.0 * j, 76)]) for j in range(3)]
    stations.append(StationSpec(sources=[TrafficSource("periodic-cbr", 240, 8000.0, 0.0, 76)] * 3,
                                role=Role.ACCESS_POINT, slot_quota=3, use_anchor=True))
    assert_matches_reference(SimulationSetup(8, stations, duration_s=0.4), 5)


def test_faults_match_reference():
    setup = SimulationSetup(6, [StationSpec() for _ in range(5)], duration_s=0.3,
                            fault=FaultModel(0.05, 0.1, 0.02))
    assert_matches_reference(setup, 3)


def test_multi_domain_matches_reference():
    # two pairs that cannot hear each other plus a third pair in range of both
    adj = np.zeros((6, 6), dtype=bool)
    for a, b in [(0, 1), (2, 3), (4, 5), (4, 0), (4, 2), (5, 1), (5, 3)]:
        adj[a, b] = adj[b, a] = True
    graph = ConnectivityGraph(adj, [(0, 1), (2, 3), (4, 5)])
    stations = [StationSpec(node=2 * j, receiver=2 * j + 1) for j in range(3)]
    assert_matches_reference(SimulationSetup(4, stations, duration_s=0.3, graph=graph), 9)


traffic = st.one_of(
    st.just(None),
    st.tuples(st.integers(100, 2346), st.floats(500.0, 20000.0), st.floats(0.0, 5000.0)),
)


@st.composite
def small_setups(draw):
    N = draw(st.integers(1, 7))
    M = draw(st.integers(0, 7))
    stations = []
    for _ in range(M):
        tr = draw(traffic)
        src = TrafficSource.backlogged() if tr is None else TrafficSource("periodic-cbr", tr[0], tr[1], tr[2])
        join = draw(st.floats(0.0, 50000.0))
        leave = draw(st.one_of(st.none(), st.floats(join + 1000.0, join + 200000.0)))
        stations.append(StationSpec(sources=[src], sessions=[(join, leave)]))
    if draw(st.booleans()):
        stations.append(StationSpec(role=Role.ACCESS_POINT, slot_quota=draw(st.integers(1, 3)),
                                    use_anchor=draw(st.booleans())))
    fault = FaultModel(*draw(st.tuples(*[st.sampled_from([0.0, 0.01, 0.2])] * 3)))
    return SimulationSetup(
        N, stations, duration_s=0.15, fault=fault,
        recycle_rounds=draw(st.integers(1, 4)),
        reselection_mode=draw(st.sampled_from(["immediate", "cycle-end"])),
    )


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_setups(), st.integers(0, 2 ** 32 - 1))
def test_random_configurations_match_reference(setup, seed):
    assert_matches_reference(setup, seed)


def test_same_seed_same_run():
    setup = SimulationSetup(16, [StationSpec() for _ in range(12)], duration_s=2.0)
    a, b = simulate_zc(setup, 4), simulate_zc(setup, 4)
    assert expanded_rows(a.trace) == expanded_rows(b.trace)
    assert _delivery_rows(a.deliveries) == _delivery_rows(b.deliveries)


def test_streams_are_independent_of_station_count():
    a = RunStreams.from_seed(7, 3)
    b = RunStreams.from_seed(7, 5)
    assert a.fault.random() == b.fault.random()
    assert a.stations[2].random() == b.stations[2].random()


def test_no_stations_gives_an_idle_trace():
    res = simulate_zc(SimulationSetup(4, [], duration_s=0.01), 0)
    assert res.trace.counts()["success"] == 0
    assert res.trace.total_ns >= 10_000_000


def test_runtime_cap():
    setup = SimulationSetup(64, [StationSpec() for _ in range(128)], duration_s=50.0, max_wall_s=1e-3)
    with pytest.raises(RuntimeCapExceeded):
        simulate_zc(setup, 0)


def test_single_station_owns_its_first_pick():
    res = simulate_zc(SimulationSetup(8, [StationSpec()], duration_s=0.2), 0)
    assert res.trace.counts()["collision"] == 0
    assert res.stats["picks"] == 1


def test_invalid_setups():
    with pytest.raises(ValueError):
        SimulationSetup(0, [])
    with pytest.raises(ValueError):
        StationSpec(slot_quota=2)
    with pytest.raises(ValueError):
        StationSpec(sessions=[(10.0, 5.0)])
    with pytest.raises(ValueError):
        SimulationSetup(4, [StationSpec()], graph=ConnectivityGraph.complete(2))

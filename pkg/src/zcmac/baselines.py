"""Reference MACs: 802.11b-style CSMA/CA with binary exponential backoff, and oracle-assigned TDMA."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from .engine import (DeliveryLog, RunResult, RunStreams, RuntimeCapExceeded, SimulationSetup, _Schedule,
                     build_queues)
from .medium import TraceBuilder, resolve
from .protocol import SlotKind
from .timing import to_ns
from .traffic import INF_NS

CW_MIN = 32
CW_MAX = 1024


class UndefinedConfigurationError(ValueError):
    pass


class CsmaAction(enum.Enum):
    DEFER = "defer"
    DECREMENT = "decrement"
    TRANSMIT = "transmit"


@dataclass
class CsmaState:
    contention_window: int = CW_MIN
    backoff_counter: int = 0

    def __post_init__(self):
        if not CW_MIN <= self.contention_window <= CW_MAX:
            raise ValueError(f"contention window must lie in [{CW_MIN}, {CW_MAX}]")
        if not 0 <= self.backoff_counter < self.contention_window:
            raise ValueError("backoff counter must lie in [0, CW)")


def draw_backoff(state: CsmaState, rng: np.random.Generator) -> CsmaState:
    state.backoff_counter = int(rng.integers(state.contention_window))
    return state


def csma_step(state: CsmaState, medium_idle: bool) -> CsmaAction:
    """One backoff slot of the DCF countdown (the DIFS wait is charged by the medium)."""
    if not medium_idle:
        return CsmaAction.DEFER
    if state.backoff_counter == 0:
        return CsmaAction.TRANSMIT
    state.backoff_counter -= 1
    return CsmaAction.DECREMENT


def csma_outcome(state: CsmaState, success: bool, rng: np.random.Generator) -> CsmaState:
    """Window update after a transmission, followed by a fresh backoff draw."""
    if success:
        state.contention_window = CW_MIN
    else:
        state.contention_window = min(2 * state.contention_window, CW_MAX)
    return draw_backoff(state, rng)


@dataclass
class TdmaState:
    assigned_slot: int
    n_slots: int

    def __post_init__(self):
        if not 0 <= self.assigned_slot < self.n_slots:
            raise ValueError("assigned_slot must lie in [0, n_slots)")


def tdma_step(state: TdmaState, global_slot_index: int, queue_nonempty: bool) -> bool:
    return queue_nonempty and global_slot_index % state.n_slots == state.assigned_slot


def assign_tdma(n_stations: int, n_slots: int) -> list[TdmaState]:
    if n_stations > n_slots:
        raise UndefinedConfigurationError(f"TDMA is undefined for M={n_stations} > N={n_slots}")
    return [TdmaState(i, n_slots) for i in range(n_stations)]


class CsmaSimulator:
    """Slot-synchronous DCF on a shared timeline.

    Carrier-sensing faults are not applied: they are defined on ZC's mini-slot
    counting and DCF has no equivalent state to corrupt.
    """

    def __init__(self, setup: SimulationSetup, seed: int, streams: RunStreams | None = None):
        self.setup = setup
        self.seed = seed
        S = len(setup.stations)
        self.S = S
        self.streams = streams or RunStreams.from_seed(seed, S)
        self.rngs = self.streams.stations
        phy = setup.phy
        self.phy = phy
        self.gap_ns = to_ns(phy.gap_us)
        self.slot_ns = to_ns(phy.slot_us)
        self.difs_ns = to_ns(phy.difs_us)
        self.queues = build_queues(setup)
        self.schedule = _Schedule(setup.stations)
        if setup.graph is not None:
            self.nodes = np.array([st.node for st in setup.stations], dtype=np.int64)
            self.receivers = np.array([st.receiver for st in setup.stations], dtype=np.int64)
        self.active = np.zeros(S, dtype=bool)
        self.contending = np.zeros(S, dtype=bool)
        self.cw = np.full(S, CW_MIN, dtype=np.int64)
        self.backoff = np.zeros(S, dtype=np.int64)
        self.cw_min_seen = CW_MAX
        self.cw_max_seen = CW_MIN
        self.now = 0
        self.end_ns = setup.duration_ns
        self.trace = TraceBuilder()
        self.deliveries: list[tuple[int, int, int, int, int]] = []
        self.attempts = np.zeros(S, dtype=np.int64)
        self.collided = np.zeros(S, dtype=np.int64)

    def _draw(self, i: int) -> None:
        self.backoff[i] = self.rngs[i].integers(self.cw[i])
        self.contending[i] = True

    def _events(self) -> None:
        for joining, i in self.schedule.due(self.now):
            if joining:
                self.active[i] = True
                self.cw[i] = CW_MIN
                self.queues.activate(i, self.now)
                if self.queues.has[i]:
                    self._draw(i)
            else:
                self.active[i] = False
                self.contending[i] = False
                self.queues.flush(i)
        for i in self.queues.release(self.now, self.active):
            if not self.contending[i]:
                self._draw(int(i))

    def _next_event(self) -> int:
        return min(self.queues.earliest_arrival(), self.schedule.next_ns(), self.end_ns)

    def run(self) -> RunResult:
        cap = self.setup.max_wall_s
        t0 = time.monotonic()
        steps = 0
        self._events()
        if self.now < self.end_ns:
            self.trace.add_idle_run(self.now, self.difs_ns, 1)
            self.now += self.difs_ns
            self._events()
        while self.now < self.end_ns:
            c = np.flatnonzero(self.contending)
            if c.size == 0:
                nxt = self._next_event()
                self.trace.add_idle_run(self.now, nxt - self.now, 1)
                self.now = nxt
                self._events()
                continue
            tx = c[self.backoff[c] == 0]
            if tx.size == 0:
                k = int(self.backoff[c].min())
                k = min(k, -(-(self._next_event() - self.now) // (self.slot_ns + self.gap_ns)))
                k = max(k, 1)
                self.backoff[c] -= k
                self.trace.add_idle_run(self.now, self.slot_ns + self.gap_ns, k)
                self.now += k * (self.slot_ns + self.gap_ns)
            else:
                self._transmit(c, tx)
            self._events()
            steps += 1
            if cap is not None and steps % 1024 == 0 and time.monotonic() - t0 > cap:
                raise RuntimeCapExceeded(f"CSMA run exceeded {cap} s of wall time at t={self.now / 1e9:.3f} s")
        return self._result()

    def _transmit(self, contenders: np.ndarray, tx: np.ndarray) -> None:
        phy = self.phy
        sizes = np.array([self.queues.head_mpdu(int(i)) for i in tx], dtype=np.int64)
        if self.setup.graph is None:
            res = resolve(tx, None)
        else:
            res = resolve(self.nodes[tx], self.setup.graph, self.receivers[tx])
        if res.any_failed:
            dur = phy.collision_ns(int(sizes.max())) + self.gap_ns
            kind = SlotKind.COLLISION
        else:
            dur = phy.success_ns(int(sizes.max())) + self.difs_ns + self.gap_ns
            kind = SlotKind.BUSY
        start, end = self.now, self.now + dur
        bits = 0
        for j, i in enumerate(tx):
            i = int(i)
            self.attempts[i] += 1
            if res.success[j]:
                pkt = self.queues.pop(i, end)
                self.deliveries.append((i, start, end, pkt.enqueue_ns, pkt.payload_bytes))
                bits += 8 * pkt.payload_bytes
                self.cw[i] = CW_MIN
            else:
                self.collided[i] += 1
                self.cw[i] = min(2 * self.cw[i], CW_MAX)
            self.cw_min_seen = min(self.cw_min_seen, int(self.cw[i]))
            self.cw_max_seen = max(self.cw_max_seen, int(self.cw[i]))
            if self.queues.has[i]:
                self._draw(i)
            else:
                self.contending[i] = False
        if self.setup.graph is not None:
            # contenders that heard nothing keep counting down
            waiting = np.setdiff1d(contenders, tx)
            deaf = waiting[res.heard[self.nodes[waiting]] == 0]
            self.backoff[deaf] = np.maximum(self.backoff[deaf] - 1, 0)
        self.trace.add(start, dur, int(kind), tx.tolist(), bits)
        self.now = end

    def _result(self) -> RunResult:
        return RunResult(
            protocol="csma", n_slots=self.setup.n_slots, n_stations=self.S, seed=self.seed, end_ns=self.now,
            trace=self.trace.build(), deliveries=DeliveryLog.from_rows(self.deliveries),
            convergence_log=[], single_domain=self.setup.graph is None, faulty=self.setup.fault.enabled,
            stats={
                "attempts": self.attempts.tolist(),
                "collided": self.collided.tolist(),
                "cw_min_seen": self.cw_min_seen,
                "cw_max_seen": self.cw_max_seen,
            },
        )


class TdmaSimulator:
    """Fixed frame of ``N`` slots, each a full successful-transmission time long; station ``i`` owns slot ``i``."""

    def __init__(self, setup: SimulationSetup, seed: int):
        self.setup = setup
        self.seed = seed
        self.states = assign_tdma(len(setup.stations), setup.n_slots)
        self.queues = build_queues(setup)
        self.schedule = _Schedule(setup.stations)
        self.active = np.zeros(len(setup.stations), dtype=bool)
        longest = max((src.mpdu_bytes for st in setup.stations for src in st.sources), default=0)
        self.slot_ns = setup.phy.success_ns(longest) + to_ns(setup.phy.gap_us)

    def _events(self, now: int) -> None:
        for joining, i in self.schedule.due(now):
            self.active[i] = joining
            if joining:
                self.queues.activate(i, now)
            else:
                self.queues.flush(i)
        self.queues.release(now, self.active)

    def run(self) -> RunResult:
        setup = self.setup
        N, S = setup.n_slots, len(self.states)
        trace = TraceBuilder()
        deliveries = []
        now, g, end = 0, 0, setup.duration_ns
        idle_from, idle_run = 0, 0
        cap = setup.max_wall_s
        t0 = time.monotonic()
        self._events(now)
        while now < end:
            owner = g % N
            sends = owner < S and self.active[owner] and tdma_step(self.states[owner], g, bool(self.queues.has[owner]))
            if sends:
                if idle_run:
                    trace.add_idle_run(idle_from, self.slot_ns, idle_run)
                    idle_run = 0
                stop = now + self.slot_ns
                pkt = self.queues.pop(owner, stop)
                deliveries.append((owner, now, stop, pkt.enqueue_ns, pkt.payload_bytes))
                trace.add(now, self.slot_ns, int(SlotKind.BUSY), [owner], 8 * pkt.payload_bytes)
            else:
                if not idle_run:
                    idle_from = now
                idle_run += 1
            now += self.slot_ns
            g += 1
            self._events(now)
            if cap is not None and g % 4096 == 0 and time.monotonic() - t0 > cap:
                raise RuntimeCapExceeded(f"TDMA run exceeded {cap} s of wall time")
        if idle_run:
            trace.add_idle_run(idle_from, self.slot_ns, idle_run)
        return RunResult(
            protocol="tdma", n_slots=N, n_stations=S, seed=self.seed, end_ns=now, trace=trace.build(),
            deliveries=DeliveryLog.from_rows(deliveries), convergence_log=[], single_domain=setup.graph is None,
            faulty=setup.fault.enabled, stats={},
        )


def simulate_csma(setup: SimulationSetup, seed: int) -> RunResult:
    return CsmaSimulator(setup, seed).run()


def simulate_tdma(setup: SimulationSetup, seed: int) -> RunResult:
    return TdmaSimulator(setup, seed).run()

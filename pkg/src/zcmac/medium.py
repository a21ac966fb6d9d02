"""Shared-channel primitives: who decodes what in a slot, noisy carrier sensing, topologies and traces."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .protocol import SlotKind

DECODED = "decoded"
COLLIDED = "collided"
IDLE = "idle"

KIND_NAMES = {int(SlotKind.EMPTY): "idle", int(SlotKind.BUSY): "success", int(SlotKind.COLLISION): "collision"}


@dataclass(frozen=True)
class FaultModel:
    """Per-station carrier-sensing errors.

    p1: idle mini-slot sensed busy; p2: idle mini-slot counted twice (clock
    drift), drawn only when the slot was not already mis-sensed busy; p3: busy
    slot sensed idle.
    """

    p1: float = 0.0
    p2: float = 0.0
    p3: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p3"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def symmetric(cls, p: float) -> "FaultModel":
        return cls(p1=p, p2=p, p3=0.0)

    @property
    def enabled(self) -> bool:
        return self.p1 > 0 or self.p2 > 0 or self.p3 > 0


NO_FAULTS = FaultModel()


def sense_kinds(truth: np.ndarray, fm: FaultModel, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`sense` driven by one uniform per station.

    Returns the first sensed kind per station and a mask of stations that
    count an extra idle mini-slot.
    """
    sensed = truth.copy()
    idle = truth == SlotKind.EMPTY
    busy_err = idle & (u < fm.p1)
    double = idle & ~busy_err & (u < fm.p1 + (1.0 - fm.p1) * fm.p2)
    sensed[busy_err] = SlotKind.COLLISION
    if fm.p3 > 0:
        sensed[~idle & (u < fm.p3)] = SlotKind.EMPTY
    return sensed, double


def sense(truth: SlotKind, fm: FaultModel, rng: np.random.Generator) -> tuple[SlotKind, ...]:
    """What one station perceives of one slot; two entries mean a double-counted mini-slot.

    A spuriously busy mini-slot carries no ACK, so it is perceived as a
    collision.
    """
    sensed, double = sense_kinds(np.array([truth]), fm, np.array([rng.random()]))
    first = SlotKind(int(sensed[0]))
    return (first, SlotKind.EMPTY) if double[0] else (first,)


@dataclass
class ConnectivityGraph:
    adjacency: np.ndarray
    flow_pairs: list[tuple[int, int]] = field(default_factory=list)
    positions: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("connectivity must be reciprocal (symmetric adjacency)")
        a = a.copy()
        np.fill_diagonal(a, False)
        self.adjacency = a
        for src, dst in self.flow_pairs:
            if not a[src, dst]:
                raise ValueError(f"flow pair ({src}, {dst}) is not connected")

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def complete(cls, node_count: int, flow_pairs: Sequence[tuple[int, int]] = ()) -> "ConnectivityGraph":
        return cls(~np.eye(node_count, dtype=bool), list(flow_pairs))

    def is_complete(self) -> bool:
        return bool(self.adjacency.sum() == self.node_count * (self.node_count - 1))

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


def random_topology(node_count: int, gamma: float, rng: np.random.Generator,
                    area: tuple[float, float] = (200.0, 200.0)) -> ConnectivityGraph:
    """Nodes ``2j`` and ``2j + 1`` form flow pair ``j``; any other pair hears each other w.p. ``gamma``.

    Coordinates are drawn for reporting only; connectivity ignores them.
    """
    if node_count % 2:
        raise ValueError("node_count must be even (nodes come in flow pairs)")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    positions = rng.uniform((0.0, 0.0), area, size=(node_count, 2))
    upper = np.triu(rng.random((node_count, node_count)) < gamma, k=1)
    adj = upper | upper.T
    pairs = [(2 * j, 2 * j + 1) for j in range(node_count // 2)]
    for a, b in pairs:
        adj[a, b] = adj[b, a] = True
    return ConnectivityGraph(adj, pairs, positions)


@dataclass
class Resolution:
    """Raw outcome of one slot: per-transmitter success and per-node heard count."""

    transmitters: np.ndarray
    success: np.ndarray
    heard: np.ndarray | None   # None for a single collision domain
    adjacency: np.ndarray | None = None

    @property
    def any_failed(self) -> bool:
        return bool(self.transmitters.size) and not bool(self.success.all())

    def observed_kinds(self, nodes: np.ndarray) -> np.ndarray | int:
        """Slot kind as perceived by each (non-transmitting) node."""
        n = self.transmitters.size
        if self.heard is None:
            if n == 0:
                return int(SlotKind.EMPTY)
            return int(SlotKind.BUSY) if n == 1 else int(SlotKind.COLLISION)
        heard = self.heard[nodes]
        kinds = np.full(nodes.shape, int(SlotKind.COLLISION), dtype=np.int8)
        kinds[heard == 0] = SlotKind.EMPTY
        single = np.flatnonzero(heard == 1)
        if single.size and n:
            # the lone transmitter a node hears; it reads BUSY only if that one got its ACK
            adj = self.adjacency[nodes[single]][:, self.transmitters]
            which = adj.argmax(axis=1)
            kinds[single] = np.where(self.success[which], SlotKind.BUSY, SlotKind.COLLISION)
        return kinds


def resolve(tx_nodes: np.ndarray, graph: ConnectivityGraph | None,
            receivers: np.ndarray | None = None) -> Resolution:
    """Decide which transmissions are decoded by their intended receivers.

    With ``graph=None`` (one collision domain) a lone transmitter succeeds and
    two or more all fail.  Otherwise a transmission decodes iff its receiver
    is silent and hears no other transmitter.
    """
    tx_nodes = np.asarray(tx_nodes, dtype=np.int64)
    n = tx_nodes.size
    if graph is None:
        return Resolution(tx_nodes, np.full(n, n == 1), None)
    adj = graph.adjacency
    heard = adj[:, tx_nodes].sum(axis=1) if n else np.zeros(graph.node_count, dtype=np.int64)
    if receivers is None:
        raise ValueError("receivers are required with a connectivity graph")
    rx = np.asarray(receivers, dtype=np.int64)
    transmitting = np.zeros(graph.node_count, dtype=bool)
    transmitting[tx_nodes] = True
    success = (heard[rx] == 1) & ~transmitting[rx] & adj[rx, tx_nodes]
    return Resolution(tx_nodes, success, heard, adj)


@dataclass(frozen=True)
class SlotOutcomeRecord:
    wall_time_ns: int
    duration_ns: int
    transmitters: tuple[int, ...]
    per_receiver_result: dict[int, str]

    @property
    def wall_time(self) -> float:
        return self.wall_time_ns / 1000.0

    @property
    def duration(self) -> float:
        return self.duration_ns / 1000.0


def resolve_slot(transmitters: Iterable[int], graph: ConnectivityGraph, *,
                 receivers: dict[int, int] | None = None, wall_time_ns: int = 0,
                 durations_ns: tuple[int, int, int] | None = None) -> SlotOutcomeRecord:
    """Per-receiver outcome of one slot.

    ``receivers`` maps a transmitter to its intended receiver; without it
    every other node is a would-be receiver and the single-domain rule
    applies.  ``durations_ns`` is ``(t_g, t_b, t_v)`` and fixes the charged
    slot length: ``t_b`` if any transmission failed, else ``t_g`` if any was
    sent, else ``t_v``.
    """
    tx = np.array(sorted(set(transmitters)), dtype=np.int64)
    nodes = np.arange(graph.node_count)
    if receivers is None:
        complete = graph.is_complete()
        res = resolve(tx, None if complete else graph,
                      None if complete else np.array([_nearest(graph, t, tx) for t in tx]))
    else:
        res = resolve(tx, graph, np.array([receivers[int(t)] for t in tx], dtype=np.int64))

    results: dict[int, str] = {}
    if res.heard is None:
        heard = np.full(graph.node_count, tx.size)
        heard[tx] = tx.size - 1
    else:
        heard = res.heard
    for node in nodes:
        if node in tx:
            continue
        results[int(node)] = IDLE if heard[node] == 0 else DECODED if heard[node] == 1 else COLLIDED
    if durations_ns is None:
        durations_ns = (0, 0, 0)
    t_g, t_b, t_v = durations_ns
    duration = t_v if tx.size == 0 else t_b if res.any_failed else t_g
    return SlotOutcomeRecord(wall_time_ns, duration, tuple(int(t) for t in tx), results)


def _nearest(graph: ConnectivityGraph, t: int, tx: np.ndarray) -> int:
    # any silent neighbour serves as the receiver when none is named
    for r in np.flatnonzero(graph.adjacency[t]):
        if r not in tx:
            return int(r)
    return int(t)


class TraceBuilder:
    """Append-only slot log; runs of identical idle mini-slots are stored as one row with a count."""

    def __init__(self):
        self.start: list[int] = []
        self.duration: list[int] = []
        self.count: list[int] = []
        self.kind: list[int] = []
        self.delivered_bits: list[int] = []
        self.tx_ptr: list[int] = [0]
        self.tx_ids: list[int] = []

    def add(self, start: int, duration: int, kind: int, transmitters: Sequence[int], bits: int) -> None:
        self.start.append(start)
        self.duration.append(duration)
        self.count.append(1)
        self.kind.append(kind)
        self.delivered_bits.append(bits)
        self.tx_ids.extend(transmitters)
        self.tx_ptr.append(len(self.tx_ids))

    def add_idle_run(self, start: int, step: int, count: int) -> None:
        self.start.append(start)
        self.duration.append(step)
        self.count.append(count)
        self.kind.append(int(SlotKind.EMPTY))
        self.delivered_bits.append(0)
        self.tx_ptr.append(len(self.tx_ids))

    def build(self) -> "Trace":
        return Trace(
            start_ns=np.array(self.start, dtype=np.int64),
            duration_ns=np.array(self.duration, dtype=np.int64),
            count=np.array(self.count, dtype=np.int64),
            kind=np.array(self.kind, dtype=np.int8),
            delivered_bits=np.array(self.delivered_bits, dtype=np.int64),
            tx_ptr=np.array(self.tx_ptr, dtype=np.int64),
            tx_ids=np.array(self.tx_ids, dtype=np.int64),
        )


@dataclass
class Trace:
    """Slot log.  Row ``i`` stands for ``count[i]`` consecutive slots of ``duration_ns[i]`` each."""

    start_ns: np.ndarray
    duration_ns: np.ndarray
    count: np.ndarray
    kind: np.ndarray
    delivered_bits: np.ndarray
    tx_ptr: np.ndarray
    tx_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.start_ns)

    @property
    def n_slots(self) -> int:
        return int(self.count.sum())

    @property
    def end_ns(self) -> np.ndarray:
        return self.start_ns + self.duration_ns * self.count

    @property
    def total_ns(self) -> int:
        return int((self.duration_ns * self.count).sum())

    def transmitters(self, i: int) -> np.ndarray:
        return self.tx_ids[self.tx_ptr[i]:self.tx_ptr[i + 1]]

    def counts(self) -> dict[str, int]:
        return {name: int(self.count[self.kind == k].sum()) for k, name in KIND_NAMES.items()}

    def expanded(self) -> "Trace":
        """One row per slot."""
        reps = self.count
        first = np.repeat(self.start_ns, reps)
        offsets = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
        ntx = np.diff(self.tx_ptr)
        return Trace(
            start_ns=first + offsets * np.repeat(self.duration_ns, reps),
            duration_ns=np.repeat(self.duration_ns, reps),
            count=np.ones(int(reps.sum()), dtype=np.int64),
            kind=np.repeat(self.kind, reps),
            delivered_bits=np.repeat(self.delivered_bits, reps),
            tx_ptr=np.concatenate([[0], np.cumsum(np.repeat(ntx, reps))]).astype(np.int64),
            tx_ids=self.tx_ids.copy(),
        )

    def records(self, graph: "ConnectivityGraph | None" = None):
        """Yield one :class:`SlotOutcomeRecord` per slot (single-domain view when no graph is given)."""
        nodes = graph.node_count if graph is not None else None
        for i in range(len(self)):
            tx = tuple(int(t) for t in self.transmitters(i))
            for j in range(int(self.count[i])):
                t0 = int(self.start_ns[i] + j * self.duration_ns[i])
                per = {}
                if nodes is not None:
                    name = IDLE if not tx else DECODED if self.kind[i] == SlotKind.BUSY else COLLIDED
                    per = {n: name for n in range(nodes) if n not in tx}
                yield SlotOutcomeRecord(t0, int(self.duration_ns[i]), tx, per)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["wall_time_us", "duration_us", "kind", "transmitters"])
            for i in range(len(self)):
                dur = int(self.duration_ns[i])
                kind = KIND_NAMES[int(self.kind[i])]
                tx = ";".join(str(t) for t in self.transmitters(i))
                t0 = int(self.start_ns[i])
                for j in range(int(self.count[i])):
                    w.writerow([format_us(t0 + j * dur), format_us(dur), kind, tx])


def format_us(ns: int) -> str:
    """Exact decimal microseconds from integer nanoseconds."""
    sign = "-" if ns < 0 else ""
    ns = abs(ns)
    return f"{sign}{ns // 1000}.{ns % 1000:03d}"

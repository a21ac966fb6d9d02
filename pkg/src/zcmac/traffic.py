"""Packet arrival processes and the per-station FIFO queues they feed."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

import numpy as np

from .timing import to_ns

INF_NS = np.iinfo(np.int64).max

VOIP_PAYLOAD_BYTES = 240
VOIP_PERIOD_US = 30_000.0
SPARSE_PERIOD_US = 300_000.0
MAX_PACKET_BYTES = 2346


class TrafficKind(str, enum.Enum):
    BACKLOGGED = "backlogged"
    PERIODIC_CBR = "periodic-cbr"
    SPARSE_PERIODIC = "sparse-periodic"


@dataclass(frozen=True)
class TrafficSource:
    """One packet stream.

    ``packet_bytes`` is the application payload; ``overhead_bytes`` (headers
    added below the application) only lengthens the frame on air.
    """

    kind: TrafficKind = TrafficKind.BACKLOGGED
    packet_bytes: int = MAX_PACKET_BYTES
    period_us: float | None = None
    start_offset_us: float = 0.0
    overhead_bytes: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", TrafficKind(self.kind))
        if self.packet_bytes <= 0:
            raise ValueError("packet_bytes must be > 0")
        if self.overhead_bytes < 0:
            raise ValueError("overhead_bytes must be >= 0")
        if self.start_offset_us < 0:
            raise ValueError("start_offset_us must be >= 0")
        if self.kind is not TrafficKind.BACKLOGGED:
            if self.period_us is None or self.period_us <= 0:
                raise ValueError(f"{self.kind.value} traffic needs a positive period_us")

    @property
    def periodic(self) -> bool:
        return self.kind is not TrafficKind.BACKLOGGED

    @property
    def mpdu_bytes(self) -> int:
        return self.packet_bytes + self.overhead_bytes

    def offered_load_bps(self) -> float:
        if not self.periodic:
            return float("inf")
        return self.packet_bytes * 8 / (self.period_us * 1e-6)

    @classmethod
    def backlogged(cls, packet_bytes: int = MAX_PACKET_BYTES) -> "TrafficSource":
        return cls(TrafficKind.BACKLOGGED, packet_bytes)

    @classmethod
    def voip(cls, start_offset_us: float = 0.0, overhead_bytes: int = 0) -> "TrafficSource":
        return cls(TrafficKind.PERIODIC_CBR, VOIP_PAYLOAD_BYTES, VOIP_PERIOD_US, start_offset_us, overhead_bytes)

    @classmethod
    def sparse(cls, start_offset_us: float = 0.0) -> "TrafficSource":
        return cls(TrafficKind.SPARSE_PERIODIC, MAX_PACKET_BYTES, SPARSE_PERIOD_US, start_offset_us)


def next_arrival(src: TrafficSource, now_us: float) -> tuple[float, int] | None:
    """First arrival at or after ``now_us`` as ``(time_us, packet_bytes)``."""
    if now_us < 0:
        raise ValueError("now must be >= 0")
    if not src.periodic:
        return now_us, src.packet_bytes
    k = max(0, int(np.ceil((now_us - src.start_offset_us) / src.period_us)))
    return src.start_offset_us + k * src.period_us, src.packet_bytes


def arrival_times_ns(src: TrafficSource, horizon_ns: int) -> np.ndarray:
    """All arrival instants in ``[0, horizon_ns]`` of a periodic source."""
    if not src.periodic:
        raise ValueError("a backlogged source has no discrete arrival times")
    offset, period = to_ns(src.start_offset_us), to_ns(src.period_us)
    if offset > horizon_ns:
        return np.empty(0, dtype=np.int64)
    return np.arange(offset, horizon_ns + 1, period, dtype=np.int64)


@dataclass(frozen=True)
class Packet:
    enqueue_ns: int
    payload_bytes: int
    mpdu_bytes: int


class PacketQueues:
    """FIFO queues for a set of stations, each fed by one or more sources.

    A station with any backlogged source is always non-empty; its head packet
    is considered enqueued when the previous one left.
    """

    def __init__(self, sources: list[list[TrafficSource]], horizon_ns: int):
        S = len(sources)
        self.n = S
        self.backlogged = np.zeros(S, dtype=bool)
        self.backlog_packet: list[TrafficSource | None] = [None] * S
        self.hol_since = np.zeros(S, dtype=np.int64)
        self._times: list[np.ndarray] = []
        self._sizes: list[np.ndarray] = []
        self._mpdus: list[np.ndarray] = []
        self._ptr = np.zeros(S, dtype=np.int64)
        self.queues: list[deque[Packet]] = [deque() for _ in range(S)]
        self.next_arrival = np.full(S, INF_NS, dtype=np.int64)
        for i, srcs in enumerate(sources):
            times, sizes, mpdus = [], [], []
            for src in srcs:
                if not src.periodic:
                    self.backlogged[i] = True
                    self.backlog_packet[i] = src
                    continue
                t = arrival_times_ns(src, horizon_ns)
                times.append(t)
                sizes.append(np.full(t.size, src.packet_bytes, dtype=np.int64))
                mpdus.append(np.full(t.size, src.mpdu_bytes, dtype=np.int64))
            if times:
                t = np.concatenate(times)
                order = np.argsort(t, kind="stable")
                self._times.append(t[order])
                self._sizes.append(np.concatenate(sizes)[order])
                self._mpdus.append(np.concatenate(mpdus)[order])
            else:
                self._times.append(np.empty(0, dtype=np.int64))
                self._sizes.append(np.empty(0, dtype=np.int64))
                self._mpdus.append(np.empty(0, dtype=np.int64))
            if self._times[i].size:
                self.next_arrival[i] = self._times[i][0]
        self.qlen = np.zeros(S, dtype=np.int64)
        self.has = self.backlogged.copy()

    def earliest_arrival(self) -> int:
        return int(self.next_arrival.min()) if self.n else INF_NS

    def release(self, now_ns: int, active: np.ndarray) -> np.ndarray:
        """Enqueue every arrival up to ``now_ns``; inactive stations drop theirs.

        Returns the stations whose queue went from empty to non-empty.
        """
        due = np.flatnonzero(self.next_arrival <= now_ns)
        woke = []
        for i in due:
            times = self._times[i]
            p = self._ptr[i]
            end = int(np.searchsorted(times, now_ns, side="right"))
            if active[i]:
                was_empty = not self.has[i]
                q = self.queues[i]
                for j in range(p, end):
                    q.append(Packet(int(times[j]), int(self._sizes[i][j]), int(self._mpdus[i][j])))
                self.qlen[i] += end - p
                self.has[i] = True
                if was_empty:
                    woke.append(i)
            self._ptr[i] = end
            self.next_arrival[i] = times[end] if end < times.size else INF_NS
        return np.array(woke, dtype=np.int64)

    def head_mpdu(self, i: int) -> int:
        if self.qlen[i]:
            return self.queues[i][0].mpdu_bytes
        return self.backlog_packet[i].mpdu_bytes

    def pop(self, i: int, end_ns: int) -> Packet:
        """Remove the head packet after it was delivered at ``end_ns``."""
        if self.qlen[i]:
            pkt = self.queues[i].popleft()
            self.qlen[i] -= 1
            self.has[i] = self.backlogged[i] or self.qlen[i] > 0
            return pkt
        src = self.backlog_packet[i]
        pkt = Packet(int(self.hol_since[i]), src.packet_bytes, src.mpdu_bytes)
        self.hol_since[i] = end_ns
        return pkt

    def activate(self, i: int, now_ns: int) -> None:
        self.hol_since[i] = now_ns

    def flush(self, i: int) -> None:
        self.queues[i].clear()
        self.qlen[i] = 0
        self.has[i] = self.backlogged[i]

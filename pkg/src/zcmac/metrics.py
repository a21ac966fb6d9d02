"""Reported quantities computed from slot traces and delivery logs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import DeliveryLog, RunResult
from .medium import Trace
from .protocol import SlotKind

DEFAULT_HORIZON_ROUNDS = 3
PERCENTILES = (50, 90, 95, 99)
RUN_CSV_HEADER = ["protocol", "N", "M", "seed", "goodput_bps", "mean_iad_us", "p99_delay_us",
                  "convergence_us", "collisions"]


class EmptyWindowError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


def percentile(values, q: float) -> float:
    """Nearest-rank percentile: always one of the observed values."""
    values = np.asarray(values)
    if values.size == 0:
        raise InsufficientDataError("no samples")
    return float(np.percentile(values, q, method="inverted_cdf"))


def _check_window(window: tuple[int, int]) -> tuple[int, int]:
    t0, t1 = int(window[0]), int(window[1])
    if t1 <= t0:
        raise EmptyWindowError(f"empty window [{t0}, {t1}) ns")
    return t0, t1


def goodput(trace: Trace, window: tuple[int, int]) -> float:
    """Payload bits decoded at intended receivers per second, for slots ending inside ``[t0, t1]``."""
    t0, t1 = _check_window(window)
    end = trace.end_ns
    inside = (end > t0) & (end <= t1)
    return float(trace.delivered_bits[inside].sum()) / ((t1 - t0) * 1e-9)


def goodput_from_deliveries(log: DeliveryLog, window: tuple[int, int]) -> float:
    t0, t1 = _check_window(window)
    inside = (log.end_ns > t0) & (log.end_ns <= t1)
    return float(8 * log.payload_bytes[inside].sum()) / ((t1 - t0) * 1e-9)


@dataclass(frozen=True)
class DelaySummary:
    samples: np.ndarray = field(repr=False)
    mean_us: float
    percentiles_us: dict

    @classmethod
    def of(cls, samples_ns: np.ndarray) -> "DelaySummary":
        us = np.asarray(samples_ns, dtype=np.float64) / 1000.0
        if us.size == 0:
            raise InsufficientDataError("no samples")
        return cls(us, float(us.mean()), {str(q): percentile(us, q) for q in PERCENTILES})


def interaccess_delay(log: DeliveryLog, station: int, window: tuple[int, int] | None = None) -> DelaySummary:
    """Gaps between a station's successive successful transmission starts."""
    mine = log.for_station(station)
    starts = np.sort(mine.start_ns)
    if window is not None:
        starts = starts[(starts >= window[0]) & (starts <= window[1])]
    if starts.size < 2:
        raise InsufficientDataError(f"station {station} has {starts.size} successful transmissions")
    return DelaySummary.of(np.diff(starts))


def access_delays(log: DeliveryLog, window: tuple[int, int] | None = None) -> np.ndarray:
    """Enqueue-to-completion delay (ns) of packets enqueued inside the window."""
    d = log.end_ns - log.enqueue_ns
    if window is not None:
        d = d[(log.enqueue_ns >= window[0]) & (log.enqueue_ns < window[1])]
    return d


def detect_convergence(result: RunResult, horizon: int = DEFAULT_HORIZON_ROUNDS) -> int | None:
    """First time (ns) every active station held a distinct slot, confirmed by ``horizon`` collision-free rounds.

    Undefined (``None``) for runs with sensing faults or several collision
    domains, and when the trace ends before the confirmation window does.
    """
    if result.faulty or not result.single_domain or not result.convergence_log:
        return None
    trace = result.trace
    if len(trace) == 0:
        return None
    need = horizon * result.n_slots
    cum = np.cumsum(trace.count)
    collided = np.cumsum(trace.count * (trace.kind == SlotKind.COLLISION))
    for t, settled in result.convergence_log:
        if not settled:
            continue
        first = int(np.searchsorted(trace.start_ns, t, side="left"))
        before = int(cum[first - 1]) if first else 0
        if int(cum[-1]) - before < need:
            return None
        last = int(np.searchsorted(cum, before + need, side="left"))
        c_before = int(collided[first - 1]) if first else 0
        if int(collided[last]) - c_before == 0:
            return int(t)
    return None


def collisions_after(trace: Trace, t_ns: int) -> int:
    later = trace.start_ns >= t_ns
    return int(trace.count[later & (trace.kind == SlotKind.COLLISION)].sum())


def slots_after(trace: Trace, t_ns: int) -> int:
    return int(trace.count[trace.start_ns >= t_ns].sum())


@dataclass
class MetricsReport:
    protocol: str
    N: int
    M: int
    seed: int
    window_us: tuple[float, float]
    goodput_bps: float
    mean_interaccess_delay_us: float | None
    delay_percentiles_us: dict
    convergence_time_us: float | None
    collisions_total: int
    slot_counts: dict
    per_station: list[dict]

    def csv_row(self) -> list:
        return [self.protocol, self.N, self.M, self.seed, _fmt(self.goodput_bps),
                _fmt(self.mean_interaccess_delay_us), _fmt(self.delay_percentiles_us.get("99")),
                _fmt(self.convergence_time_us), self.collisions_total]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def report(result: RunResult, window: tuple[int, int] | None = None,
           horizon: int = DEFAULT_HORIZON_ROUNDS) -> MetricsReport:
    if window is None:
        window = (0, result.end_ns)
    t0, t1 = _check_window(window)
    log = result.deliveries
    per_station = []
    iad_means = []
    attempts = result.stats.get("attempts", [0] * result.n_stations)
    collided = result.stats.get("collided", [0] * result.n_stations)
    for i in range(result.n_stations):
        mine = log.for_station(i)
        entry = {"station": i, "delivered": int(len(mine)),
                 "goodput_bps": goodput_from_deliveries(mine, (t0, t1)),
                 "attempts": int(attempts[i]), "collided": int(collided[i]), "mean_iad_us": None}
        try:
            entry["mean_iad_us"] = interaccess_delay(log, i, (t0, t1)).mean_us
            iad_means.append(entry["mean_iad_us"])
        except InsufficientDataError:
            pass
        per_station.append(entry)
    delays = access_delays(log, (t0, t1))
    pct = {str(q): percentile(delays / 1000.0, q) for q in PERCENTILES} if delays.size else {}
    conv = detect_convergence(result, horizon) if result.protocol == "zc" else None
    return MetricsReport(
        protocol=result.protocol, N=result.n_slots, M=result.n_stations, seed=result.seed,
        window_us=(t0 / 1000.0, t1 / 1000.0),
        goodput_bps=goodput(result.trace, (t0, t1)),
        mean_interaccess_delay_us=float(np.mean(iad_means)) if iad_means else None,
        delay_percentiles_us=pct,
        convergence_time_us=None if conv is None else conv / 1000.0,
        collisions_total=result.trace.counts()["collision"],
        slot_counts=result.trace.counts(),
        per_station=per_station,
    )


def mean_ci(samples, z: float = 2.5758293035489004) -> tuple[float, float, float]:
    """Mean with a normal-approximation confidence interval (99% by default)."""
    x = np.asarray(samples, dtype=np.float64)
    m = float(x.mean())
    half = z * float(x.std(ddof=1)) / np.sqrt(x.size) if x.size > 1 else 0.0
    return m, m - half, m + half

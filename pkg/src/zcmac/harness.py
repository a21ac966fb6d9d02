"""Scenario orchestration: configs to simulator setups, seeded runs, sweeps and analysis tables."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import analyze_pair
from .baselines import simulate_csma, simulate_tdma
from .config import ExperimentConfig, load_config, parse_config
from .engine import RunResult, RunStreams, SimulationSetup, StationSpec, ZcSimulator
from .medium import random_topology
from .metrics import RUN_CSV_HEADER, MetricsReport, report
from .protocol import Role
from .timing import QUOTED_TIMING, TimingParameters
from .traffic import TrafficSource

ANALYSIS_CSV_HEADER = ["N", "M", "expected_cycles", "upper_bound_s", "exact_expected_s"]
SWEEP_CSV_HEADER = ["sweep_param", "sweep_value"] + RUN_CSV_HEADER


def build_setup(cfg: ExperimentConfig, seed: int) -> tuple[SimulationSetup, RunStreams]:
    """Translate a config into stations, traffic phases and (for random topologies) a graph."""
    M = cfg.M
    ap = cfg.access_point
    n_stations = M + (1 if ap.enabled else 0)
    streams = RunStreams.from_seed(seed, n_stations)
    t = cfg.traffic
    periodic = t.kind != "backlogged"
    if periodic and t.stagger:
        offsets = streams.traffic.uniform(0.0, t.period_us, size=M)
    else:
        offsets = np.full(M, t.start_offset_us)

    def source(j: int) -> TrafficSource:
        if not periodic:
            return TrafficSource(t.kind, t.packet_bytes, overhead_bytes=t.overhead_bytes)
        return TrafficSource(t.kind, t.packet_bytes, t.period_us, float(offsets[j]), t.overhead_bytes)

    sessions: dict[int, list[tuple[float, float | None]]] = {}
    for a in sorted(cfg.arrival_schedule, key=lambda a: (a.station, a.join_s)):
        sessions.setdefault(a.station, []).append(
            (a.join_s * 1e6, None if a.leave_s is None else a.leave_s * 1e6))

    stations = [StationSpec(sources=[source(j)], sessions=sessions.get(j, [(0.0, None)])) for j in range(M)]
    graph = None
    if cfg.topology.kind == "random":
        graph = random_topology(2 * M, cfg.topology.gamma, streams.topology)
        for j, st in enumerate(stations):
            st.node, st.receiver = 2 * j, 2 * j + 1
    if ap.enabled:
        quota = ap.quota if ap.quota is not None else max(M, 1)
        sources = [source(j) for j in range(M)] if ap.mirror_traffic else [TrafficSource.backlogged()]
        if cfg.protocol == "zc":
            stations.append(StationSpec(sources=sources, role=Role.ACCESS_POINT, slot_quota=quota,
                                        use_anchor=ap.anchor))
        else:
            stations.append(StationSpec(sources=sources))
    setup = SimulationSetup(
        n_slots=cfg.N, stations=stations, duration_s=cfg.duration_s, phy=cfg.phy, fault=cfg.fault,
        graph=graph, recycle_rounds=cfg.recycle_rounds, reselection_mode=cfg.reselection_mode,
        stop_after_convergence=cfg.stop_after_convergence, max_wall_s=cfg.max_wall_s,
    )
    return setup, streams


def simulate(cfg: ExperimentConfig, seed: int) -> RunResult:
    setup, streams = build_setup(cfg, seed)
    if cfg.protocol == "zc":
        return ZcSimulator(setup, seed, streams).run()
    if cfg.protocol == "csma":
        return simulate_csma(setup, seed)
    return simulate_tdma(setup, seed)


def run_one(cfg: ExperimentConfig, seed: int) -> tuple[RunResult, MetricsReport]:
    result = simulate(cfg, seed)
    window = (int(round(cfg.warmup_s * 1e9)), result.end_ns)
    if window[1] <= window[0]:
        window = (0, result.end_ns)
    return result, report(result, window)


def _report_only(args) -> MetricsReport:
    cfg_dict, seed = args
    return run_one(parse_config(cfg_dict), seed)[1]


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class RunOutput:
    reports: list[MetricsReport]
    paths: list[Path]


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None, workers: int = 1,
        trace: bool = False) -> RunOutput:
    """One report per seed, written as ``<protocol>_seed<k>.json`` plus a ``runs.csv`` summary."""
    paths: list[Path] = []
    if trace:
        # traces need the full result; keep those runs in-process
        pairs = [run_one(cfg, s) for s in cfg.seeds]
        reports = [r for _, r in pairs]
    else:
        pairs = None
        reports = _map(_report_only, [(cfg.to_dict(), s) for s in cfg.seeds], workers)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            p = out / f"{rep.protocol}_seed{rep.seed}.json"
            p.write_text(rep.to_json())
            paths.append(p)
        p = out / "runs.csv"
        write_rows(p, RUN_CSV_HEADER, [r.csv_row() for r in reports])
        paths.append(p)
        if pairs is not None:
            for result, rep in pairs:
                p = out / f"{rep.protocol}_seed{rep.seed}_trace.csv"
                result.trace.write_csv(p)
                paths.append(p)
        (out / "config.yaml").write_text(cfg.to_yaml())
        write_manifest(out, {"command": "run", "seeds": cfg.seeds, "files": sorted(q.name for q in paths)})
    return RunOutput(reports, paths)


def sweep(cfg: ExperimentConfig, param: str, values: list, out_dir: str | Path | None = None,
          workers: int = 1) -> list[list]:
    """One CSV row per (value, seed), in that order."""
    configs = [cfg.with_param(param, v) for v in values]
    jobs = [(c.to_dict(), s) for c in configs for s in c.seeds]
    reports = _map(_report_only, jobs, workers)
    rows = []
    k = 0
    for v, c in zip(values, configs):
        for _ in c.seeds:
            rows.append([param, _value(v)] + reports[k].csv_row())
            k += 1
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "sweep.csv", SWEEP_CSV_HEADER, rows)
        (out / "config.yaml").write_text(cfg.to_yaml())
        write_manifest(out, {"command": "sweep", "param": param, "values": [_value(v) for v in values]})
    return rows


def _value(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def analyze(pairs: list[tuple[int, int]], timing: TimingParameters = QUOTED_TIMING,
            out_path: str | Path | None = None, epsilon: float = 1e-9) -> list[list]:
    rows = []
    for N, M in pairs:
        if M > N or M < 0 or N < 1:
            raise ValueError(f"invalid pair (N={N}, M={M}): need 0 <= M <= N and N >= 1")
        r = analyze_pair(N, M, timing, epsilon)
        rows.append([N, M, repr(r.expected_cycles), repr(r.upper_bound_s), repr(r.exact_expected_s)])
    if out_path is not None:
        write_rows(Path(out_path), ANALYSIS_CSV_HEADER, rows)
    return rows


def write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_manifest(out: Path, info: dict) -> None:
    """Run metadata; the only output that carries a wall-clock timestamp."""
    info = dict(info, created_unix=time.time())
    (out / "manifest.json").write_text(json.dumps(info, sort_keys=True, indent=2) + "\n")


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("zcmac.presets").iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> ExperimentConfig:
    res = resources.files("zcmac.presets") / f"{name}.yaml"
    if not res.is_file():
        raise FileNotFoundError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    with resources.as_file(res) as p:
        return load_config(p)

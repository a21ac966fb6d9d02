"""Experiment configuration: one YAML document per experiment, validated field by field."""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .medium import FaultModel
from .protocol import DEFAULT_RECYCLE_ROUNDS, ReselectionMode
from .timing import PhyParameters
from .traffic import TrafficKind

PROTOCOLS = ("zc", "csma", "tdma")
TOPOLOGIES = ("single-domain", "random")
TRAFFIC_KINDS = tuple(k.value for k in TrafficKind)


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists one ``field: message`` entry per defect."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass
class TrafficConfig:
    kind: str = "backlogged"
    packet_bytes: int = 2346
    period_us: float | None = None
    overhead_bytes: int = 0
    start_offset_us: float = 0.0
    stagger: bool = False   # draw each flow's phase uniformly in [0, period)


@dataclass
class TopologyConfig:
    kind: str = "single-domain"
    gamma: float | None = None


@dataclass
class AccessPointConfig:
    enabled: bool = False
    anchor: bool = True
    quota: int | None = None   # data slots; defaults to one per served station
    mirror_traffic: bool = True


@dataclass
class ArrivalEntry:
    station: int
    join_s: float
    leave_s: float | None = None


@dataclass
class ExperimentConfig:
    protocol: str = "zc"
    N: int = 64
    M: int = 64
    duration_s: float = 20.0
    seeds: list[int] = field(default_factory=lambda: [0])
    phy: PhyParameters = field(default_factory=PhyParameters)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    fault: FaultModel = field(default_factory=FaultModel)
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    reselection_mode: str = ReselectionMode.IMMEDIATE.value
    recycle_rounds: int = DEFAULT_RECYCLE_ROUNDS
    access_point: AccessPointConfig = field(default_factory=AccessPointConfig)
    arrival_schedule: list[ArrivalEntry] = field(default_factory=list)
    warmup_s: float = 0.0
    stop_after_convergence: int | None = None
    max_wall_s: float | None = None
    name: str = ""

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["fault"] = {"p1": self.fault.p1, "p2": self.fault.p2, "p3": self.fault.p3}
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return parse_config(data)

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return parse_config(d)

    def with_param(self, path: str, value) -> "ExperimentConfig":
        """Copy with one (possibly dotted) field set; ``fault.p`` sets ``p1`` and ``p2`` together."""
        d = copy.deepcopy(self.to_dict())
        if path == "fault.p":
            d["fault"]["p1"] = d["fault"]["p2"] = value
            return parse_config(d)
        node = d
        keys = path.split(".")
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                raise ConfigError([f"{path}: unknown parameter"])
            node = node[k]
        if keys[-1] not in node:
            raise ConfigError([f"{path}: unknown parameter"])
        node[keys[-1]] = value
        return parse_config(d)


def _section(cls, data, name: str, problems: list[str]):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        problems.append(f"{name}: expected a mapping")
        return cls()
    names = {f.name for f in dataclasses.fields(cls)}
    for k in data:
        if k not in names:
            problems.append(f"{name}.{k}: unknown field")
    try:
        return cls(**{k: v for k, v in data.items() if k in names})
    except (TypeError, ValueError) as exc:
        problems.append(f"{name}: {exc}")
        return cls()


def _number(problems, name, value, *, lo=None, hi=None, integer=False, allow_none=False, strict_lo=False):
    if value is None:
        if not allow_none:
            problems.append(f"{name}: required")
        return
    ok_type = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok_type:
        problems.append(f"{name}: expected {'an integer' if integer else 'a number'}, got {value!r}")
        return
    if lo is not None and (value <= lo if strict_lo else value < lo):
        problems.append(f"{name}: must be {'>' if strict_lo else '>='} {lo}, got {value}")
    if hi is not None and value > hi:
        problems.append(f"{name}: must be <= {hi}, got {value}")


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a mapping"])
    problems: list[str] = []
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for k in data:
        if k not in known:
            problems.append(f"{k}: unknown field")

    d = {k: v for k, v in data.items() if k in known}
    phy = _section(PhyParameters, d.pop("phy", None), "phy", problems)
    traffic = _section(TrafficConfig, d.pop("traffic", None), "traffic", problems)
    fault = _section(FaultModel, d.pop("fault", None), "fault", problems)
    topology = _section(TopologyConfig, d.pop("topology", None), "topology", problems)
    ap = _section(AccessPointConfig, d.pop("access_point", None), "access_point", problems)
    arrivals = []
    for j, entry in enumerate(d.pop("arrival_schedule", None) or []):
        arrivals.append(_section(ArrivalEntry, entry, f"arrival_schedule[{j}]", problems))
    cfg = ExperimentConfig(**d, phy=phy, traffic=traffic, fault=fault, topology=topology,
                           access_point=ap, arrival_schedule=arrivals)

    if cfg.protocol not in PROTOCOLS:
        problems.append(f"protocol: must be one of {PROTOCOLS}, got {cfg.protocol!r}")
    _number(problems, "N", cfg.N, lo=1, integer=True)
    _number(problems, "M", cfg.M, lo=0, integer=True)
    _number(problems, "duration_s", cfg.duration_s, lo=0, strict_lo=True)
    _number(problems, "warmup_s", cfg.warmup_s, lo=0)
    _number(problems, "recycle_rounds", cfg.recycle_rounds, lo=1, integer=True)
    _number(problems, "stop_after_convergence", cfg.stop_after_convergence, lo=1, integer=True, allow_none=True)
    _number(problems, "max_wall_s", cfg.max_wall_s, lo=0, strict_lo=True, allow_none=True)
    if not isinstance(cfg.seeds, list) or not cfg.seeds or not all(
            isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in cfg.seeds):
        problems.append("seeds: expected a non-empty list of non-negative integers")
    if isinstance(cfg.warmup_s, (int, float)) and isinstance(cfg.duration_s, (int, float)) \
            and cfg.warmup_s >= cfg.duration_s:
        problems.append("warmup_s: must be shorter than duration_s")
    if cfg.reselection_mode not in {m.value for m in ReselectionMode}:
        problems.append(f"reselection_mode: must be 'immediate' or 'cycle-end', got {cfg.reselection_mode!r}")

    t = cfg.traffic
    if t.kind not in TRAFFIC_KINDS:
        problems.append(f"traffic.kind: must be one of {TRAFFIC_KINDS}, got {t.kind!r}")
    _number(problems, "traffic.packet_bytes", t.packet_bytes, lo=1, integer=True)
    _number(problems, "traffic.overhead_bytes", t.overhead_bytes, lo=0, integer=True)
    _number(problems, "traffic.start_offset_us", t.start_offset_us, lo=0)
    if t.kind != "backlogged":
        _number(problems, "traffic.period_us", t.period_us, lo=0, strict_lo=True)

    topo = cfg.topology
    if topo.kind not in TOPOLOGIES:
        problems.append(f"topology.kind: must be one of {TOPOLOGIES}, got {topo.kind!r}")
    if topo.kind == "random":
        _number(problems, "topology.gamma", topo.gamma, lo=0, hi=1)
        if cfg.access_point.enabled:
            problems.append("access_point.enabled: not supported with a random topology")
    if cfg.access_point.enabled:
        _number(problems, "access_point.quota", cfg.access_point.quota, lo=1, integer=True, allow_none=True)
        if cfg.protocol == "tdma":
            problems.append("access_point.enabled: TDMA has no multi-slot access point")

    if cfg.protocol == "tdma" and isinstance(cfg.M, int) and isinstance(cfg.N, int) and cfg.M > cfg.N:
        problems.append(f"M: TDMA is undefined for M={cfg.M} > N={cfg.N}")

    for j, a in enumerate(cfg.arrival_schedule):
        _number(problems, f"arrival_schedule[{j}].station", a.station, lo=0, integer=True)
        if isinstance(a.station, int) and isinstance(cfg.M, int) and a.station >= cfg.M:
            problems.append(f"arrival_schedule[{j}].station: must be < M={cfg.M}")
        _number(problems, f"arrival_schedule[{j}].join_s", a.join_s, lo=0)
        _number(problems, f"arrival_schedule[{j}].leave_s", a.leave_s, lo=0, allow_none=True)
        if isinstance(a.leave_s, (int, float)) and isinstance(a.join_s, (int, float)) and a.leave_s <= a.join_s:
            problems.append(f"arrival_schedule[{j}].leave_s: must be after join_s")

    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data: Any = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"<file>: not valid YAML ({exc})"]) from exc
    return parse_config(data or {})

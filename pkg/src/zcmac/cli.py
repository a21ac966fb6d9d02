"""Command-line entry point: ``zcmac analyze|run|sweep|trace``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .engine import RuntimeCapExceeded
from .harness import analyze, load_preset, preset_names, run, run_one, sweep
from .timing import QUOTED_TIMING, PhyParameters

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _pair(text: str) -> tuple[int, int]:
    try:
        n, m = text.split(":")
        return int(n), int(m)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N:M, got {text!r}")


def _load(args) -> ExperimentConfig:
    if bool(args.config) == bool(args.preset):
        raise ConfigError(["<cli>: give exactly one of --config or --preset"])
    cfg = load_config(args.config) if args.config else load_preset(args.preset)
    changes = {}
    if args.seeds:
        changes["seeds"] = args.seeds
    if args.max_wall_s is not None:
        changes["max_wall_s"] = args.max_wall_s
    if args.duration_s is not None:
        changes["duration_s"] = args.duration_s
    return cfg.replace(**changes) if changes else cfg


def _values(args) -> list:
    if args.values:
        return [_parse_scalar(v) for v in args.values]
    if args.range:
        start, stop, step = args.range
        return list(range(int(start), int(stop) + 1, int(step)))
    if args.logspace:
        lo, hi, n = args.logspace
        return [float(x) for x in np.logspace(np.log10(lo), np.log10(hi), int(n))]
    raise ConfigError(["<cli>: give one of --values, --range or --logspace"])


def _parse_scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zcmac", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="expected cycles, exact expected time and the upper bound per (N, M)")
    a.add_argument("--pair", type=_pair, action="append", default=[], metavar="N:M")
    a.add_argument("--n-values", type=int, nargs="*", default=[])
    a.add_argument("--m-values", type=int, nargs="*", default=[])
    a.add_argument("--timing", choices=("quoted", "derived"), default="quoted",
                   help="quoted: t_g=2150, t_b=2266, t_v=20 us; derived: composed from 802.11b constituents")
    a.add_argument("--epsilon", type=float, default=1e-9)
    a.add_argument("--out", type=Path)

    def common(sp):
        sp.add_argument("--config", type=Path)
        sp.add_argument("--preset", choices=preset_names())
        sp.add_argument("--seeds", type=int, nargs="*")
        sp.add_argument("--duration-s", type=float)
        sp.add_argument("--max-wall-s", type=float, help="abort a run after this much wall-clock time")

    r = sub.add_parser("run", help="simulate one configuration for each seed")
    common(r)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--trace", action="store_true", help="also write per-slot trace CSVs")

    s = sub.add_parser("sweep", help="vary one parameter; one CSV row per (value, seed)")
    common(s)
    s.add_argument("--param", required=True, help="dotted field name, e.g. M, topology.gamma or fault.p")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--values", nargs="+")
    g.add_argument("--range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    g.add_argument("--logspace", type=float, nargs=3, metavar=("LO", "HI", "COUNT"))
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--workers", type=int, default=1)

    t = sub.add_parser("trace", help="dump the per-slot trace of one seed")
    common(t)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", type=Path, required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            pairs = list(args.pair)
            pairs += [(n, m) for n in args.n_values for m in args.m_values if m <= n]
            if not pairs:
                raise ConfigError(["<cli>: no (N, M) pairs requested"])
            timing = QUOTED_TIMING if args.timing == "quoted" else PhyParameters().timing(2346)
            rows = analyze(pairs, timing, args.out, args.epsilon)
            if args.out is None:
                print("N,M,expected_cycles,upper_bound_s,exact_expected_s")
                for row in rows:
                    print(",".join(str(x) for x in row))
        elif args.command == "run":
            cfg = _load(args)
            out = run(cfg, args.out, args.workers, trace=args.trace)
            for rep in out.reports:
                print(",".join(str(x) for x in rep.csv_row()))
        elif args.command == "sweep":
            cfg = _load(args)
            rows = sweep(cfg, args.param, _values(args), args.out, args.workers)
            print(f"wrote {len(rows)} rows to {args.out / 'sweep.csv'}")
        elif args.command == "trace":
            cfg = _load(args)
            result, _ = run_one(cfg, args.seed)
            args.out.parent.mkdir(parents=True, exist_ok=True)
            result.trace.write_csv(args.out)
            print(f"wrote {result.trace.n_slots} slots to {args.out}")
    except ConfigError as exc:
        print(f"zcmac: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FileNotFoundError) as exc:
        print(f"zcmac: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeCapExceeded as exc:
        print(f"zcmac: runtime cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())

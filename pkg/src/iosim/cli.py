"""Command-line entry point.

    iosim run   --config scenario.json [--seed S] [--trials N] [--out DIR]
    iosim sweep --param {user_ratio|xpd_bi|power} --values v1,v2,...
                --config scenario.json [--schemes a,b] [--trials N]
                [--seed S] [--jobs J] --out DIR
    iosim trace --config scenario.json [--seed S] [--scheme NAME]
                --out trace.jsonl

Exit code 0 on success, 1 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .baselines import SCHEMES, optimize_scheme
from .channels import synthesize_channels
from .config import ConfigError, load_config
from .experiments import (
    SWEEP_PARAMETERS,
    SweepSpec,
    aggregate,
    emit,
    run_sweep,
)
from .geometry import ensure_geometry


def _parse_schemes(text: str):
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    for name in names:
        if name not in SCHEMES:
            raise ConfigError(f"unknown scheme {name!r}; choose from {SCHEMES}")
    return names


def _parse_values(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list {text!r}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iosim",
        description="Dual-polarized omni-surface downlink simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Monte-Carlo trials at one config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trials", type=int, default=1)
    p_run.add_argument("--schemes", default=",".join(SCHEMES))
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--out", default=".")

    p_sweep = sub.add_parser("sweep", help="sweep one scenario parameter")
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p_sweep.add_argument("--values", required=True)
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--schemes", default=",".join(SCHEMES))
    p_sweep.add_argument("--trials", type=int, default=200)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", required=True)

    p_trace = sub.add_parser("trace", help="per-iteration JSON-lines trace")
    p_trace.add_argument("--config", required=True)
    p_trace.add_argument("--seed", type=int, default=None)
    p_trace.add_argument("--scheme", default="dualpol_ios", choices=SCHEMES)
    p_trace.add_argument("--out", default="trace.jsonl")

    return parser


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    spec = SweepSpec(parameter="power", values=[cfg.p_bs], base=cfg,
                     trials=args.trials, schemes=_parse_schemes(args.schemes))
    rows = run_sweep(spec, jobs=args.jobs)
    paths = emit(rows, aggregate(rows), args.out)
    for p in paths:
        print(p)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    spec = SweepSpec(parameter=args.param, values=_parse_values(args.values),
                     base=cfg, trials=args.trials,
                     schemes=_parse_schemes(args.schemes))
    rows = run_sweep(spec, jobs=args.jobs)
    paths = emit(rows, aggregate(rows), args.out)
    for p in paths:
        print(p)
    return 0


def cmd_trace(args) -> int:
    cfg = _load(args)
    geometry = ensure_geometry(cfg)
    channels = synthesize_channels(cfg, geometry,
                                   np.random.default_rng(cfg.seed))
    res = optimize_scheme(args.scheme, cfg, channels)
    res.trace.to_jsonl(args.out)
    print(args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "trace": cmd_trace}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Batch experiment runner: parameter sweeps with paired Monte-Carlo trials.

For every (sweep value, trial) one ChannelSet is synthesized and shared by
all schemes, so scheme comparisons use common random numbers.  The raw
rows and their aggregates serialize to ``results.csv`` / ``summary.csv``
plus one whitespace plot-data file per swept parameter.
"""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import SCHEMES, optimize_scheme
from .channels import synthesize_channels
from .config import ScenarioConfig
from .geometry import ensure_geometry
from .metrics import polarization_power

SWEEP_PARAMETERS = ("user_ratio", "xpd_bi", "power")

RESULTS_HEADER = ("scheme", "param", "value", "trial", "seed", "sum_rate",
                  "iterations", "converged", "p_v", "p_h", "epsilon")
SUMMARY_HEADER = ("scheme", "param", "value", "mean", "stderr", "n")


@dataclass
class SweepSpec:
    parameter: str
    values: list
    base: ScenarioConfig
    trials: int = 200
    schemes: tuple = SCHEMES

    def validate(self) -> None:
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}")
        for v in self.values:
            apply_parameter(self.base, self.parameter, v).validate()


@dataclass
class ResultRow:
    scheme: str
    param: str
    value: float
    trial: int
    seed: int
    sum_rate: float
    iterations: int
    converged: bool
    p_v: float
    p_h: float
    epsilon: float | None = None
    error: str = ""  # marker only; errored rows carry sum_rate = nan


def apply_parameter(base: ScenarioConfig, parameter: str,
                    value: float) -> ScenarioConfig:
    """Base config with one swept parameter replaced."""
    if parameter == "user_ratio":
        total = base.n_users
        k_r = int(round(float(value) * total))
        k_r = min(max(k_r, 0), total)
        return base.replace(k_r=k_r, k_t=total - k_r)
    if parameter == "xpd_bi":
        return base.replace(beta_bi=float(value))
    if parameter == "power":
        return base.replace(p_bs=float(value))
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def trial_seed(base_seed: int, value_index: int, trial: int) -> int:
    """Deterministic per-trial seed from (base seed, value index, trial)."""
    ss = np.random.SeedSequence([int(base_seed), int(value_index), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_point(args):
    spec, value_index, trial, debug = args
    value = spec.values[value_index]
    cfg = apply_parameter(spec.base, spec.parameter, value)
    seed = trial_seed(spec.base.seed, value_index, trial)
    geometry = ensure_geometry(cfg)
    channels = synthesize_channels(cfg, geometry, np.random.default_rng(seed))
    checksum = channels.checksum() if debug else None
    rows = []
    for scheme in spec.schemes:
        if debug:
            assert channels.checksum() == checksum, \
                "paired channels mutated between schemes"
        try:
            res = optimize_scheme(scheme, cfg, channels)
            p_v, p_h = polarization_power(res.beamformer, cfg.n_t)
            rows.append(ResultRow(
                scheme=scheme, param=spec.parameter, value=float(value),
                trial=trial, seed=seed, sum_rate=res.sum_rate,
                iterations=res.trace.iterations,
                converged=res.trace.converged, p_v=p_v, p_h=p_h,
                epsilon=cfg.epsilon if scheme == "power_domain_ios" else None,
            ))
        except Exception as exc:  # record the failure, keep sweeping
            rows.append(ResultRow(
                scheme=scheme, param=spec.parameter, value=float(value),
                trial=trial, seed=seed, sum_rate=float("nan"),
                iterations=0, converged=False, p_v=float("nan"),
                p_h=float("nan"),
                epsilon=cfg.epsilon if scheme == "power_domain_ios" else None,
                error=f"{type(exc).__name__}: {exc}",
            ))
    return (value_index, trial), rows


def run_sweep(spec: SweepSpec, jobs: int = 1, debug: bool = False
              ) -> list[ResultRow]:
    """All (value, trial, scheme) rows in deterministic order.

    Trials are independent; `jobs > 1` fans them out over processes while
    the merged ordering (value, trial, scheme) stays byte-stable.
    """
    spec.validate()
    points = [(spec, vi, trial, debug)
              for vi in range(len(spec.values))
              for trial in range(spec.trials)]
    results = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for key, rows in pool.map(_run_point, points, chunksize=1):
                results[key] = rows
    else:
        for args in points:
            key, rows = _run_point(args)
            results[key] = rows
    out = []
    for vi in range(len(spec.values)):
        for trial in range(spec.trials):
            out.extend(results[(vi, trial)])
    return out


@dataclass
class AggregateRow:
    scheme: str
    param: str
    value: float
    mean: float
    stderr: float
    n: int
    excluded: int = 0


def aggregate(rows) -> list[AggregateRow]:
    """Per (scheme, value) mean and standard error of sum_rate.

    Error-marked rows (nan sum_rate) are excluded and counted; stderr is
    the sample standard deviation over sqrt(n), zero for n = 1.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("cannot aggregate an empty row list")
    groups: dict = {}
    order = []
    for row in rows:
        key = (row.scheme, row.param, row.value)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        scheme, param, value = key
        vals = np.array([r.sum_rate for r in groups[key]
                         if np.isfinite(r.sum_rate)])
        excluded = len(groups[key]) - vals.size
        if vals.size == 0:
            raise ValueError(f"group {key} has no usable rows")
        stderr = 0.0 if vals.size == 1 else \
            float(np.std(vals, ddof=1) / np.sqrt(vals.size))
        out.append(AggregateRow(scheme=scheme, param=param, value=value,
                                mean=float(vals.mean()), stderr=stderr,
                                n=int(vals.size), excluded=excluded))
    return out


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit(rows, aggregates, out_dir) -> list[Path]:
    """Write results.csv, summary.csv, and plot_<param>.dat files."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []

        results_path = out / "results.csv"
        with open(results_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULTS_HEADER)
            for r in rows:
                writer.writerow([
                    r.scheme, r.param, _fmt(float(r.value)), r.trial, r.seed,
                    _fmt(float(r.sum_rate)), r.iterations,
                    _fmt(bool(r.converged)), _fmt(float(r.p_v)),
                    _fmt(float(r.p_h)),
                    _fmt(None if r.epsilon is None else float(r.epsilon)),
                ])
        paths.append(results_path)

        summary_path = out / "summary.csv"
        with open(summary_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_HEADER)
            for a in aggregates:
                writer.writerow([a.scheme, a.param, _fmt(float(a.value)),
                                 _fmt(float(a.mean)), _fmt(float(a.stderr)),
                                 a.n])
        paths.append(summary_path)

        by_param: dict = {}
        for a in aggregates:
            by_param.setdefault(a.param, []).append(a)
        for param, aggs in by_param.items():
            schemes = []
            for a in aggs:
                if a.scheme not in schemes:
                    schemes.append(a.scheme)
            values = []
            for a in aggs:
                if a.value not in values:
                    values.append(a.value)
            table = {(a.value, a.scheme): a.mean for a in aggs}
            plot_path = out / f"plot_{param}.dat"
            with open(plot_path, "w") as fh:
                fh.write("# " + " ".join([param] + schemes) + "\n")
                for v in values:
                    cells = [_fmt(float(v))]
                    for s in schemes:
                        mean = table.get((v, s))
                        cells.append("nan" if mean is None else _fmt(mean))
                    fh.write(" ".join(cells) + "\n")
            paths.append(plot_path)
        return paths
    except OSError as exc:
        raise OSError(f"cannot write experiment outputs under {out}: {exc}"
                      ) from exc

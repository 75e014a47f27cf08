"""Command-line driver: ``jdfpt {analytic,simulate,calibrate,tables}``.

Exit codes: 0 success, 1 numeric or runtime failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic, calib
from .config import Config, ConfigError, load_config
from .kde import estimate_density
from .mc import correlation_matrix, simulate, simulated_default_correlation
from .model import ModelError

log = logging.getLogger("jdfpt")


class UsageError(Exception):
    pass


def _tag(t: float) -> str:
    return f"{t:g}"


class Writer:
    """Writes tables either as CSV or as a JSON mirror with the same name stem."""

    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.fmt = fmt
        out.mkdir(parents=True, exist_ok=True)

    def table(self, stem: str, header, rows) -> Path:
        rows = [list(r) for r in rows]
        if self.fmt == "json":
            path = self.out / f"{stem}.json"
            path.write_text(json.dumps({"columns": list(header), "rows": rows}, indent=1) + "\n")
        else:
            path = self.out / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows([[_cell(v) for v in r] for r in rows])
        log.info("wrote %s", path)
        return path


def _cell(v):
    if isinstance(v, float):
        return "" if np.isnan(v) else repr(v)
    return v


def _matrix_rows(labels, mat):
    return [[lab] + [float(v) for v in row] for lab, row in zip(labels, mat)]


# ------------------------------------------------------------ subcommands

def analytic_tables(cfg: Config) -> dict[float, tuple[np.ndarray, np.ndarray]]:
    """Per horizon: (default probabilities, correlation matrix in percent)."""
    a = cfg.analytic
    if a is None:
        raise ConfigError("the analytic command needs an [analytic] section")
    out = {}
    n = len(a.labels)
    for t in a.horizons:
        probs = np.array([analytic.default_probability(z, t) for z in a.z])
        # the diagonal pairs two distinct firms of the same rating
        corr = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                c = 100.0 * analytic.pairwise_default_correlation(a.z[i], a.z[j], a.rho, t)
                corr[i, j] = corr[j, i] = c
        out[t] = (probs, corr)
    return out


def cmd_analytic(cfg: Config, args, writer: Writer) -> int:
    a = cfg.analytic
    tables = analytic_tables(cfg)
    writer.table("probabilities", ["t"] + list(a.labels),
                 [[float(t)] + [float(p) for p in tables[t][0]] for t in a.horizons])
    for t, (_, corr) in tables.items():
        writer.table(f"correlations_{_tag(t)}", ["firm"] + list(a.labels),
                     _matrix_rows(a.labels, corr))
    return 0


def cmd_simulate(cfg: Config, args, writer: Writer) -> int:
    sc = cfg.scenario
    system = cfg.system()
    start = time.perf_counter()
    samples = simulate(system, sc.n_runs, sc.seed, sc.workers, method=sc.method, dt=sc.dt,
                       report_times=sc.report_times)
    log.info("simulated %d runs in %.2fs", sc.n_runs, time.perf_counter() - start)
    rate_rows = []
    for i, name in enumerate(system.names):
        est = estimate_density(samples, i)
        F = est.cumulative
        writer.table(f"density_{name}", ["t", "f", "F"],
                     [[float(t), float(f), float(c)] for t, f, c in zip(est.grid, est.density, F)])
        for t in sc.report_times:
            rate, se = samples.default_rate(i, t)
            rate_rows.append([name, float(t), rate, se])
    writer.table("default_rates", ["firm", "t", "rate", "stderr"], rate_rows)
    if system.n_firms > 1:
        for t in sc.report_times:
            writer.table(f"correlations_{_tag(t)}", ["firm"] + list(system.names),
                         _matrix_rows(system.names, 100.0 * correlation_matrix(samples, t)))
    return 0


def calibration_spec(cfg: Config) -> calib.CalibrationSpec:
    c = cfg.calibrate
    if c is None:
        raise ConfigError("the calibrate command needs a [calibrate] section")
    labels = c.labels or tuple(f.name for f in cfg.firms)
    initial = {}
    for lab in labels:
        f = cfg.firm(lab)
        if f.sigma is None:
            raise ConfigError(f"[firm.{lab}] must give sigma (not sigma_row) to be calibrated")
        initial[lab] = dict(sigma=f.sigma, lam=cfg.scenario.lam, jump_mean=f.jump_mean,
                            jump_std=f.jump_std)
    first = cfg.firm(labels[0])
    template = calib.FirmTemplate(x0=first.x0, kappa_log=first.kappa_log, mu=first.mu,
                                  gamma=first.gamma)
    return calib.CalibrationSpec(
        labels=tuple(labels), initial=initial, free=c.free, shared_lambda=c.shared_lambda,
        template=template, mean_interjump=cfg.scenario.mean_interjump,
        horizon=cfg.scenario.horizon, n_runs=c.n_runs, seed=c.seed, workers=cfg.scenario.workers,
        maxiter=c.maxiter, xatol=c.xatol,
    )


def _data_path(cfg: Config, args) -> Path:
    if args.data:
        return Path(args.data)
    path = Path(cfg.calibrate.data)
    if not path.is_absolute() and not path.exists() and cfg.source:
        alt = Path(cfg.source).parent / path
        if alt.exists():
            return alt
    return path


def cmd_calibrate(cfg: Config, args, writer: Writer) -> int:
    spec = calibration_spec(cfg)
    path = _data_path(cfg, args)
    if not path.is_file():
        raise UsageError(f"data file not found: {path}")
    curves = calib.read_curves(path)
    result = calib.calibrate(spec, curves)
    writer.table("params", ["rating", "sigma", "lambda", "mu_Z", "sigma_Z"],
                 [[lab] + [p[k] for k in calib.PARAMS] for lab, p in result.params.items()])
    writer.table("trace", ["iteration", "objective", "rating"] + list(calib.PARAMS),
                 [[it, f, lab] + [p[k] for k in calib.PARAMS]
                  for it, f, params in result.trace for lab, p in params.items()])
    log.info("objective %.6g after %d evaluations (%s)", result.value, result.n_evals,
             result.message)
    return 0


def pair_tables(cfg: Config) -> dict[float, list[list]]:
    """Per horizon: rows (firm_1, firm_2, simulated %, closed-form %) over rating pairs."""
    a = cfg.analytic
    if a is None:
        raise ConfigError("the tables command needs an [analytic] section")
    sc = cfg.scenario
    zhou = analytic_tables(cfg)
    rows: dict[float, list[list]] = {t: [] for t in a.horizons}
    n = len(a.labels)
    for i in range(n):
        for j in range(i, n):
            pair = (a.labels[i], a.labels[j])
            sub = replace(cfg, firms=tuple(replace(cfg.firm(lab), name=f"{lab}_{k}")
                                           for k, lab in enumerate(pair, start=1)))
            samples = simulate(sub.system(), sc.n_runs, sc.seed, sc.workers, method=sc.method,
                               dt=sc.dt)
            for t in a.horizons:
                try:
                    sim = 100.0 * simulated_default_correlation(samples, t)
                except ValueError:
                    sim = float("nan")
                rows[t].append([pair[0], pair[1], sim, float(zhou[t][1][i, j])])
    return rows


def cmd_tables(cfg: Config, args, writer: Writer) -> int:
    for t, rows in pair_tables(cfg).items():
        writer.table(f"table_{_tag(t)}", ["firm_1", "firm_2", "unif_pct", "zhou_pct"], rows)
        print(f"t = {_tag(t)} years")
        for f1, f2, sim, z in rows:
            print(f"  ({f1:>3},{f2:>3})  UNIF {sim:7.2f}   Zhou {z:7.2f}")
    return 0


COMMANDS = {"analytic": cmd_analytic, "simulate": cmd_simulate, "calibrate": cmd_calibrate,
            "tables": cmd_tables}


# ------------------------------------------------------------ entry point

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jdfpt", description="Jump-diffusion first-passage tools")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="scenario INI file")
        s.add_argument("--runs", type=_positive_int, help="Monte Carlo runs (overrides config)")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=_positive_int)
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "calibrate":
            s.add_argument("--data", help="curve CSV (overrides [calibrate] data)")
    return p


def _apply_overrides(cfg: Config, args) -> Config:
    sc = cfg.scenario
    over = {k: v for k, v in (("n_runs", args.runs), ("seed", args.seed),
                              ("workers", args.workers)) if v is not None}
    cfg = replace(cfg, scenario=replace(sc, **over))
    if cfg.calibrate is not None:
        cover = {k: v for k, v in over.items() if k in ("n_runs", "seed")}
        cfg = replace(cfg, calibrate=replace(cfg.calibrate, **cover))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        cfg = _apply_overrides(load_config(path), args)
        return COMMANDS[args.command](cfg, args, Writer(Path(args.out), args.format))
    except (UsageError, ConfigError, calib.CurveFormatError) as exc:
        print(f"jdfpt {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ModelError, calib.CalibrationError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"jdfpt {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

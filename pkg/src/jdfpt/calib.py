"""Fit per-firm jump-diffusion parameters to cumulative default-rate curves.

The objective compares the kernel-smoothed simulated cumulative default rate
with observed curves, down-weighting long horizons by 1/t. Every evaluation
reuses the same seed, so the Monte Carlo objective is a deterministic function
of the parameters and a derivative-free simplex search can be applied to it.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .kde import cumulative_default_rate, estimate_density
from .mc import simulate
from .model import FirmSpec, SystemSpec

log = logging.getLogger(__name__)

PARAMS = ("sigma", "lam", "jump_mean", "jump_std")
DEFAULT_BOUNDS = {
    "sigma": (1e-4, 5.0),
    "lam": (0.0, 1.0),
    "jump_mean": (-5.0, 5.0),
    "jump_std": (1e-4, 5.0),
}
CURVE_HEADER = ["rating", "t_years", "cum_default_rate"]


class CalibrationError(RuntimeError):
    pass


class CurveFormatError(ValueError):
    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class HistoricalCurve:
    label: str
    times: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if t.size == 0 or t.size != r.size:
            raise ValueError(f"curve {self.label!r} needs matching, nonempty times and rates")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError(f"curve {self.label!r}: times must be positive and strictly increasing")
        if np.any(np.diff(r) < 0) or np.any(r < 0) or np.any(r > 1):
            raise ValueError(f"curve {self.label!r}: rates must be in [0, 1] and nondecreasing")


def read_curves(path) -> list[HistoricalCurve]:
    """Read ``rating,t_years,cum_default_rate`` rows, grouped by rating in file order."""
    path = Path(path)
    points: dict[str, list[tuple[float, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CURVE_HEADER:
            raise CurveFormatError(f"expected header {','.join(CURVE_HEADER)}, got {header}", 0)
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise CurveFormatError(f"expected 3 fields, got {len(row)}", row_no)
            try:
                t, r = float(row[1]), float(row[2])
            except ValueError as exc:
                raise CurveFormatError(str(exc), row_no) from None
            points.setdefault(row[0].strip(), []).append((t, r))
    curves = []
    for label, pts in points.items():
        pts.sort()
        curves.append(HistoricalCurve(label, tuple(p[0] for p in pts), tuple(p[1] for p in pts)))
    return curves


def write_curves(path, curves) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for c in curves:
            for t, r in zip(c.times, c.rates):
                w.writerow([c.label, repr(float(t)), repr(float(r))])


def rmse(model_prices, market_prices) -> float:
    m = np.asarray(model_prices, dtype=float)
    k = np.asarray(market_prices, dtype=float)
    if m.size == 0 or m.shape != k.shape:
        raise ValueError("rmse needs two nonempty sequences of equal length")
    return float(np.sqrt(np.mean((m - k) ** 2)))


def curve_distance(model_rates, curves) -> float:
    """Sum over firms of the root of summed squared, 1/t-weighted rate gaps."""
    total = 0.0
    for rates, c in zip(model_rates, curves):
        gap = (np.asarray(rates) - np.asarray(c.rates)) / np.asarray(c.times)
        total += math.sqrt(float(np.sum(gap * gap)))
    return total


@dataclass(frozen=True)
class FirmTemplate:
    """Parameters held fixed during calibration."""

    x0: float = 2.0
    kappa_log: float = 0.0
    mu: float = -0.001
    gamma: float = -0.001


@dataclass(frozen=True)
class CalibrationSpec:
    labels: tuple[str, ...]
    initial: dict  # label -> {param: value}
    free: tuple[str, ...] = PARAMS
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    shared_lambda: bool = True
    template: FirmTemplate = FirmTemplate()
    mean_interjump: float = 1.0
    horizon: float = 10.0
    n_runs: int = 50_000
    seed: int = 12345
    workers: int = 1
    maxiter: int = 200
    xatol: float = 1e-3
    initial_step: float = 0.1

    def __post_init__(self):
        unknown = set(self.free) - set(PARAMS)
        if unknown:
            raise ValueError(f"unknown free parameters {sorted(unknown)}")
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds for {name} must be finite with lo < hi")
        missing = [lab for lab in self.labels if lab not in self.initial]
        if missing:
            raise ValueError(f"no initial parameters for {missing}")

    def layout(self) -> list[tuple[str | None, str]]:
        """(label, param) per optimizer coordinate; label None marks a shared lambda."""
        out: list[tuple[str | None, str]] = []
        if self.shared_lambda and "lam" in self.free:
            out.append((None, "lam"))
        for lab in self.labels:
            for p in self.free:
                if p == "lam" and self.shared_lambda:
                    continue
                out.append((lab, p))
        return out

    def unpack(self, vector) -> dict:
        params = {lab: dict(self.initial[lab]) for lab in self.labels}
        if self.shared_lambda:
            lam = self.initial[self.labels[0]]["lam"]
            for lab in self.labels:
                params[lab]["lam"] = lam
        for (lab, p), v in zip(self.layout(), vector):
            for target in (self.labels if lab is None else (lab,)):
                params[target][p] = float(v)
        return params

    def pack(self, params: dict) -> np.ndarray:
        first = self.labels[0]
        return np.array([params[first if lab is None else lab][p] for lab, p in self.layout()])

    def system_for(self, values: dict) -> SystemSpec:
        tpl = self.template
        firm = FirmSpec(mu=tpl.mu, sigma_row=(values["sigma"],), jump_mean=values["jump_mean"],
                        jump_std=values["jump_std"], x0=tpl.x0, kappa_log=tpl.kappa_log,
                        gamma=tpl.gamma)
        return SystemSpec((firm,), lam=values["lam"], mean_interjump=self.mean_interjump,
                          horizon=self.horizon)


def model_curve(system: SystemSpec, times, n_runs: int, seed: int, workers: int = 1) -> np.ndarray:
    """Kernel-smoothed cumulative default rate of a single-firm system at the given times."""
    samples = simulate(system, n_runs, seed, workers)
    est = estimate_density(samples, 0)
    if est.empty:
        return np.zeros(len(times))
    return np.array([cumulative_default_rate(est, t) for t in times])


def objective(params: dict, curves, spec: CalibrationSpec) -> float:
    """Curve distance between simulated and observed default rates (fixed seed)."""
    model = []
    for c in curves:
        model.append(model_curve(spec.system_for(params[c.label]), c.times, spec.n_runs,
                                 spec.seed, spec.workers))
    return curve_distance(model, curves)


@dataclass
class CalibrationResult:
    params: dict
    value: float
    trace: list  # (iteration, best value so far, params)
    n_evals: int
    converged: bool
    message: str = ""


def calibrate(spec: CalibrationSpec, curves) -> CalibrationResult:
    """Bounded Nelder-Mead on coordinates scaled by the initial guess."""
    curves = [c for c in curves if c.label in spec.labels]
    if not curves:
        raise CalibrationError("no curves match the calibration labels")
    x0 = spec.pack(spec.initial)
    scale = np.where(np.abs(x0) > 0, np.abs(x0), 1.0)
    names = [p for _, p in spec.layout()]
    lo = np.array([spec.bounds[p][0] for p in names]) / scale
    hi = np.array([spec.bounds[p][1] for p in names]) / scale
    start = np.clip(x0 / scale, lo, hi)
    simplex = [start]
    for k in range(start.size):
        v = start.copy()
        v[k] = v[k] * (1.0 + spec.initial_step) if v[k] + spec.initial_step <= hi[k] else v[k] * (1.0 - spec.initial_step)
        simplex.append(np.clip(v, lo, hi))

    evals = {"n": 0, "failed": 0}
    best = {"f": math.inf, "x": start}

    def fun(z):
        evals["n"] += 1
        params = spec.unpack(z * scale)
        try:
            f = objective(params, curves, spec)
        except (ValueError, ArithmeticError) as exc:
            evals["failed"] += 1
            log.warning("objective failed at %s: %s", params, exc)
            return math.inf
        if f < best["f"]:
            best["f"], best["x"] = f, z.copy()
        return f

    trace = []

    def callback(intermediate_result):
        trace.append((len(trace) + 1, best["f"], spec.unpack(best["x"] * scale)))

    res = minimize(fun, start, method="Nelder-Mead", bounds=list(zip(lo, hi)), callback=callback,
                   options=dict(maxiter=spec.maxiter, xatol=spec.xatol, fatol=math.inf,
                                initial_simplex=np.array(simplex)))
    if evals["failed"] == evals["n"]:
        raise CalibrationError("every objective evaluation failed")
    return CalibrationResult(spec.unpack(best["x"] * scale), best["f"], trace, evals["n"],
                             bool(res.success), str(res.message))


def write_params(path, result: CalibrationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rating", "sigma", "lambda", "mu_Z", "sigma_Z"])
        for lab, p in result.params.items():
            w.writerow([lab] + [f"{p[k]:.6f}" for k in PARAMS])


def write_trace(path, result: CalibrationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective", "rating"] + list(PARAMS))
        for it, f, params in result.trace:
            for lab, p in params.items():
                w.writerow([it, repr(f), lab] + [repr(p[k]) for k in PARAMS])


def synthetic_curves(spec: CalibrationSpec, truth: dict, times, n_runs=None, seed=None):
    """Curves generated by the model itself, for round-trip checks."""
    out = []
    for lab in spec.labels:
        rates = model_curve(spec.system_for(truth[lab]), times, n_runs or spec.n_runs,
                            spec.seed if seed is None else seed, spec.workers)
        rates = np.maximum.accumulate(np.clip(rates, 0.0, 1.0))
        out.append(HistoricalCurve(lab, tuple(times), tuple(float(r) for r in rates)))
    return out


def with_initial(spec: CalibrationSpec, initial: dict) -> CalibrationSpec:
    return replace(spec, initial=initial)

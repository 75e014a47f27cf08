"""Monte Carlo engines for first-passage times of correlated jump-diffusions.

``unif`` samples one candidate crossing time per interjump segment from a
stretched uniform window and weights it by the bridge crossing density, so the
process is only evaluated at jump instants. ``conventional`` is a plain Euler
walk on a fine grid and serves as the brute-force reference.

Runs are grouped in fixed-size blocks; block b always draws from substream b
of the seed, so the output does not depend on how blocks are spread over
workers.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy import stats

from .analytic import _correlation_fast, default_correlation
from .bridge import InterjumpSegment, JumpTimeline, _crossing_prob, _log_crossing_density
from .model import SystemSpec
from .sou import _sou_step

BLOCK_SIZE = 4096

NONE, INTERIOR, ATOM, GRID = 0, 1, 2, 3
KIND_NAMES = {NONE: "none", INTERIOR: "interior", ATOM: "atom", GRID: "grid"}


@dataclass(frozen=True)
class RandomStream:
    seed: int
    substream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.substream,))
        return np.random.Generator(np.random.PCG64(ss))


# ------------------------------------------------------------ single steps

def generate_jump_times(mean_interjump: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    """Clock instants in (0, horizon) from i.i.d. exponential gaps."""
    if mean_interjump <= 0:
        raise ValueError("mean_interjump must be positive")
    out = []
    t = rng.exponential(mean_interjump)
    while t < horizon:
        out.append(t)
        t += rng.exponential(mean_interjump)
    return np.array(out)


def evolve_interjump(x_prev, t_prev: float, t_next: float, system: SystemSpec,
                     rng: np.random.Generator) -> np.ndarray:
    """Diffuse all firms from just after one jump to just before the next."""
    if not t_next > t_prev:
        raise ValueError("t_next must exceed t_prev")
    dt = t_next - t_prev
    arr = system.arrays()
    g = rng.standard_normal(system.n_firms) * math.sqrt(dt)
    return np.asarray(x_prev, dtype=float) + arr["mu"] * dt + arr["sigma_matrix"] @ g


def apply_jump(x_pre, system: SystemSpec, rng: np.random.Generator) -> np.ndarray:
    """Add an independent normal jump to every firm."""
    arr = system.arrays()
    return np.asarray(x_pre, dtype=float) + arr["jump_mean"] + arr["jump_std"] * rng.standard_normal(system.n_firms)


def generate_timeline(system: SystemSpec, rng: np.random.Generator) -> JumpTimeline:
    """Shared timeline for inspection; clock instants that do not fire carry a zero jump."""
    times = generate_jump_times(system.mean_interjump, system.horizon, rng)
    n = system.n_firms
    x = np.array([f.x0 for f in system.firms])
    x0 = x.copy()
    pre = np.empty((n, times.size))
    post = np.empty((n, times.size))
    t_prev = 0.0
    for j, t in enumerate(times):
        x = evolve_interjump(x, t_prev, t, system, rng)
        pre[:, j] = x
        if rng.random() < system.jump_probability:
            x = apply_jump(x, system, rng)
        post[:, j] = x
        t_prev = t
    x_t = evolve_interjump(x, t_prev, system.horizon, system, rng)
    return JumpTimeline(times, pre, post, x0, x_t, system.horizon)


def fpt_correlation(seg_i: InterjumpSegment, seg_j: InterjumpSegment, rho_diffusion: float) -> float:
    """Correlation imposed on two firms' candidate crossing times in a shared segment.

    Diffusion-only default correlation at the segment midpoint, from the firms'
    current standardized distances; 0 when either default probability is negligible.
    """
    za = seg_i.start_distance / seg_i.sigma
    zb = seg_j.start_distance / seg_j.sigma
    if za <= 0 or zb <= 0:
        raise ValueError("both firms must be alive at the segment start")
    return _correlation_fast(za, zb, float(rho_diffusion), 0.5 * seg_i.tau)


# ------------------------------------------------------------ kernels

@numba.njit(cache=True, nogil=True)
def _unif_block(x0, mu, gamma, kappa_log, sig_mat, sig, jmean, jstd, dcorr,
                p_jump, mean_interjump, horizon, use_sou, rng, n_runs):
    n = x0.size
    times = np.full((n_runs, n), np.nan)
    weights = np.zeros((n_runs, n))
    kinds = np.zeros((n_runs, n), dtype=np.int8)
    stats = np.zeros((n, 3))  # candidates, sum of crossing probabilities, accepted
    x = np.empty(n)
    xe = np.empty(n)
    a = np.empty(n)
    q = np.empty(n)
    y = np.empty(n)
    g = np.empty(n)
    alive = np.empty(n, dtype=np.bool_)
    for r in range(n_runs):
        for i in range(n):
            x[i] = x0[i]
            alive[i] = True
        n_alive = n
        t0 = 0.0
        while True:
            t1 = t0 + rng.exponential(mean_interjump)
            last = t1 >= horizon
            if last:
                t1 = horizon
            tau = t1 - t0
            sq = math.sqrt(tau)
            for k in range(n):
                g[k] = rng.standard_normal()
            for i in range(n):
                acc = 0.0
                for k in range(n):
                    acc += sig_mat[i, k] * g[k]
                xe[i] = x[i] + mu[i] * tau + sq * acc
            if tau > 0.0:
                prev = -1
                for i in range(n):
                    if not alive[i]:
                        continue
                    a[i] = x[i] - (gamma[i] * t0 + kappa_log[i])
                    b = xe[i] - (gamma[i] * t1 + kappa_log[i])
                    q[i] = _crossing_prob(a[i], b, tau, sig[i])
                    u = rng.random()
                    if prev < 0:
                        y[i] = u
                    else:
                        rho = 0.0
                        if use_sou:
                            rho = _correlation_fast(a[prev] / sig[prev], a[i] / sig[i],
                                                    dcorr[prev, i], 0.5 * tau)
                        y[i] = _sou_step(y[prev], rho, u)
                    prev = i
                for i in range(n):
                    if not alive[i]:
                        continue
                    stats[i, 0] += 1.0
                    stats[i, 1] += q[i]
                    if q[i] > 0.0 and y[i] <= q[i]:
                        elapsed = tau * y[i] / q[i]
                        elapsed = min(max(elapsed, 1e-15 * tau), tau * (1.0 - 1e-15))
                        b = xe[i] - (gamma[i] * t1 + kappa_log[i])
                        lg = _log_crossing_density(a[i], b, tau, mu[i] - gamma[i], sig[i], elapsed)
                        times[r, i] = t0 + elapsed
                        weights[r, i] = tau / q[i] * math.exp(lg)
                        kinds[r, i] = 1
                        alive[i] = False
                        n_alive -= 1
                        stats[i, 2] += 1.0
            if last or n_alive == 0:
                break
            if rng.random() < p_jump:
                for i in range(n):
                    xe[i] += jmean[i] + jstd[i] * rng.standard_normal()
            for i in range(n):
                if alive[i] and xe[i] <= gamma[i] * t1 + kappa_log[i]:
                    times[r, i] = t1
                    weights[r, i] = 1.0
                    kinds[r, i] = 2
                    alive[i] = False
                    n_alive -= 1
            if n_alive == 0:
                break
            for i in range(n):
                x[i] = xe[i]
            t0 = t1
    return times, weights, kinds, stats


@numba.njit(cache=True, nogil=True)
def _euler_block(x0, mu, gamma, kappa_log, sig_mat, jmean, jstd, lam, horizon, dt, rng, n_runs):
    n = x0.size
    times = np.full((n_runs, n), np.nan)
    n_steps = int(round(horizon / dt))
    sq = math.sqrt(dt)
    x = np.empty(n)
    g = np.empty(n)
    alive = np.empty(n, dtype=np.bool_)
    for r in range(n_runs):
        for i in range(n):
            x[i] = x0[i]
            alive[i] = True
        n_alive = n
        next_jump = rng.exponential(1.0 / lam) if lam > 0.0 else np.inf
        for step in range(1, n_steps + 1):
            tk = step * dt
            for k in range(n):
                g[k] = rng.standard_normal()
            for i in range(n):
                acc = 0.0
                for k in range(n):
                    acc += sig_mat[i, k] * g[k]
                x[i] += mu[i] * dt + sq * acc
            # jumps that fired during (t_{k-1}, t_k] land on this grid point
            while next_jump <= tk:
                for i in range(n):
                    x[i] += jmean[i] + jstd[i] * rng.standard_normal()
                next_jump += rng.exponential(1.0 / lam)
            for i in range(n):
                if alive[i] and x[i] <= gamma[i] * tk + kappa_log[i]:
                    times[r, i] = tk
                    alive[i] = False
                    n_alive -= 1
            if n_alive == 0:
                break
    return times


# ------------------------------------------------------------ sample sets

@dataclass
class FptSampleSet:
    """Per-run first-passage records for every firm.

    ``times[r, i]`` is firm i's default time in run r (NaN if it survived the
    horizon), ``weights`` the density weight of that sample and ``kinds`` one of
    NONE / INTERIOR / ATOM / GRID.
    """

    names: tuple[str, ...]
    horizon: float
    times: np.ndarray
    weights: np.ndarray
    kinds: np.ndarray
    method: str = "unif"
    stats: np.ndarray | None = None
    report_times: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.report_times is None:
            self.report_times = np.arange(1.0, math.floor(self.horizon) + 1.0)
        self.report_times = np.asarray(self.report_times, dtype=float)

    @property
    def run_count(self) -> int:
        return self.times.shape[0]

    @property
    def n_firms(self) -> int:
        return self.times.shape[1]

    def samples(self, firm: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        hit = self.kinds[:, firm] != NONE
        return self.times[hit, firm], self.weights[hit, firm], self.kinds[hit, firm]

    def indicators(self, t: float) -> np.ndarray:
        """Boolean (runs, firms): defaulted by time t."""
        with np.errstate(invalid="ignore"):
            return self.times <= t

    def default_indicators(self) -> np.ndarray:
        """(runs, firms, report times) default flags."""
        with np.errstate(invalid="ignore"):
            return self.times[:, :, None] <= self.report_times[None, None, :]

    def joint_default_counts(self) -> np.ndarray:
        """(report times, firms, firms) number of runs where both firms defaulted."""
        ind = self.default_indicators().astype(np.int64)
        return np.einsum("rit,rjt->tij", ind, ind)

    def default_rate(self, firm: int, t: float, weighted: bool = True) -> tuple[float, float]:
        """Cumulative default rate by t and its Monte Carlo standard error.

        The weighted form is the integral of the importance-weighted sample
        density, which is unbiased for UNIF; the unweighted form counts runs.
        """
        with np.errstate(invalid="ignore"):
            hit = self.times[:, firm] <= t
        contrib = np.where(hit, self.weights[:, firm] if weighted else 1.0, 0.0)
        n = self.run_count
        return float(contrib.mean()), float(contrib.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan

    def subset(self, firms) -> "FptSampleSet":
        firms = list(firms)
        return FptSampleSet(
            tuple(self.names[i] for i in firms), self.horizon, self.times[:, firms],
            self.weights[:, firms], self.kinds[:, firms], self.method,
            None if self.stats is None else self.stats[firms], self.report_times,
        )

    @classmethod
    def merge(cls, parts: list["FptSampleSet"]) -> "FptSampleSet":
        first = parts[0]
        stats = None if first.stats is None else sum(p.stats for p in parts)
        return cls(
            first.names, first.horizon,
            np.concatenate([p.times for p in parts]),
            np.concatenate([p.weights for p in parts]),
            np.concatenate([p.kinds for p in parts]),
            first.method, stats, first.report_times,
        )

    def write_csv(self, path) -> None:
        """One row per default: run, firm, time, weight, kind."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "firm", "time", "weight", "kind"])
            runs, firms = np.nonzero(self.kinds != NONE)
            for r, i in zip(runs, firms):
                w.writerow([r, self.names[i], repr(float(self.times[r, i])),
                            repr(float(self.weights[r, i])), KIND_NAMES[int(self.kinds[r, i])]])

    @classmethod
    def read_csv(cls, path, names, horizon, run_count, method="unif") -> "FptSampleSet":
        n = len(names)
        times = np.full((run_count, n), np.nan)
        weights = np.zeros((run_count, n))
        kinds = np.zeros((run_count, n), dtype=np.int8)
        index = {name: i for i, name in enumerate(names)}
        codes = {v: k for k, v in KIND_NAMES.items()}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                r, i = int(row["run"]), index[row["firm"]]
                times[r, i] = float(row["time"])
                weights[r, i] = float(row["weight"])
                kinds[r, i] = codes[row["kind"]]
        return cls(tuple(names), horizon, times, weights, kinds, method)


def simulated_default_correlation(samples: FptSampleSet, t: float, pair=(0, 1)) -> float:
    """Default correlation of two firms from the simulated default indicators.

    Single runs give 0/1 indicators, for which a per-run correlation is
    undefined; the estimate pools indicator frequencies over all runs.
    """
    if samples.run_count < 1:
        raise ValueError("no Monte Carlo runs")
    ind = samples.indicators(t)
    i, j = pair
    p_i = ind[:, i].mean()
    p_j = ind[:, j].mean()
    p_ij = (ind[:, i] & ind[:, j]).mean()
    return default_correlation(float(p_i), float(p_j), float(p_ij))


def correlation_matrix(samples: FptSampleSet, t: float) -> np.ndarray:
    n = samples.n_firms
    out = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            try:
                out[i, j] = 1.0 if i == j else simulated_default_correlation(samples, t, (i, j))
            except ValueError:
                pass
    return out


def weighted_ks_2samp(x, y, wx=None, wy=None) -> tuple[float, float]:
    """Two-sample KS statistic on weighted ECDFs, with an asymptotic p-value.

    Sample sizes entering the p-value are Kish effective sizes
    ``(sum w)^2 / sum w^2``; with unit weights this is the ordinary test.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    wx = np.ones_like(x) if wx is None else np.asarray(wx, dtype=float)
    wy = np.ones_like(y) if wy is None else np.asarray(wy, dtype=float)
    if x.size == 0 or y.size == 0 or wx.sum() <= 0 or wy.sum() <= 0:
        raise ValueError("both samples need positive total weight")
    grid = np.union1d(x, y)

    def ecdf(s, w):
        order = np.argsort(s)
        cum = np.cumsum(w[order]) / w.sum()
        idx = np.searchsorted(s[order], grid, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    d = float(np.max(np.abs(ecdf(x, wx) - ecdf(y, wy))))
    nx = wx.sum() ** 2 / np.sum(wx * wx)
    ny = wy.sum() ** 2 / np.sum(wy * wy)
    en = nx * ny / (nx + ny)
    return d, float(stats.kstwobign.sf(d * math.sqrt(en)))


# ------------------------------------------------------------ drivers

def _unif_args(system: SystemSpec):
    arr = system.arrays()
    return (arr["x0"], arr["mu"], arr["gamma"], arr["kappa_log"], arr["sigma_matrix"],
            arr["sigma"], arr["jump_mean"], arr["jump_std"], arr["diffusion_corr"],
            system.jump_probability, float(system.mean_interjump), float(system.horizon))


def unif_run(system: SystemSpec, rng: np.random.Generator, use_sou: bool = True):
    """One UNIF cycle: (times, weights, kinds) arrays of length n_firms."""
    times, weights, kinds, _ = _unif_block(*_unif_args(system), use_sou, rng, 1)
    return times[0], weights[0], kinds[0]


def conventional_run(system: SystemSpec, dt: float, rng: np.random.Generator) -> np.ndarray:
    """One Euler cycle: default time per firm, NaN if none by the horizon."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    arr = system.arrays()
    return _euler_block(arr["x0"], arr["mu"], arr["gamma"], arr["kappa_log"], arr["sigma_matrix"],
                        arr["jump_mean"], arr["jump_std"], float(system.lam), float(system.horizon),
                        float(dt), rng, 1)[0]


def simulate(system: SystemSpec, n_runs: int, seed: int, workers: int = 1, method: str = "unif",
             dt: float = 1e-3, use_sou: bool = True, block_size: int = BLOCK_SIZE,
             report_times=None) -> FptSampleSet:
    """Run n_runs Monte Carlo cycles; block b of runs uses substream b of seed."""
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if method not in ("unif", "conventional"):
        raise ValueError(f"unknown method {method!r}")
    if method == "conventional" and dt <= 0:
        raise ValueError("dt must be positive")
    blocks = [(b, min(block_size, n_runs - b * block_size))
              for b in range(math.ceil(n_runs / block_size))]
    arr = system.arrays()
    uargs = _unif_args(system)

    def run_block(block):
        b, size = block
        rng = RandomStream(seed, b).generator()
        if method == "unif":
            return _unif_block(*uargs, use_sou, rng, size)
        times = _euler_block(arr["x0"], arr["mu"], arr["gamma"], arr["kappa_log"],
                             arr["sigma_matrix"], arr["jump_mean"], arr["jump_std"],
                             float(system.lam), float(system.horizon), float(dt), rng, size)
        hit = ~np.isnan(times)
        return times, hit.astype(float), np.where(hit, GRID, NONE).astype(np.int8), None

    if workers == 1:
        results = [run_block(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, blocks))
    parts = [FptSampleSet(system.names, system.horizon, t, w, k, method, s, report_times)
             for t, w, k, s in results]
    return FptSampleSet.merge(parts)

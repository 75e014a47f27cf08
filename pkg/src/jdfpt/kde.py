"""Weighted Gaussian kernel density of first-passage times.

The bandwidth follows the normal-reference rule with the roughness of a
gamma approximation to the true density, whose shape is held at >= 3 so the
roughness (and hence the bandwidth) stays finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mc import FptSampleSet

MIN_SHAPE = 3.0
DEFAULT_GRID_POINTS = 512


class DegenerateSampleError(ValueError):
    pass


@dataclass(frozen=True)
class GammaFit:
    alpha: float  # rate
    beta: float  # shape, >= 3

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("gamma rate must be positive")
        if self.beta < MIN_SHAPE:
            raise ValueError(f"gamma shape must be >= {MIN_SHAPE}")

    @property
    def mean(self) -> float:
        return self.beta / self.alpha


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    n_samples: int
    run_count: int
    fit: GammaFit | None = None

    @property
    def empty(self) -> bool:
        return self.n_samples == 0

    @property
    def cumulative(self) -> np.ndarray:
        """Trapezoid integral of the density from the first grid point."""
        steps = 0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.grid)
        return np.concatenate([[0.0], np.cumsum(steps)])


def kernel(h: float, u):
    """Gaussian kernel ``exp(-u^2 / (h^2/2)) / (sqrt(pi/2) h)``; unit mass, std h/2."""
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    u = np.asarray(u, dtype=float)
    return np.exp(-(u * u) / (0.5 * h * h)) / (math.sqrt(0.5 * math.pi) * h)


def fit_gamma(times, weights=None) -> GammaFit:
    """Weighted method-of-moments gamma fit with the shape raised to at least 3.

    When the shape is raised, the rate is refit so the mean is preserved.
    """
    s = np.asarray(times, dtype=float)
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=float)
    if s.size < 2 or w.sum() <= 0:
        raise DegenerateSampleError("need at least two samples with positive total weight")
    m = np.average(s, weights=w)
    v = np.average((s - m) ** 2, weights=w)
    if v <= 0 or m <= 0:
        raise DegenerateSampleError(f"cannot fit a gamma density (mean={m}, variance={v})")
    beta = m * m / v
    if beta < MIN_SHAPE:
        return GammaFit(MIN_SHAPE / m, MIN_SHAPE)
    return GammaFit(m / v, beta)


def roughness_integral(fit: GammaFit) -> float:
    """Integral of the squared second derivative of the gamma density."""
    a, b = fit.alpha, fit.beta
    if 2 * b - 5 <= 0:
        raise ValueError("roughness diverges for shape <= 2.5")
    A = a * a
    B = -2.0 * a * (b - 1.0)
    C = (b - 1.0) * (b - 2.0)
    W = (A * A, 2 * A * B, B * B + 2 * A * C, 2 * B * C, C * C)
    total = 0.0
    for i, wi in enumerate(W, start=1):
        log_mag = math.lgamma(2 * b - i) - (2 * b - i) * math.log(2.0) - 2 * math.lgamma(b)
        total += wi * a**i * math.exp(log_mag)
    return total


def optimal_bandwidth(fit: GammaFit, n_samples: int) -> float:
    if n_samples < 1:
        raise ValueError("need at least one sample")
    return (2.0 * n_samples * math.sqrt(math.pi) * roughness_integral(fit)) ** -0.2


def _smooth(grid, s, w, h, run_count, chunk=4096):
    out = np.zeros_like(grid)
    for k in range(0, s.size, chunk):
        u = grid[:, None] - s[None, k:k + chunk]
        out += kernel(h, u) @ w[k:k + chunk]
    return out / run_count


def estimate_density(samples: FptSampleSet, firm: int, grid=None, bandwidth: float | None = None,
                     n_grid: int = DEFAULT_GRID_POINTS) -> DensityEstimate:
    """Importance-weighted kernel estimate of one firm's first-passage density.

    Each sample contributes weight * K(h, t - s) and the sum is divided by the
    number of Monte Carlo runs, so the estimate integrates to the default rate.
    """
    if grid is None:
        grid = np.linspace(0.0, samples.horizon, n_grid)
    grid = np.asarray(grid, dtype=float)
    s, w, _ = samples.samples(firm)
    if s.size == 0:
        return DensityEstimate(grid, np.zeros_like(grid), math.nan, 0, samples.run_count)
    fit = None
    if bandwidth is None:
        fit = fit_gamma(s, w)
        bandwidth = optimal_bandwidth(fit, s.size)
    dens = _smooth(grid, s, w, bandwidth, samples.run_count)
    return DensityEstimate(grid, dens, float(bandwidth), int(s.size), samples.run_count, fit)


def cumulative_default_rate(est: DensityEstimate, t: float) -> float:
    g = est.grid
    if t < g[0] or t > g[-1]:
        raise ValueError(f"t={t} outside the estimate grid [{g[0]}, {g[-1]}]")
    return float(np.interp(t, g, est.cumulative))

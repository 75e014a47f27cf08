"""Domain types for the reduced multivariate jump-diffusion system.

Each firm's log-asset value follows

    dX_i = mu_i dt + sum_j sigma_ij dW_j + dZ_i

with normal jump sizes arriving on a jump clock shared by all firms, and
defaults when X_i falls to the affine threshold ``gamma_i * t + ln(kappa_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Raised for inconsistent model parameters."""


@dataclass(frozen=True)
class Threshold:
    gamma: float
    kappa_log: float

    def at(self, t: float) -> float:
        return self.gamma * t + self.kappa_log


@dataclass(frozen=True)
class FirmSpec:
    """One firm: drift, volatility row, jump sizes and default threshold."""

    mu: float
    sigma_row: tuple[float, ...]
    jump_mean: float
    jump_std: float
    x0: float
    kappa_log: float
    gamma: float
    name: str = ""
    jump_kind: str = "normal"

    def __post_init__(self):
        object.__setattr__(self, "sigma_row", tuple(float(s) for s in self.sigma_row))
        if self.jump_std < 0:
            raise ModelError(f"jump_std must be non-negative, got {self.jump_std}")
        if self.jump_kind != "normal":
            raise ModelError(f"unsupported jump distribution {self.jump_kind!r}")
        effective_sigma(self)
        if not self.x0 > self.kappa_log:
            raise ModelError(
                f"firm {self.name!r} starts at or below its threshold "
                f"(x0={self.x0}, ln kappa={self.kappa_log})"
            )

    @property
    def sigma(self) -> float:
        return effective_sigma(self)

    @property
    def threshold(self) -> Threshold:
        return Threshold(self.gamma, self.kappa_log)

    @property
    def distance_to_default(self) -> float:
        """Standardized distance ``(x0 - ln kappa) / sigma``."""
        return (self.x0 - self.kappa_log) / self.sigma


@dataclass(frozen=True)
class SystemSpec:
    firms: tuple[FirmSpec, ...]
    lam: float
    mean_interjump: float = 1.0
    horizon: float = 10.0
    names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        firms = tuple(self.firms)
        object.__setattr__(self, "firms", firms)
        if not firms:
            raise ModelError("a system needs at least one firm")
        width = len(firms[0].sigma_row)
        if any(len(f.sigma_row) != width for f in firms):
            raise ModelError("all volatility rows must have the same length")
        if self.lam < 0:
            raise ModelError(f"jump intensity must be >= 0, got {self.lam}")
        if self.mean_interjump <= 0:
            raise ModelError("mean_interjump must be positive")
        if self.lam * self.mean_interjump > 1.0 + 1e-12:
            # jump instants are thinned from the interjump clock
            raise ModelError(
                f"lambda * mean_interjump = {self.lam * self.mean_interjump:.4g} > 1; "
                "the jump intensity cannot exceed the instant rate 1/mean_interjump"
            )
        if self.horizon <= 0:
            raise ModelError("horizon must be positive")
        if not self.names:
            object.__setattr__(
                self, "names", tuple(f.name or f"firm{i + 1}" for i, f in enumerate(firms))
            )

    @property
    def n_firms(self) -> int:
        return len(self.firms)

    @property
    def jump_probability(self) -> float:
        """Chance that a clock instant carries a jump."""
        return min(1.0, self.lam * self.mean_interjump)

    def sigma_matrix(self) -> np.ndarray:
        return np.array([f.sigma_row for f in self.firms], dtype=float)

    def covariance(self) -> np.ndarray:
        """Instantaneous diffusion covariance H0 = sigma sigma^T."""
        s = self.sigma_matrix()
        return s @ s.T

    def diffusion_correlation(self) -> np.ndarray:
        h = self.covariance()
        d = np.sqrt(np.diag(h))
        return h / np.outer(d, d)

    def arrays(self) -> dict[str, np.ndarray]:
        """Flat float arrays consumed by the compiled kernels."""
        fs = self.firms
        return dict(
            mu=np.array([f.mu for f in fs]),
            gamma=np.array([f.gamma for f in fs]),
            kappa_log=np.array([f.kappa_log for f in fs]),
            x0=np.array([f.x0 for f in fs]),
            sigma_matrix=self.sigma_matrix(),
            sigma=np.array([f.sigma for f in fs]),
            jump_mean=np.array([f.jump_mean for f in fs]),
            jump_std=np.array([f.jump_std for f in fs]),
            diffusion_corr=self.diffusion_correlation(),
        )


def threshold_at(firm: FirmSpec | Threshold, t: float) -> float:
    if t < 0:
        raise ModelError(f"threshold requested at negative time {t}")
    return firm.gamma * t + firm.kappa_log


def effective_sigma(firm: FirmSpec) -> float:
    row = firm.sigma_row
    if not row:
        raise ModelError("empty volatility row")
    s = math.sqrt(sum(v * v for v in row))
    if s == 0.0:
        raise ModelError("degenerate volatility: all entries of the row are zero")
    return s


def build_sigma_matrix(sigma1: float, sigma2: float, rho12: float) -> np.ndarray:
    """Two-firm volatility factor with sigma_12 = 0.

    Returns ``[[s1, 0], [rho s2, sqrt(1 - rho^2) s2]]`` so that
    ``M @ M.T == [[s1^2, rho s1 s2], [rho s1 s2, s2^2]]``.
    """
    if sigma1 <= 0 or sigma2 <= 0:
        raise ModelError("volatilities must be positive")
    if abs(rho12) > 1:
        raise ModelError(f"invalid correlation {rho12}")
    return np.array(
        [[sigma1, 0.0], [rho12 * sigma2, math.sqrt(1.0 - rho12 * rho12) * sigma2]]
    )


def correlated_sigma_matrix(sigmas, corr) -> np.ndarray:
    """Lower-triangular factor of ``diag(s) C diag(s)`` for any number of firms.

    ``corr`` is either a full correlation matrix or a scalar applied to all
    off-diagonal pairs. For two firms this coincides with build_sigma_matrix.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    n = sigmas.size
    if np.any(sigmas <= 0):
        raise ModelError("volatilities must be positive")
    if np.isscalar(corr):
        if abs(corr) > 1:
            raise ModelError(f"invalid correlation {corr}")
        c = np.full((n, n), float(corr))
        np.fill_diagonal(c, 1.0)
    else:
        c = np.asarray(corr, dtype=float)
        if c.shape != (n, n) or not np.allclose(c, c.T):
            raise ModelError("correlation matrix must be symmetric and match the firm count")
    if n == 2:
        return build_sigma_matrix(sigmas[0], sigmas[1], c[0, 1])
    try:
        low = np.linalg.cholesky(c)
    except np.linalg.LinAlgError as exc:
        raise ModelError("correlation matrix is not positive definite") from exc
    return sigmas[:, None] * low

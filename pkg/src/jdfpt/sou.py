"""Sum-of-uniforms generator for chains of correlated U(0, 1) variates.

Y_i = F(Y_{i-1} + W) with W ~ U(0, c), or F(1 - Y_{i-1} + W) for negative
correlation, where F is the exact CDF of the sum so Y_i stays uniform. The
spread c is set from the target adjacent correlation by inverting the
piecewise polynomial relationship

    |rho| = 1/c - 0.3/c^2            c >= 1  (|rho| <= 0.7)
    |rho| = 1 - 0.5 c^2 + 0.2 c^3    c <= 1  (|rho| >= 0.7)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

# below this |rho| the chain step is an independent draw (c would diverge)
INDEPENDENCE_CUTOFF = 0.005
SEAM = 0.7


@dataclass(frozen=True)
class SouParam:
    c: float
    rho_target: float
    sign: int  # +1 or -1; 0 marks the independence shortcut


@numba.njit(cache=True, nogil=True)
def _c_from_abs_rho(r):
    if r <= SEAM:
        # larger root of r c^2 - c + 0.3 = 0
        return (1.0 + math.sqrt(1.0 - 1.2 * r)) / (2.0 * r)
    lo, hi = 0.0, 1.0
    # 1 - 0.5c^2 + 0.2c^3 decreases from 1 to 0.7 on (0, 1]
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if 1.0 - 0.5 * mid * mid + 0.2 * mid * mid * mid > r:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@numba.njit(cache=True, nogil=True)
def _sou_cdf(z, c):
    if z <= 0.0:
        return 0.0
    if z >= 1.0 + c:
        return 1.0
    if c >= 1.0:
        if z <= 1.0:
            return z * z / (2.0 * c)
        if z <= c:
            return (2.0 * z - 1.0) / (2.0 * c)
        return 1.0 - (1.0 + c - z) ** 2 / (2.0 * c)
    if z <= c:
        return z * z / (2.0 * c)
    if z <= 1.0:
        return (2.0 * z - c) / 2.0
    return 1.0 - (1.0 + c - z) ** 2 / (2.0 * c)


@numba.njit(cache=True, nogil=True)
def _sou_step(y_prev, rho, u):
    """One chain step driven by a single U(0, 1) draw u."""
    if abs(rho) < INDEPENDENCE_CUTOFF:
        return u
    c = _c_from_abs_rho(abs(rho))
    w = c * u
    if rho > 0.0:
        return _sou_cdf(y_prev + w, c)
    return _sou_cdf(1.0 - y_prev + w, c)


def chen_correlation(c: float) -> float:
    """Forward relationship: adjacent correlation magnitude produced by spread c."""
    if c <= 0:
        raise ValueError("c must be positive")
    if c >= 1:
        return 1.0 / c - 0.3 / (c * c)
    return 1.0 - 0.5 * c * c + 0.2 * c**3


def rho_to_c(rho: float) -> SouParam:
    if not -1 < rho < 1:
        raise ValueError(f"invalid correlation {rho}: need |rho| < 1")
    if abs(rho) < INDEPENDENCE_CUTOFF:
        return SouParam(c=math.inf, rho_target=rho, sign=0)
    return SouParam(c=_c_from_abs_rho(abs(rho)), rho_target=rho, sign=1 if rho > 0 else -1)


def sou_cdf(z: float, c: float) -> float:
    """CDF of U(0, 1) + U(0, c)."""
    if c <= 0:
        raise ValueError("c must be positive")
    if z < 0 or z > 1 + c:
        raise ValueError(f"z={z} outside [0, {1 + c}]")
    return _sou_cdf(float(z), float(c))


def sou_next(y_prev: float, rho: float, rng: np.random.Generator) -> float:
    if not 0.0 <= y_prev <= 1.0:
        raise ValueError(f"y_prev={y_prev} is not in [0, 1]")
    if not -1 < rho < 1:
        raise ValueError(f"invalid correlation {rho}")
    return _sou_step(float(y_prev), float(rho), rng.random())


def sou_chain(rhos, rng: np.random.Generator) -> np.ndarray:
    """Uniforms Y_1..Y_{k+1} with corr(Y_i, Y_{i+1}) = rhos[i]."""
    out = np.empty(len(rhos) + 1)
    out[0] = rng.random()
    for i, r in enumerate(rhos):
        out[i + 1] = sou_next(out[i], r, rng)
    return out


@numba.njit(cache=True, nogil=True)
def _sou_pairs(y, rho, u):
    out = np.empty_like(y)
    for k in range(y.size):
        out[k] = _sou_step(y[k], rho, u[k])
    return out


def sou_pairs(n: int, rho: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """n independent (Y_1, Y_2) pairs; vectorized helper for fidelity checks."""
    y = rng.random(n)
    return y, _sou_pairs(y, float(rho), rng.random(n))

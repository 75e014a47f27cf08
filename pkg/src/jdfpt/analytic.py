"""Closed-form diffusion-only default benchmarks (no jumps).

Single-firm default probability of a driftless first-passage model, the
two-firm "at least one default" probability from the Bessel series of the
correlated planar Brownian motion in a wedge, and the implied default
correlation.
"""
from __future__ import annotations

import math

import mpmath
import numba
import numpy as np

SERIES_TOL = 1e-12
MAX_TERMS = 2001
# below this marginal probability the float64 series loses too many digits
# to cancellation and the joint probability is evaluated with mpmath
PRECISE_BELOW = 1e-6


class UndefinedCorrelationError(ValueError):
    """Correlation of default indicators with a degenerate marginal."""


class SeriesConvergenceError(ArithmeticError):
    def __init__(self, message: str, partial: float):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True, nogil=True)
def _log_bessel_i(nu, x):
    """log I_nu(x) from the power series, summed outward from its largest term."""
    if x == 0.0:
        return 0.0 if nu == 0.0 else -np.inf
    h = 0.5 * x
    h2 = h * h
    k0 = math.floor(0.5 * (-nu + math.sqrt(nu * nu + x * x)))
    if k0 < 0:
        k0 = 0
    log_peak = (2.0 * k0 + nu) * (math.log(x) - math.log(2.0)) - math.lgamma(k0 + 1.0) - math.lgamma(k0 + nu + 1.0)
    total = 1.0
    term = 1.0
    k = k0
    while True:
        term *= h2 / ((k + 1.0) * (k + nu + 1.0))
        k += 1
        total += term
        if term < 1e-17 * total:
            break
    term = 1.0
    k = k0
    while k > 0:
        term *= k * (k + nu) / h2
        k -= 1
        total += term
        if term < 1e-17 * total:
            break
    return log_peak + math.log(total)


@numba.njit(cache=True, nogil=True)
def _wedge_geometry(z1, z2, rho):
    """Wedge angle, polar angle and radius of the start point in whitened coordinates."""
    root = math.sqrt(1.0 - rho * rho)
    if rho < 0.0:
        alpha = math.atan(-root / rho)
    elif rho > 0.0:
        alpha = math.pi + math.atan(-root / rho)
    else:
        alpha = 0.5 * math.pi
    den = z1 - rho * z2
    if den > 0.0:
        theta0 = math.atan(z2 * root / den)
    elif den < 0.0:
        theta0 = math.pi + math.atan(z2 * root / den)
    else:
        theta0 = 0.5 * math.pi
    r0 = z2 / math.sin(theta0)
    return alpha, theta0, r0


@numba.njit(cache=True, nogil=True)
def _joint_survival(z1, z2, rho, t, tol, max_terms):
    """Series for P(neither firm defaulted by t); returns (value, converged, n_terms)."""
    alpha, theta0, r0 = _wedge_geometry(z1, z2, rho)
    x = r0 * r0 / (4.0 * t)
    pref = 2.0 * r0 / math.sqrt(2.0 * math.pi * t)
    w = math.pi / alpha
    total = 0.0
    for m in range(max_terms):
        n = 2.0 * m + 1.0
        hi = math.exp(_log_bessel_i(0.5 * (n * w + 1.0), x) - x)
        lo = math.exp(_log_bessel_i(0.5 * (n * w - 1.0), x) - x)
        # I_nu(x) is decreasing in nu, so this bounds every later term
        bound = pref * (hi + lo) / n
        total += bound * math.sin(n * w * theta0)
        if bound < tol:
            return total, True, m + 1
    return total, False, max_terms


@numba.njit(cache=True, nogil=True)
def _default_prob(z, t):
    return math.erfc(z / math.sqrt(2.0 * t))


@numba.njit(cache=True, nogil=True)
def _correlation_fast(z1, z2, rho, t):
    """Float64 default correlation with a 0 fallback for degenerate inputs."""
    if t <= 0.0 or abs(rho) < 1e-12:
        return 0.0
    p1 = _default_prob(z1, t)
    p2 = _default_prob(z2, t)
    if min(p1, p2) < 1e-9 or max(p1, p2) > 1.0 - 1e-12:
        return 0.0
    s, ok, _ = _joint_survival(z1, z2, rho, t, SERIES_TOL, MAX_TERMS)
    if not ok:
        return 0.0
    union = 1.0 - s
    union = min(max(union, max(p1, p2)), min(1.0, p1 + p2))
    c = (p1 + p2 - p1 * p2 - union) / math.sqrt(p1 * (1.0 - p1) * p2 * (1.0 - p2))
    return min(0.99, max(-0.99, c))


# ------------------------------------------------------------- public API

def bessel_ie(order, x):
    """Exponentially scaled modified Bessel function ``exp(-x) I_order(x)``."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    return math.exp(_log_bessel_i(float(order), float(x)) - x)


def bessel_i(order, x):
    """Modified Bessel function of the first kind ``I_order(x)`` for real order >= 0."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    log_value = _log_bessel_i(float(order), float(x))
    if log_value > 709.0:
        raise OverflowError(f"I_{order}({x}) overflows float64; use bessel_ie")
    return math.exp(log_value)


def default_probability(z: float, t: float) -> float:
    """``2 N(-z / sqrt(t))``: chance a driftless firm at standardized distance z defaults by t."""
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    if z <= 0:
        raise ValueError(f"standardized distance must be positive, got {z}")
    return _default_prob(float(z), float(t))


def wedge_geometry(z1: float, z2: float, rho: float) -> tuple[float, float, float]:
    """(alpha, theta0, r0) used by the joint-survival series."""
    if abs(rho) >= 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    return _wedge_geometry(float(z1), float(z2), float(rho))


def union_default_probability(z1, z2, rho, t, series_tol=SERIES_TOL, max_terms=MAX_TERMS):
    """Probability that at least one of two correlated firms defaults by t."""
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    if abs(rho) >= 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if z1 <= 0 or z2 <= 0:
        raise ValueError("standardized distances must be positive")
    s, ok, _ = _joint_survival(float(z1), float(z2), float(rho), float(t), series_tol, max_terms)
    if not ok:
        raise SeriesConvergenceError(
            f"joint-survival series did not converge in {max_terms} terms", 1.0 - s
        )
    p1, p2 = _default_prob(z1, t), _default_prob(z2, t)
    return min(max(1.0 - s, max(p1, p2)), min(1.0, p1 + p2))


def union_series_terms(z1, z2, rho, t, n_terms):
    """Individual series terms, for convergence diagnostics."""
    alpha, theta0, r0 = wedge_geometry(z1, z2, rho)
    x = r0 * r0 / (4.0 * t)
    pref = 2.0 * r0 / math.sqrt(2.0 * math.pi * t)
    w = math.pi / alpha
    out = []
    for m in range(n_terms):
        n = 2 * m + 1
        b = bessel_ie(0.5 * (n * w + 1), x) + bessel_ie(0.5 * (n * w - 1), x)
        out.append(pref * b * math.sin(n * w * theta0) / n)
    return np.array(out)


def default_correlation(p_i: float, p_j: float, p_ij: float) -> float:
    """Pearson correlation of two default indicators from marginal and joint probabilities."""
    if not (0 < p_i < 1 and 0 < p_j < 1):
        raise UndefinedCorrelationError(
            f"default correlation undefined for marginals p_i={p_i}, p_j={p_j}"
        )
    if p_ij < 0 or p_ij > min(p_i, p_j) + 1e-15:
        raise ValueError(f"joint probability {p_ij} inconsistent with marginals")
    return (p_ij - p_i * p_j) / math.sqrt(p_i * (1 - p_i) * p_j * (1 - p_j))


def _joint_default_precise(z1, z2, rho, t):
    """P(both default by t) in extended precision; returns (p1, p2, p12) as mpf."""
    p_min = min(_default_prob(z1, t), _default_prob(z2, t))
    lost = -math.log10(p_min) if p_min > 0 else 300.0
    with mpmath.workdps(int(40 + 2 * lost)):
        z1, z2, rho, t = (mpmath.mpf(v) for v in (z1, z2, rho, t))
        root = mpmath.sqrt(1 - rho**2)
        if rho < 0:
            alpha = mpmath.atan(-root / rho)
        elif rho > 0:
            alpha = mpmath.pi + mpmath.atan(-root / rho)
        else:
            alpha = mpmath.pi / 2
        den = z1 - rho * z2
        if den > 0:
            theta0 = mpmath.atan(z2 * root / den)
        elif den < 0:
            theta0 = mpmath.pi + mpmath.atan(z2 * root / den)
        else:
            theta0 = mpmath.pi / 2
        r0 = z2 / mpmath.sin(theta0)
        x = r0**2 / (4 * t)
        pref = 2 * r0 / mpmath.sqrt(2 * mpmath.pi * t) * mpmath.exp(-x)
        tol = mpmath.mpf(10) ** (-(mpmath.mp.dps - 5))
        w = mpmath.pi / alpha
        total = mpmath.mpf(0)
        for m in range(MAX_TERMS):
            n = 2 * m + 1
            b = mpmath.besseli((n * w + 1) / 2, x) + mpmath.besseli((n * w - 1) / 2, x)
            bound = pref * b / n
            total += bound * mpmath.sin(n * w * theta0)
            if bound < tol:
                break
        else:
            raise SeriesConvergenceError("extended-precision series did not converge", float(1 - total))
        p1 = 2 * mpmath.ncdf(-z1 / mpmath.sqrt(t))
        p2 = 2 * mpmath.ncdf(-z2 / mpmath.sqrt(t))
        # P(both) = P1 + P2 - P(at least one) = P1 + P2 - 1 + survival
        p12 = p1 + p2 - 1 + total
        return p1, p2, p12


def pairwise_default_correlation(z1: float, z2: float, rho: float, t: float) -> float:
    """Default correlation of two firms under the correlated diffusion model."""
    p1 = default_probability(z1, t)
    p2 = default_probability(z2, t)
    if abs(rho) >= 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if min(p1, p2) < PRECISE_BELOW:
        if min(p1, p2) == 0.0:
            raise UndefinedCorrelationError("default probability underflows to zero")
        q1, q2, q12 = _joint_default_precise(z1, z2, rho, t)
        q12 = min(max(q12, mpmath.mpf(0)), min(q1, q2))
        with mpmath.workdps(mpmath.mp.dps + 60):
            num = q12 - q1 * q2
            den = mpmath.sqrt(q1 * (1 - q1) * q2 * (1 - q2))
        return float(num / den)
    union = union_default_probability(z1, z2, rho, t)
    return (p1 + p2 - p1 * p2 - union) / math.sqrt(p1 * (1 - p1) * p2 * (1 - p2))

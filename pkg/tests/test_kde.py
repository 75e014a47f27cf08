import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from jdfpt.kde import (DegenerateSampleError, GammaFit, cumulative_default_rate, estimate_density,
                       fit_gamma, kernel, optimal_bandwidth, roughness_integral)
from jdfpt.mc import NONE, INTERIOR, FptSampleSet


def _symbolic_roughness(beta):
    t, a = sp.symbols("t a", positive=True)
    f = a**beta * t ** (beta - 1) * sp.exp(-a * t) / sp.gamma(beta)
    return sp.lambdify(a, sp.simplify(sp.integrate(sp.diff(f, t, 2) ** 2, (t, 0, sp.oo))))


ROUGH_3 = _symbolic_roughness(3)
ROUGH_4 = _symbolic_roughness(4)


@given(st.floats(0.05, 1.0))
def test_roughness_matches_symbolic_integral(alpha):
    assert roughness_integral(GammaFit(alpha, 3.0)) == pytest.approx(float(ROUGH_3(alpha)), rel=1e-12)
    assert roughness_integral(GammaFit(alpha, 3.0)) == pytest.approx(0.1875 * alpha**5, rel=1e-12)
    assert roughness_integral(GammaFit(alpha, 4.0)) == pytest.approx(float(ROUGH_4(alpha)), rel=1e-12)


@given(st.floats(0.05, 1.0), st.integers(1, 10**7))
def test_bandwidth_power_law(alpha, n):
    fit = GammaFit(alpha, 3.0)
    assert optimal_bandwidth(fit, 32 * n) == pytest.approx(optimal_bandwidth(fit, n) / 2, rel=1e-12)


def test_kernel_has_unit_mass():
    u = np.linspace(-10, 10, 200_001)
    assert np.trapezoid(kernel(0.7, u), u) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        kernel(0.0, u)


def test_fit_gamma_recovers_shape_and_rate(rng):
    s = rng.gamma(5.0, 1 / 0.8, size=1_000_000)
    fit = fit_gamma(s)
    assert fit.beta == pytest.approx(5.0, rel=0.02)
    assert fit.alpha == pytest.approx(0.8, rel=0.02)


def test_fit_gamma_clamps_shape_and_keeps_mean(rng):
    s = rng.exponential(2.0, size=100_000)
    fit = fit_gamma(s)
    assert fit.beta == 3.0
    assert fit.mean == pytest.approx(s.mean())


def test_fit_gamma_weights_match_repetition():
    s = np.array([1.0, 2.0, 4.0])
    fit_w = fit_gamma(s, [1, 2, 1])
    fit_r = fit_gamma([1.0, 2.0, 2.0, 4.0])
    assert fit_w.alpha == pytest.approx(fit_r.alpha)
    assert fit_w.beta == pytest.approx(fit_r.beta)


def test_fit_gamma_degenerate():
    with pytest.raises(DegenerateSampleError):
        fit_gamma([1.0])
    with pytest.raises(DegenerateSampleError):
        fit_gamma([2.0, 2.0, 2.0])


def sample_set(times, weights, runs, horizon=10.0):
    t = np.full((runs, 1), np.nan)
    w = np.zeros((runs, 1))
    k = np.zeros((runs, 1), dtype=np.int8)
    n = len(times)
    t[:n, 0], w[:n, 0], k[:n, 0] = times, weights, INTERIOR
    return FptSampleSet(("X",), horizon, t, w, k)


def test_density_mass_matches_default_rate(rng):
    s = rng.uniform(3, 7, size=4000)
    w = rng.uniform(0.5, 1.5, size=4000)
    samples = sample_set(s, w, 20_000)
    est = estimate_density(samples, 0)
    rate, _ = samples.default_rate(0, 10.0)
    assert est.cumulative[-1] == pytest.approx(rate, abs=0.01)
    assert cumulative_default_rate(est, 10.0) == pytest.approx(est.cumulative[-1])
    with pytest.raises(ValueError):
        cumulative_default_rate(est, 11.0)


def test_empty_sample_gives_zero_density():
    samples = sample_set([], [], 100)
    est = estimate_density(samples, 0)
    assert est.empty and np.all(est.density == 0)


def test_fixed_bandwidth_is_used():
    samples = sample_set([5.0, 5.5], [1.0, 1.0], 10)
    est = estimate_density(samples, 0, bandwidth=0.3)
    assert est.bandwidth == 0.3 and est.fit is None
    peak = est.grid[np.argmax(est.density)]
    assert 4.9 < peak < 5.6


@pytest.mark.parametrize("label", ["A", "Baa", "Ba", "B"])
def test_density_mass_matches_default_frequency_for_presets(label):
    from jdfpt.config import RATING_PRESETS
    from jdfpt.mc import simulate
    from jdfpt.model import FirmSpec, SystemSpec

    p = RATING_PRESETS[label]
    firm = FirmSpec(mu=-0.001, sigma_row=(p["sigma"],), jump_mean=p["jump_mean"],
                    jump_std=p["jump_std"], x0=2.0, kappa_log=0.0, gamma=-0.001)
    samples = simulate(SystemSpec((firm,), lam=0.1), 50_000, 17)
    est = estimate_density(samples, 0)
    freq = np.mean(~np.isnan(samples.times[:, 0]))
    assert est.cumulative[-1] == pytest.approx(freq, abs=0.01)

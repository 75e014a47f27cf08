import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from jdfpt import analytic
from jdfpt.analytic import (SeriesConvergenceError, UndefinedCorrelationError, bessel_i, bessel_ie,
                            default_correlation, default_probability, pairwise_default_correlation,
                            union_default_probability, union_series_terms, wedge_geometry)

from .reference import HORIZONS, ZHOU, ZHOU_Z, pairs


@given(st.floats(0.0, 60.0), st.floats(0.0, 80.0))
def test_bessel_ie_matches_mpmath(order, x):
    with mpmath.workdps(30):
        oracle = float(mpmath.besseli(order, x) * mpmath.exp(-x))
    assert bessel_ie(order, x) == pytest.approx(oracle, rel=1e-10, abs=1e-300)


@given(st.floats(0.0, 40.0), st.floats(1e-3, 300.0))
def test_bessel_ie_matches_scipy(order, x):
    assert bessel_ie(order, x) == pytest.approx(special.ive(order, x), rel=1e-9, abs=1e-300)


def test_bessel_half_orders_closed_form():
    for x in (0.1, 1.0, 7.5):
        assert bessel_i(0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sinh(x), rel=1e-12)
    assert bessel_i(0.5, 1.0) == pytest.approx(0.937675, abs=1e-6)
    assert bessel_i(1.5, 2.0) == pytest.approx(1.099473, abs=1e-6)
    assert bessel_i(0.0, 0.0) == 1.0
    assert bessel_i(2.5, 0.0) == 0.0


def test_bessel_domain_and_overflow():
    with pytest.raises(ValueError):
        bessel_i(-1, 1.0)
    with pytest.raises(ValueError):
        bessel_ie(1, -1.0)
    with pytest.raises(OverflowError):
        bessel_i(1.0, 800.0)
    assert bessel_ie(1.0, 800.0) == pytest.approx(special.ive(1.0, 800.0), rel=1e-10)


def test_default_probability_against_mpmath():
    oracle = float(2 * mpmath.ncdf(-mpmath.mpf("2.1") / mpmath.sqrt(10)))
    assert default_probability(2.1, 10) == pytest.approx(oracle, rel=1e-13)
    assert abs(default_probability(2.1, 10) - 0.50661) < 1e-4
    with pytest.raises(ValueError):
        default_probability(2.1, 0.0)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-0.95, 0.95))
def test_wedge_geometry_ranges(z1, z2, rho):
    alpha, theta0, r0 = wedge_geometry(z1, z2, rho)
    assert 0 < alpha < math.pi
    assert 0 < theta0 < alpha
    # polar point (r0, theta0) maps back to the standardized distances
    assert r0 * math.sin(theta0) == pytest.approx(z2, rel=1e-9)
    assert r0 * math.sin(alpha - theta0) == pytest.approx(z1, rel=1e-9)


def test_wedge_geometry_independent_case():
    alpha, theta0, r0 = wedge_geometry(3.0, 4.0, 0.0)
    assert alpha == pytest.approx(math.pi / 2)
    assert r0 == pytest.approx(5.0)


@given(st.floats(0.5, 6), st.floats(0.5, 6), st.floats(-0.9, 0.9), st.floats(0.5, 20))
def test_union_bounded_by_marginals(z1, z2, rho, t):
    p1, p2 = default_probability(z1, t), default_probability(z2, t)
    u = union_default_probability(z1, z2, rho, t)
    assert max(p1, p2) - 1e-12 <= u <= min(1.0, p1 + p2) + 1e-12


def test_independence_gives_product_formula():
    z1, z2, t = 3.0, 2.0, 5.0
    p1, p2 = default_probability(z1, t), default_probability(z2, t)
    assert union_default_probability(z1, z2, 0.0, t) == pytest.approx(1 - (1 - p1) * (1 - p2), rel=1e-9)
    assert pairwise_default_correlation(z1, z2, 0.0, t) == pytest.approx(0.0, abs=1e-9)


def test_union_against_independent_quadrature():
    # survival of the 2-d correlated driftless walk, via the mpmath series as oracle
    z1, z2, rho, t = 3.73, 2.10, 0.4, 5.0
    q1, q2, q12 = analytic._joint_default_precise(z1, z2, rho, t)
    assert union_default_probability(z1, z2, rho, t) == pytest.approx(float(q1 + q2 - q12), abs=1e-12)


def test_series_non_convergence_raises():
    with pytest.raises(SeriesConvergenceError):
        union_default_probability(8.0, 8.0, 0.4, 0.05, series_tol=1e-300, max_terms=2)


def test_series_terms_decay():
    terms = union_series_terms(3.73, 2.10, 0.4, 10.0, 40)
    assert abs(terms[-1]) < 1e-12
    assert sum(terms) == pytest.approx(1 - union_default_probability(3.73, 2.10, 0.4, 10.0), abs=1e-10)


@pytest.mark.parametrize("t", HORIZONS)
def test_reference_closed_form_correlations(t):
    for i, j in pairs():
        got = 100 * pairwise_default_correlation(ZHOU_Z[i], ZHOU_Z[j], 0.4, t)
        assert got == pytest.approx(ZHOU[t][i][j], abs=0.01), (i, j)


def test_default_correlation_basic():
    assert default_correlation(0.2, 0.3, 0.06) == pytest.approx(0.0)
    assert default_correlation(0.2, 0.2, 0.2) == pytest.approx(1.0)
    with pytest.raises(UndefinedCorrelationError):
        default_correlation(0.0, 0.3, 0.0)
    with pytest.raises(ValueError):
        default_correlation(0.2, 0.3, 0.25)


@given(st.floats(1.0, 5.0), st.floats(1.0, 5.0), st.floats(0.5, 20))
def test_correlation_increases_with_rho(z1, z2, t):
    lo = pairwise_default_correlation(z1, z2, 0.2, t)
    hi = pairwise_default_correlation(z1, z2, 0.6, t)
    assert hi >= lo - 1e-9

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jdfpt.model import (FirmSpec, ModelError, SystemSpec, build_sigma_matrix,
                         correlated_sigma_matrix, effective_sigma, threshold_at)


def firm(**kw):
    base = dict(mu=-0.001, sigma_row=(0.2,), jump_mean=-0.2, jump_std=0.5, x0=2.0,
                kappa_log=0.0, gamma=-0.001)
    base.update(kw)
    return FirmSpec(**base)


def test_threshold_is_affine():
    f = firm(gamma=0.02, kappa_log=0.3)
    assert threshold_at(f, 0.0) == 0.3
    assert threshold_at(f, 5.0) == pytest.approx(0.4)
    with pytest.raises(ModelError):
        threshold_at(f, -1.0)


def test_effective_sigma_is_row_norm():
    assert effective_sigma(firm(sigma_row=(0.3, 0.4))) == pytest.approx(0.5)
    with pytest.raises(ModelError):
        firm(sigma_row=(0.0, 0.0))


def test_firm_must_start_above_threshold():
    with pytest.raises(ModelError):
        firm(x0=0.0)


def test_system_rejects_intensity_above_clock_rate():
    with pytest.raises(ModelError):
        SystemSpec((firm(),), lam=1.5, mean_interjump=1.0)
    s = SystemSpec((firm(),), lam=0.5, mean_interjump=2.0)
    assert s.jump_probability == 1.0


def test_system_rows_must_match():
    with pytest.raises(ModelError):
        SystemSpec((firm(sigma_row=(0.1,)), firm(sigma_row=(0.1, 0.1))), lam=0.1)


def test_build_sigma_matrix_examples():
    m = build_sigma_matrix(0.2, 0.3, 0.0)
    assert np.allclose(m, [[0.2, 0.0], [0.0, 0.3]])
    m = build_sigma_matrix(0.2, 0.3, 1.0)
    assert np.allclose(m, [[0.2, 0.0], [0.3, 0.0]])
    with pytest.raises(ModelError):
        build_sigma_matrix(0.2, 0.3, 1.2)


@given(st.floats(0.01, 2), st.floats(0.01, 2), st.floats(-0.999, 0.999))
def test_sigma_matrix_reproduces_covariance(s1, s2, rho):
    m = build_sigma_matrix(s1, s2, rho)
    h = m @ m.T
    assert h[0, 0] == pytest.approx(s1 * s1)
    assert h[1, 1] == pytest.approx(s2 * s2)
    assert h[0, 1] == pytest.approx(rho * s1 * s2, abs=1e-12)
    assert m[0, 1] == 0.0


@given(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=5), st.floats(-0.2, 0.9))
def test_correlated_sigma_matrix_many_firms(sigmas, rho):
    m = correlated_sigma_matrix(sigmas, rho)
    h = m @ m.T
    d = np.sqrt(np.diag(h))
    assert np.allclose(d, sigmas)
    corr = h / np.outer(d, d)
    off = corr[~np.eye(len(sigmas), dtype=bool)]
    assert np.allclose(off, rho)


def test_system_diffusion_correlation():
    rows = build_sigma_matrix(0.09, 0.45, 0.4)
    s = SystemSpec(tuple(firm(sigma_row=tuple(r)) for r in rows), lam=0.1)
    assert s.diffusion_correlation()[0, 1] == pytest.approx(0.4)
    assert s.firms[1].sigma == pytest.approx(0.45)
    assert s.firms[0].distance_to_default == pytest.approx(2.0 / 0.09)
    assert math.isclose(s.arrays()["sigma"][1], 0.45)

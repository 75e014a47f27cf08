import math

import numpy as np
import pytest
from scipy import stats

from jdfpt.analytic import default_probability
from jdfpt.bridge import InterjumpSegment
from jdfpt.mc import (ATOM, BLOCK_SIZE, INTERIOR, NONE, FptSampleSet, RandomStream,
                      conventional_run, correlation_matrix, fpt_correlation, generate_jump_times,
                      generate_timeline, simulate, simulated_default_correlation, unif_run,
                      weighted_ks_2samp)
from jdfpt.model import FirmSpec, SystemSpec, Threshold, build_sigma_matrix


def firm(sigma=0.2, jm=-0.5, js=0.8, row=None, name=""):
    return FirmSpec(mu=-0.001, sigma_row=row or (sigma,), jump_mean=jm, jump_std=js, x0=2.0,
                    kappa_log=0.0, gamma=-0.001, name=name)


def pair_system(sigma=0.45, rho=0.4, lam=0.1, jm=-0.8, js=1.5):
    rows = build_sigma_matrix(sigma, sigma, rho)
    return SystemSpec(tuple(firm(row=tuple(r), jm=jm, js=js, name=f"F{i}") for i, r in enumerate(rows)),
                      lam=lam)


def test_random_stream_is_reproducible_and_distinct():
    a = RandomStream(5, 0).generator().random(4)
    assert np.array_equal(a, RandomStream(5, 0).generator().random(4))
    assert not np.array_equal(a, RandomStream(5, 1).generator().random(4))


def test_jump_times_mean_count(rng):
    counts = [generate_jump_times(0.5, 10.0, rng).size for _ in range(4000)]
    assert np.mean(counts) == pytest.approx(20.0, rel=0.03)
    t = generate_jump_times(1.0, 10.0, rng)
    assert np.all(np.diff(t) > 0) and (t.size == 0 or t[-1] < 10.0)


def test_timeline_shapes(rng):
    s = pair_system()
    tl = generate_timeline(s, rng)
    assert tl.pre_jump.shape == (2, tl.n_jumps) == tl.post_jump.shape


def test_pure_diffusion_matches_closed_form():
    # no jumps and mu = gamma: the distance to default is a driftless Brownian motion
    s = SystemSpec((firm(sigma=2.0 / 2.1, jm=0.0, js=0.0),), lam=0.0)
    out = simulate(s, 50_000, 3)
    for t in (1.0, 5.0, 10.0):
        rate, se = out.default_rate(0, t)
        assert rate == pytest.approx(default_probability(2.1, t), abs=3 * se)


def test_weighted_and_counted_rates_agree():
    out = simulate(SystemSpec((firm(sigma=0.3),), lam=0.3), 40_000, 9)
    w, se_w = out.default_rate(0, 10.0)
    c, se_c = out.default_rate(0, 10.0, weighted=False)
    assert w == pytest.approx(c, abs=3 * math.hypot(se_w, se_c))


def test_sample_kinds_and_weights():
    out = simulate(SystemSpec((firm(sigma=0.3),), lam=0.3), 20_000, 4)
    k = out.kinds[:, 0]
    assert set(np.unique(k)) <= {NONE, INTERIOR, ATOM}
    assert np.all(out.weights[k == ATOM, 0] == 1.0)
    assert np.all(out.weights[k == INTERIOR, 0] >= 0)
    assert np.all(np.isnan(out.times[k == NONE, 0]))
    # interior weights have conditional mean one
    assert out.weights[k == INTERIOR, 0].mean() == pytest.approx(1.0, abs=0.05)
    cand, qsum, acc = out.stats[0]
    assert acc == pytest.approx(qsum, rel=0.05)


def test_worker_count_does_not_change_output():
    s = pair_system()
    a = simulate(s, 3 * BLOCK_SIZE + 17, 11, workers=1)
    b = simulate(s, 3 * BLOCK_SIZE + 17, 11, workers=3)
    assert np.array_equal(a.times, b.times, equal_nan=True)
    assert np.array_equal(a.weights, b.weights)


def test_prefix_stability():
    s = pair_system()
    short = simulate(s, BLOCK_SIZE, 2)
    long = simulate(s, 2 * BLOCK_SIZE + 5, 2)
    assert np.array_equal(short.times, long.times[:BLOCK_SIZE], equal_nan=True)


def test_conventional_matches_closed_form_roughly():
    s = SystemSpec((firm(sigma=2.0 / 2.1, jm=0.0, js=0.0),), lam=0.0)
    out = simulate(s, 4000, 5, method="conventional", dt=1e-3)
    rate, se = out.default_rate(0, 10.0)
    # Euler monitoring misses crossings; allow the known downward bias
    assert default_probability(2.1, 10.0) - 0.04 < rate < default_probability(2.1, 10.0) + 3 * se


def test_single_runs(rng):
    s = pair_system()
    t, w, k = unif_run(s, rng)
    assert t.shape == w.shape == k.shape == (2,)
    assert conventional_run(s, 1e-2, rng).shape == (2,)
    with pytest.raises(ValueError):
        conventional_run(s, 0.0, rng)


def test_simulate_rejects_bad_arguments():
    s = pair_system()
    with pytest.raises(ValueError):
        simulate(s, 0, 1)
    with pytest.raises(ValueError):
        simulate(s, 10, 1, method="other")
    with pytest.raises(ValueError):
        simulate(s, 10, 1, workers=0)


def test_default_correlation_independent_and_comonotone():
    indep = simulate(pair_system(sigma=0.45, rho=0.0, lam=0.0), 40_000, 1, use_sou=False)
    c = simulated_default_correlation(indep, 10.0)
    assert abs(c) < 0.03
    strong = simulate(pair_system(sigma=0.45, rho=0.99, lam=0.0), 40_000, 1)
    assert simulated_default_correlation(strong, 10.0) > 0.3


def test_shared_jump_clock_raises_short_horizon_correlation():
    # simultaneous jumps dominate early joint defaults
    base = simulate(pair_system(lam=0.0), 40_000, 6)
    jumpy = simulate(pair_system(lam=0.5), 40_000, 6)
    assert simulated_default_correlation(jumpy, 1.0) > simulated_default_correlation(base, 1.0) + 0.05


def test_correlation_matrix_shape_and_diagonal():
    out = simulate(pair_system(), 5000, 1)
    m = correlation_matrix(out, 10.0)
    assert m.shape == (2, 2) and np.allclose(np.diag(m), 1.0)
    assert m[0, 1] == pytest.approx(m[1, 0])


def test_fpt_correlation_bounds():
    th = Threshold(0.0, 0.0)
    near = InterjumpSegment(0.0, 2.0, 0.3, 0.3, 0.0, 0.45, th)
    far = InterjumpSegment(0.0, 2.0, 5.0, 5.0, 0.0, 0.05, th)
    c = fpt_correlation(near, near, 0.4)
    assert 0.0 < c <= 0.99
    assert fpt_correlation(far, near, 0.4) == 0.0
    assert fpt_correlation(near, near, 0.0) == 0.0


def test_csv_round_trip(tmp_path):
    out = simulate(pair_system(), 3000, 8)
    path = tmp_path / "s.csv"
    out.write_csv(path)
    back = FptSampleSet.read_csv(path, out.names, out.horizon, out.run_count)
    assert np.array_equal(back.times, out.times, equal_nan=True)
    assert np.array_equal(back.weights, out.weights)
    assert np.array_equal(back.kinds, out.kinds)


def test_weighted_ks_reduces_to_ordinary(rng):
    x, y = rng.normal(size=700), rng.normal(0.1, 1, size=900)
    d, p = weighted_ks_2samp(x, y)
    ref = stats.ks_2samp(x, y, method="asymp")
    assert d == pytest.approx(ref.statistic)
    assert p == pytest.approx(ref.pvalue, rel=0.05)


def test_weighted_ks_weights_act_like_repetition(rng):
    x = rng.normal(size=500)
    d_w, _ = weighted_ks_2samp(x, x[:250], np.r_[np.full(250, 2.0), np.zeros(250)])
    assert d_w == pytest.approx(0.0)

import math

import numpy as np
import pytest
from scipy.stats import norm

from qcspec.series import acf_columns
from qcspec.simulate import (
    CASE1_COEFFS,
    SimSpec,
    ar_correlations,
    bvn_cdf,
    crossing_acf_gaussian,
    generate,
    generate_case2_components,
    mix_w1,
    mix_w2,
    rng_stream,
    truth_gaussian,
    truth_mc,
)


def test_case1_coefficients():
    a1, a2 = CASE1_COEFFS
    assert a1 == pytest.approx(2 * 0.9 * math.cos(2 * math.pi * 0.2), abs=1e-15)
    assert a1 == pytest.approx(0.556231, abs=1e-6)
    assert a2 == -0.81


def test_mixing_weights():
    assert mix_w1(-1.0) == 0.9
    assert mix_w1(1.0) == 0.2
    assert mix_w1(0.0) == pytest.approx(0.55, abs=1e-15)
    assert mix_w2(-1.0) == 0.5
    assert mix_w2(1.0) == 1.0
    assert mix_w2(0.0) == pytest.approx(0.75, abs=1e-15)


def test_generate_deterministic():
    spec = SimSpec(2, 256, 12345)
    np.testing.assert_array_equal(generate(spec), generate(spec))


def test_generate_distinct_cases_and_seeds():
    y1 = generate(SimSpec(1, 128, 1))
    y2 = generate(SimSpec(2, 128, 1))
    y3 = generate(SimSpec(1, 128, 2))
    assert not np.array_equal(y1, y2)
    assert not np.array_equal(y1, y3)


def test_simspec_validation():
    with pytest.raises(ValueError):
        SimSpec(4, 128, 1)
    with pytest.raises(ValueError):
        SimSpec(1, 32, 1)
    with pytest.raises(ValueError):
        SimSpec(1, 128, 1, burn_in=100)


def test_case2_components_standardized():
    rng = rng_stream(55)
    xi1, xi2, xi3, _ = generate_case2_components(10**6, rng)
    for xi in (xi1[1000:], xi2[1000:], xi3[1000:]):
        assert abs(xi.mean()) < 0.01
        assert abs(xi.var() - 1.0) < 0.01


def test_case3_uncorrelated():
    # volatility clustering inflates the variance of sample autocorrelations
    # well beyond the iid 1/sqrt(n) rate, so the zero-correlation band must
    # come from replications
    reps = 12
    est = np.empty((reps, 11))
    for r in range(reps):
        y = generate(SimSpec(3, 10**5, 770 + r))
        yc = (y - y.mean())[:, None]
        est[r] = acf_columns(yc, 10)[:, 0] / yc.var()
    se = est.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.all(np.abs(est.mean(axis=0)[1:]) < 3 * se[1:] + 1e-3)


def test_case1_acf_matches_analytic():
    rho_true = ar_correlations(CASE1_COEFFS, 10)
    reps = 32
    est = np.empty((reps, 11))
    for r in range(reps):
        y = generate(SimSpec(1, 10**6, 800 + r))
        yc = (y - y.mean())[:, None]
        est[r] = acf_columns(yc, 10)[:, 0] / yc.var()
    se = est.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.all(np.abs(est.mean(axis=0) - rho_true) < 3 * se + 1e-5)


def test_bvn_independence():
    assert bvn_cdf(0.0, 0.0, 0.0) == pytest.approx(0.25, abs=1e-14)


def test_bvn_median_closed_form():
    for rho in (-0.9, -0.5, 0.3, 0.5, 0.95):
        expected = 0.25 + math.asin(rho) / (2 * math.pi)
        assert bvn_cdf(0.0, 0.0, rho) == pytest.approx(expected, abs=1e-12)


def test_bvn_marginal_limits():
    # large opposite corner reduces to the univariate CDF
    assert bvn_cdf(0.7, 9.0, 0.4) == pytest.approx(norm.cdf(0.7), abs=1e-10)
    assert bvn_cdf(-9.0, 0.3, -0.6) == pytest.approx(0.0, abs=1e-10)


def test_bvn_matches_monte_carlo():
    rng = rng_stream(59)
    z1, z2, rho = 0.4, -0.8, 0.65
    m = 10**7
    x = rng.standard_normal(m)
    y = rho * x + math.sqrt(1 - rho * rho) * rng.standard_normal(m)
    phat = np.mean((x <= z1) & (y <= z2))
    se = math.sqrt(phat * (1 - phat) / m)
    assert abs(bvn_cdf(z1, z2, rho) - phat) < 4 * se


def test_bvn_rejects_unit_correlation():
    with pytest.raises(ValueError):
        bvn_cdf(0.0, 0.0, 1.0)


def test_ar_correlations_ar1():
    rho = ar_correlations([0.5], 5)
    np.testing.assert_allclose(rho, 0.5 ** np.arange(6), atol=1e-14)


def test_ar_correlations_rejects_unstable():
    with pytest.raises(ValueError, match="unstable"):
        ar_correlations([1.01], 5)


def test_crossing_acf_median_sheppard():
    alphas = np.array([0.5])
    rho = np.array([0.3, -0.6])
    r = crossing_acf_gaussian(rho, alphas)
    expected = np.arcsin(rho) / (2 * math.pi)
    np.testing.assert_allclose(r[:, 0], expected, atol=1e-12)


def test_truth_gaussian_white_noise_flat():
    alphas = np.linspace(0.1, 0.9, 9)
    grid = truth_gaussian([], alphas, n=64)
    np.testing.assert_allclose(
        grid.s, np.broadcast_to(alphas * (1 - alphas), grid.s.shape), atol=1e-12
    )


def test_truth_gaussian_case1_peak():
    alphas = np.linspace(0.05, 0.95, 19)
    grid = truth_gaussian(CASE1_COEFFS, alphas, n=256)
    median_col = grid.s[:, 9]
    peak = grid.freqs[np.argmax(median_col)] / (2 * np.pi)
    target = round(0.2 * 256) / 256
    assert peak == pytest.approx(target, abs=1e-12)
    assert grid.meta["truncation_bound"] < 1e-7


def test_truth_gaussian_maxlag_guard():
    with pytest.raises(ValueError, match="maxlag"):
        truth_gaussian(CASE1_COEFFS, [0.5], maxlag=20, n=64)


def test_truth_mc_variance_row_and_se(tmp_path):
    alphas = np.linspace(0.2, 0.8, 4)
    grid = truth_mc(SimSpec(3, 64, 3), alphas, maxlag=256, n=64, reps=8)
    assert grid.provenance == "monte-carlo"
    assert grid.mc_se.shape == grid.s.shape
    assert np.all(grid.mc_se > 0)
    # mean over frequencies recovers the lag-0 autocovariance alpha*(1-alpha)
    # approximately (windowed transform of a nearly flat spectrum)
    approx_var = grid.s.mean(axis=0)
    assert np.all(np.abs(approx_var - alphas * (1 - alphas)) < 0.01)


def test_truth_mc_case3_nonflat_at_low_level():
    alphas = np.array([0.3, 0.5])
    grid = truth_mc(SimSpec(3, 256, 20260810), alphas, n=256)
    col = grid.s[:, 0]
    assert col.max() / col.min() > 1.5


def test_truth_grids_positive():
    alphas = np.linspace(0.05, 0.95, 10)
    g = truth_gaussian(CASE1_COEFFS, alphas, n=128)
    assert np.all(g.s > 0)
    assert np.all(np.isfinite(g.s))

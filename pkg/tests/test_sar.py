import numpy as np
import pytest

from qcspec.ar import lag_stack
from qcspec.sar import _SarSystem, sar_fit, sar_gcv, sar_solve, sar_trace_hat
from qcspec.series import qcser
from qcspec.simulate import SimSpec, generate, rng_stream
from qcspec.spline import SplineBasis


def crossing(case, n, seed, levels):
    return qcser(generate(SimSpec(case, n, seed)), levels)


def per_level_ols(qcs, p):
    z, y = lag_stack(qcs.u, p)
    return np.stack(
        [np.linalg.lstsq(z[l], y[l], rcond=None)[0] for l in range(qcs.nlevels)],
        axis=1,
    )


def dense_system(qcs, basis, p, lam, penalty="gridsum"):
    """Materialized stacked design, for brute-force oracles."""
    z, y = lag_stack(qcs.u, p)
    bmat = basis.design(qcs.alphas)
    k = basis.nbasis
    xs = []
    for l in range(qcs.nlevels):
        x = np.zeros((z.shape[1], k * p))
        for j in range(p):
            x[:, j * k : (j + 1) * k] = np.outer(z[l, :, j], bmat[l])
        xs.append(x)
    x0 = np.vstack(xs)
    q = basis.penalty_gridsum(qcs.alphas) if penalty == "gridsum" else basis.penalty_integral()
    g = x0.T @ x0 + (qcs.n - p) * lam * np.kron(np.eye(p), q)
    rhs = x0.T @ y.reshape(-1)
    return x0, g, rhs, y


def test_lambda_to_zero_matches_per_level_ols():
    levels = np.linspace(0.2, 0.8, 4)
    for seed in (1, 2, 3):
        qcs = crossing(2, 256, seed, levels)
        basis = SplineBasis.with_dimension(0.2, 0.8, 4)
        theta = sar_solve(qcs, basis, 2, 1e-12)
        fitted = theta @ basis.design(levels).T
        np.testing.assert_allclose(fitted, per_level_ols(qcs, 2), atol=1e-6)


def test_large_lambda_collapses_to_linear():
    levels = np.linspace(0.1, 0.9, 17)
    qcs = crossing(1, 256, 5, levels)
    basis = SplineBasis.default(0.1, 0.9, 6)
    theta = sar_solve(qcs, basis, 2, 1e7, penalty="integral")
    fitted = theta @ basis.design(levels).T
    second_diff = np.diff(fitted, n=2, axis=1)
    assert np.max(np.abs(second_diff)) < 1e-6


def test_single_level_reduces_to_ridge_ar():
    qcs = crossing(1, 128, 7, np.array([0.5]))
    basis = SplineBasis.default(0.25, 0.75)
    theta = sar_solve(qcs, basis, 2, 1e-12)
    fitted = (theta @ basis.design([0.5]).T)[:, 0]
    np.testing.assert_allclose(fitted, per_level_ols(qcs, 2)[:, 0], atol=1e-8)


def test_trace_limits():
    levels = np.linspace(0.1, 0.9, 9)
    qcs = crossing(1, 256, 11, levels)
    basis = SplineBasis.with_dimension(0.1, 0.9, 6)
    p = 2
    assert sar_trace_hat(qcs, basis, p, 1e-14) == pytest.approx(6 * p, abs=1e-6)
    assert sar_trace_hat(qcs, basis, p, 1e9) == pytest.approx(2 * p, abs=0.1)


def test_trace_matches_brute_force_hat_matrix():
    levels = np.linspace(0.15, 0.85, 5)
    qcs = crossing(2, 64, 13, levels)
    basis = SplineBasis.with_dimension(0.15, 0.85, 6)
    p, lam = 2, 0.1
    x0, g, _, _ = dense_system(qcs, basis, p, lam)
    hat = x0 @ np.linalg.solve(g, x0.T)
    assert sar_trace_hat(qcs, basis, p, lam) == pytest.approx(np.trace(hat), abs=1e-8)


def test_trace_monotone_and_bounded():
    levels = np.linspace(0.1, 0.9, 9)
    qcs = crossing(3, 128, 17, levels)
    basis = SplineBasis.with_dimension(0.1, 0.9, 7)
    p = 2
    lams = np.logspace(-6, 3, 10)
    traces = [sar_trace_hat(qcs, basis, p, l) for l in lams]
    nobs = qcs.nlevels * (qcs.n - p)
    assert np.all(np.diff(traces) <= 1e-9)
    assert all(0 < t < min(basis.nbasis * p, nobs) for t in traces)


def test_gcv_positive_and_rss_monotone():
    levels = np.linspace(0.1, 0.9, 9)
    qcs = crossing(2, 128, 19, levels)
    basis = SplineBasis.with_dimension(0.1, 0.9, 7)
    system = _SarSystem(qcs, basis, 2, "gridsum")
    lams = np.logspace(-6, 3, 10)
    rss = [system.rss(system.solve(l)) for l in lams]
    assert np.all(np.diff(rss) >= -1e-9)
    assert all(system.gcv(l) > 0 for l in lams)


def test_gcv_micro_instance_recomputation():
    # spreadsheet-style recomputation from the materialized design
    levels = np.array([0.25, 0.5, 0.75])
    rng = rng_stream(23)
    qcs = qcser(rng.standard_normal(16), levels)
    basis = SplineBasis.with_dimension(0.25, 0.75, 4)
    p, lam = 1, 0.05
    x0, g, rhs, y = dense_system(qcs, basis, p, lam)
    theta = np.linalg.solve(g, rhs)
    resid = y.reshape(-1) - x0 @ theta
    nobs = 3 * (16 - p)
    tr = np.trace(x0 @ np.linalg.solve(g, x0.T))
    expected = (resid @ resid / nobs) / (1 - tr / nobs) ** 2
    assert sar_gcv(qcs, basis, p, lam) == pytest.approx(expected, abs=1e-10)


def test_gcv_denominator_guard(monkeypatch):
    levels = np.linspace(0.3, 0.7, 3)
    qcs = crossing(1, 64, 29, levels)
    basis = SplineBasis.with_dimension(0.3, 0.7, 4)
    system = _SarSystem(qcs, basis, 2, "gridsum")
    nobs = system.nlev * (system.n - system.p)
    monkeypatch.setattr(system, "trace_hat", lambda lam: float(nobs))
    with pytest.raises(ValueError, match="effective df exceeds sample"):
        system.gcv(0.1)


def test_fit_deterministic():
    levels = np.linspace(0.05, 0.95, 31)
    qcs = crossing(2, 256, 31, levels)
    m1 = sar_fit(qcs, p=3)
    m2 = sar_fit(qcs, p=3)
    assert m1.lam == m2.lam
    assert m1.edf == m2.edf
    np.testing.assert_array_equal(m1.theta, m2.theta)
    np.testing.assert_array_equal(m1.sigma2_fit.coeffs, m2.sigma2_fit.coeffs)


def test_gcv_selected_lambda_is_local_minimum():
    levels = np.linspace(0.05, 0.95, 31)
    qcs = crossing(1, 256, 37, levels)
    model = sar_fit(qcs, p=4)
    system = _SarSystem(qcs, model.basis, 4, "gridsum")
    g0 = system.gcv(model.lam)
    assert g0 <= system.gcv(model.lam * np.exp(0.1)) + 1e-12
    assert g0 <= system.gcv(model.lam * np.exp(-0.1)) + 1e-12


def test_fit_order_zero():
    rng = rng_stream(41)
    qcs = qcser(rng.standard_normal(256), np.linspace(0.1, 0.9, 9))
    model = sar_fit(qcs, p=0)
    assert model.p == 0
    assert model.theta.shape == (0, model.basis.nbasis)
    s2 = model.sigma2_at(qcs.alphas)
    assert np.all(s2 > 0)


def test_singular_trace_reports_error():
    # K > L at lambda = 0: the regularized Gram is genuinely rank-deficient
    qcs = crossing(1, 128, 3, np.array([0.3, 0.7]))
    basis = SplineBasis.with_dimension(0.3, 0.7, 8)
    with pytest.raises(ValueError, match="singular system; increase lambda"):
        sar_trace_hat(qcs, basis, 2, 0.0)


def test_kp_cap_enforced():
    levels = np.linspace(0.05, 0.95, 91)
    qcs = crossing(1, 512, 43, levels)
    basis = SplineBasis.with_dimension(0.05, 0.95, 300)
    with pytest.raises(ValueError, match="cap"):
        sar_solve(qcs, basis, 7, 1e-3)


def test_sigma2_floor_applied():
    levels = np.linspace(0.05, 0.95, 11)
    qcs = crossing(3, 128, 47, levels)
    model = sar_fit(qcs, p=1, lam=1e3)
    s2 = model.sigma2_at(levels)
    assert np.all(s2 >= 1e-6 * levels * (1 - levels))

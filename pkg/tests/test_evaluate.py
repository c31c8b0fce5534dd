import math

import numpy as np
import pytest

from qcspec.evaluate import (
    EstimatorSpec,
    estimate_spectrum,
    floor_spectrum,
    kld,
    rmse,
    run_monte_carlo,
    sweep_parameter,
)
from qcspec.series import qcser
from qcspec.simulate import CASE1_COEFFS, TruthGrid, rng_stream, truth_gaussian
from qcspec.spectrum import SpectrumGrid


@pytest.fixture(scope="module")
def truth():
    return truth_gaussian(CASE1_COEFFS, np.linspace(0.1, 0.9, 9), n=64)


def as_estimate(truth, s):
    return SpectrumGrid(freqs=truth.freqs, alphas=truth.alphas, s=s)


def test_kld_zero_iff_equal(truth):
    est = as_estimate(truth, truth.s.copy())
    assert kld(est, truth) == 0.0
    assert rmse(est, truth) == 0.0
    bumped = as_estimate(truth, truth.s * 1.001)
    assert kld(bumped, truth) > 0
    assert rmse(bumped, truth) > 0


def test_kld_scaling_closed_forms(truth):
    est_e = as_estimate(truth, truth.s * math.e)
    assert kld(est_e, truth) == pytest.approx(math.e - 2.0, abs=1e-12)
    est_half = as_estimate(truth, truth.s / 2.0)
    assert kld(est_half, truth) == pytest.approx(0.5 - math.log(0.5) - 1.0, abs=1e-12)


def test_rmse_closed_forms(truth):
    est = as_estimate(truth, truth.s + 0.1)
    assert rmse(est, truth) == pytest.approx(0.1, abs=1e-12)
    s = truth.s.copy()
    s[3, 4] += 0.25
    est = as_estimate(truth, s)
    cells = truth.s.size
    assert rmse(est, truth) == pytest.approx(0.25 / math.sqrt(cells), abs=1e-12)


def test_grid_mismatch_rejected(truth):
    other = TruthGrid(
        freqs=truth.freqs[:-1],
        alphas=truth.alphas,
        s=truth.s[:-1],
        provenance="semi-analytic",
    )
    with pytest.raises(ValueError, match="grid mismatch"):
        kld(as_estimate(truth, truth.s), other)
    shifted = TruthGrid(
        freqs=truth.freqs + 1e-9,
        alphas=truth.alphas,
        s=truth.s,
        provenance="semi-analytic",
    )
    with pytest.raises(ValueError, match="grid mismatch"):
        rmse(as_estimate(truth, truth.s), shifted)


def test_kld_rejects_nonpositive(truth):
    s = truth.s.copy()
    s[0, 0] = -1e-4
    with pytest.raises(ValueError, match="nonpositive"):
        kld(as_estimate(truth, s), truth)


def test_floor_spectrum_counts(truth):
    s = truth.s.copy()
    s[0, 0] = -1e-4
    s[1, 1] = 0.0
    grid = as_estimate(truth, s)
    floored, count = floor_spectrum(grid)
    assert count == 2
    assert np.all(floored.s > 0)
    assert grid.s[0, 0] == -1e-4  # input untouched
    again, count2 = floor_spectrum(floored)
    assert count2 == 0


def test_estimate_spectrum_dispatch(truth):
    rng = rng_stream(211)
    qcs = qcser(rng.standard_normal(64), truth.alphas)
    for spec in (
        EstimatorSpec("lw", m=8),
        EstimatorSpec("ar", p=1),
        EstimatorSpec("ars", p=1),
        EstimatorSpec("sar", p=1),
    ):
        grid = estimate_spectrum(qcs, spec)
        assert grid.s.shape == (31, 9)
    with pytest.raises(ValueError, match="bandwidth"):
        estimate_spectrum(qcs, EstimatorSpec("lw"))
    with pytest.raises(ValueError, match="unknown estimator"):
        estimate_spectrum(qcs, EstimatorSpec("nope"))


def test_run_monte_carlo_deterministic(truth):
    est = [EstimatorSpec("ar", p=2)]
    r1 = run_monte_carlo(1, 64, 3, est, truth, seed=99, alphas=truth.alphas)
    r2 = run_monte_carlo(1, 64, 3, est, truth, seed=99, alphas=truth.alphas)
    assert [rec.kld for rec in r1[0].records] == [rec.kld for rec in r2[0].records]
    assert r1[0].kld_mean == r2[0].kld_mean


def test_run_monte_carlo_prefix_stability(truth):
    est = [EstimatorSpec("ar", p=2)]
    short = run_monte_carlo(1, 64, 3, est, truth, seed=99, alphas=truth.alphas)
    long = run_monte_carlo(1, 64, 6, est, truth, seed=99, alphas=truth.alphas)
    for a, b in zip(short[0].records, long[0].records[:3]):
        assert a.kld == b.kld and a.rmse == b.rmse


def test_run_monte_carlo_means_are_exact_averages(truth):
    est = [EstimatorSpec("ar", p=2), EstimatorSpec("lw", m=8)]
    reports = run_monte_carlo(1, 64, 5, est, truth, seed=7, alphas=truth.alphas)
    for rep in reports:
        assert rep.kld_mean == float(np.mean([r.kld for r in rep.records]))
        assert rep.rmse_mean == float(np.mean([r.rmse for r in rep.records]))
        assert rep.failures == 0


def test_run_monte_carlo_workers_match_serial(truth):
    est = [EstimatorSpec("ar", p=2), EstimatorSpec("sar", p=1)]
    serial = run_monte_carlo(1, 64, 4, est, truth, seed=5, alphas=truth.alphas)
    parallel = run_monte_carlo(
        1, 64, 4, est, truth, seed=5, alphas=truth.alphas, workers=2
    )
    for a, b in zip(serial, parallel):
        assert [r.kld for r in a.records] == [r.kld for r in b.records]
        assert [r.rmse for r in a.records] == [r.rmse for r in b.records]


def test_run_monte_carlo_records_failures(truth):
    est = [EstimatorSpec("lw", m=4096)]  # bandwidth beyond maxlag: every run fails
    reports = run_monte_carlo(1, 64, 3, est, truth, seed=3, alphas=truth.alphas)
    assert reports[0].failures == 3
    assert math.isnan(reports[0].kld_mean)
    skipped = run_monte_carlo(
        1, 64, 3, est, truth, seed=3, alphas=truth.alphas, skip_failures=True
    )
    assert skipped[0].failures == 3
    assert math.isnan(skipped[0].kld_mean)  # no successes to average


def test_sweep_parameter_picks_minimum(truth):
    by_value, best = sweep_parameter(
        1, 64, 4, EstimatorSpec("ar"), "p", [1, 2, 3], truth, seed=11,
        alphas=truth.alphas,
    )
    means = {v: r.kld_mean for v, r in by_value.items()}
    assert best == min(means, key=lambda v: (means[v], v))
    assert set(by_value) == {1, 2, 3}

"""Error metrics and the Monte Carlo comparison harness.

Estimates are scored against a truth surface by the Kullback-Leibler
spectral divergence, mean over all grid cells of (ratio - log ratio - 1),
and by the root mean-square error. The harness runs seeded replications of
(simulate, estimate, score) for several estimators on the same series and
reports ensemble means with standard errors.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .series import qacf, qcser
from .simulate import SimSpec, generate
from .spectrum import spec_ar, spec_ars, spec_lw, spec_sar

__all__ = [
    "kld",
    "rmse",
    "floor_spectrum",
    "EstimatorSpec",
    "RunRecord",
    "EvalReport",
    "estimate_spectrum",
    "run_monte_carlo",
    "sweep_parameter",
    "format_reports",
]

DEFAULT_ALPHAS = np.linspace(0.05, 0.95, 91)


def _check_grids(est, truth):
    if est.s.shape != truth.s.shape:
        raise ValueError("grid mismatch: shapes differ")
    if not (np.array_equal(est.freqs, truth.freqs) and np.array_equal(est.alphas, truth.alphas)):
        raise ValueError("grid mismatch: axes differ")


def kld(est, truth):
    """Kullback-Leibler spectral divergence, averaged over the grid.

    Both surfaces must be strictly positive; lag-window estimates can dip
    below zero and must be floored (see floor_spectrum) or rejected first.
    """
    _check_grids(est, truth)
    if np.any(truth.s <= 0.0):
        raise ValueError("truth grid has nonpositive cells")
    if np.any(est.s <= 0.0):
        raise ValueError("estimate has nonpositive cells; floor or reject")
    ratio = est.s / truth.s
    return float(np.mean(ratio - np.log(ratio) - 1.0))


def rmse(est, truth):
    """Root mean-square error over the grid."""
    _check_grids(est, truth)
    return float(np.sqrt(np.mean((est.s - truth.s) ** 2)))


def floor_spectrum(grid, rel=1e-8):
    """Floor nonpositive cells at rel * alpha * (1 - alpha).

    Returns (floored grid, number of floored cells); the input is not
    modified.
    """
    floor = np.broadcast_to(rel * grid.alphas * (1.0 - grid.alphas), grid.s.shape)
    mask = grid.s < floor
    count = int(mask.sum())
    if count == 0:
        return grid, 0
    s = np.where(mask, floor, grid.s)
    return replace(grid, s=s), count


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator configuration for the harness.

    name is one of "lw", "ar", "ars", "sar". p = None means AIC-auto;
    lam = None means GCV-auto; m is the lag-window bandwidth (required for
    "lw"); basis_dim overrides the default spline dimension.
    """

    name: str
    p: int | None = None
    pmax: int = 20
    m: int | None = None
    lam: float | None = None
    method: str = "ls"
    basis_dim: int | None = None

    def label(self):
        return self.name


def _basis_for(spec, alphas):
    from .spline import SplineBasis

    if spec.basis_dim is None:
        return None
    return SplineBasis.with_dimension(alphas[0], alphas[-1], spec.basis_dim)


def estimate_spectrum(qcs, spec):
    """Run one configured estimator on a crossing matrix."""
    if spec.name == "lw":
        if spec.m is None:
            raise ValueError("lag-window estimator needs a bandwidth M")
        return spec_lw(qacf(qcs, spec.m), spec.m)
    if spec.name == "ar":
        return spec_ar(qcs, p=spec.p, method=spec.method, pmax=spec.pmax)
    if spec.name == "ars":
        return spec_ars(qcs, p=spec.p, pmax=spec.pmax, basis=_basis_for(spec, qcs.alphas))
    if spec.name == "sar":
        return spec_sar(
            qcs, p=spec.p, lam=spec.lam, pmax=spec.pmax, basis=_basis_for(spec, qcs.alphas)
        )
    raise ValueError(f"unknown estimator '{spec.name}'")


@dataclass
class RunRecord:
    run: int
    seed: int
    kld: float = math.nan
    rmse: float = math.nan
    floored: int = 0
    error: str | None = None


@dataclass
class EvalReport:
    """Ensemble scores of one estimator on one benchmark setting."""

    estimator: str
    case_id: int
    n: int
    runs: int
    kld_mean: float
    rmse_mean: float
    kld_se: float
    rmse_se: float
    records: list = field(default_factory=list)
    failures: int = 0


def _score_one(case_id, n, seed_r, run, estimators, truth, alphas, burn_in):
    y = generate(SimSpec(case_id, n, seed_r, burn_in))
    qcs = qcser(y, alphas)
    records = []
    for spec in estimators:
        rec = RunRecord(run=run, seed=seed_r)
        try:
            grid = estimate_spectrum(qcs, spec)
            for_kld = grid
            if spec.name == "lw":
                for_kld, rec.floored = floor_spectrum(grid)
            rec.kld = kld(for_kld, truth)
            rec.rmse = rmse(grid, truth)
        except (ValueError, np.linalg.LinAlgError) as exc:
            rec.error = str(exc)
        records.append(rec)
    return records


def run_monte_carlo(
    case_id,
    n,
    runs,
    estimators,
    truth,
    seed,
    alphas=None,
    burn_in=1000,
    workers=1,
    skip_failures=False,
):
    """Seeded Monte Carlo comparison of estimators against a truth surface.

    Run r uses seed ^ r, so extending `runs` leaves earlier records
    unchanged. All estimators see the same series in each run. Failed runs
    are recorded with their error text; they poison the means (NaN) unless
    skip_failures is set, in which case means are over the successes and the
    failure count is reported. Results are independent of `workers`.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    alphas = DEFAULT_ALPHAS if alphas is None else np.asarray(alphas, dtype=float)
    estimators = list(estimators)
    seeds = [seed ^ r for r in range(runs)]
    args = [(case_id, n, seeds[r], r, estimators, truth, alphas, burn_in) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_run = list(pool.map(_score_one_star, args, chunksize=max(1, runs // (4 * workers))))
    else:
        per_run = [_score_one_star(a) for a in args]

    reports = []
    for i, spec in enumerate(estimators):
        records = [per_run[r][i] for r in range(runs)]
        ok = [rec for rec in records if rec.error is None]
        failures = runs - len(ok)
        use = ok if skip_failures else records
        klds = np.array([rec.kld for rec in use])
        rmses = np.array([rec.rmse for rec in use])
        nn = len(use)
        reports.append(
            EvalReport(
                estimator=spec.label(),
                case_id=case_id,
                n=n,
                runs=runs,
                kld_mean=float(np.mean(klds)) if nn else math.nan,
                rmse_mean=float(np.mean(rmses)) if nn else math.nan,
                kld_se=float(np.std(klds, ddof=1) / math.sqrt(nn)) if nn > 1 else math.nan,
                rmse_se=float(np.std(rmses, ddof=1) / math.sqrt(nn)) if nn > 1 else math.nan,
                records=records,
                failures=failures,
            )
        )
    return reports


def _score_one_star(args):
    return _score_one(*args)


def sweep_parameter(case_id, n, runs, base, param, values, truth, seed, metric="kld", **kwargs):
    """Ensemble scores over a parameter sweep, plus the minimizing setting.

    Fixes `param` ("p" or "m") of the base estimator at each value across all
    Monte Carlo runs and returns (reports_by_value, best_value) where best
    minimizes the ensemble mean of `metric` ("kld" or "rmse"); ties go to
    the smaller value.
    """
    if param not in ("p", "m"):
        raise ValueError("param must be 'p' or 'm'")
    if metric not in ("kld", "rmse"):
        raise ValueError("metric must be 'kld' or 'rmse'")
    specs = [replace(base, **{param: v}) for v in values]
    reports = run_monte_carlo(case_id, n, runs, specs, truth, seed, **kwargs)
    by_value = dict(zip(values, reports))
    means = [getattr(r, metric + "_mean") for r in reports]
    best = values[int(np.argmin(means))]
    return by_value, best


def format_reports(reports):
    """Fixed-width text table of ensemble results."""
    lines = [
        f"{'estimator':<10} {'case':>4} {'n':>6} {'runs':>5} "
        f"{'KLD':>10} {'se':>9} {'RMSE':>10} {'se':>9} {'fail':>5}"
    ]
    for r in reports:
        lines.append(
            f"{r.estimator:<10} {r.case_id:>4} {r.n:>6} {r.runs:>5} "
            f"{r.kld_mean:>10.5f} {r.kld_se:>9.5f} {r.rmse_mean:>10.5f} "
            f"{r.rmse_se:>9.5f} {r.failures:>5}"
        )
    return "\n".join(lines)

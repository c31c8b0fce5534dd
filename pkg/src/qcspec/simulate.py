"""Test-process generators and ground-truth crossing-spectrum oracles.

Three benchmark processes: (1) a narrow-band Gaussian AR(2); (2) a nonlinear
mixture of three standardized Gaussian AR components whose weights shift
with the signal level, so different levels see different spectra; (3) a
stochastic volatility series that is white in the ordinary sense but shows
structure in its crossing spectra.

For Gaussian linear processes the crossing autocovariance has the closed
form R(tau, alpha) = Phi2(z, z; rho(tau)) - alpha^2 with z the normal
alpha-quantile, which gives a semi-analytic truth surface. The other cases
use a Monte Carlo oracle averaging crossing autocovariances over long
independent realizations.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.stats import norm

from .series import acf_columns, validate_levels
from .spectrum import fourier_freqs, lw_transform

__all__ = [
    "SimSpec",
    "TruthGrid",
    "CASE1_COEFFS",
    "generate",
    "generate_case2_components",
    "mix_w1",
    "mix_w2",
    "bvn_cdf",
    "ar_correlations",
    "crossing_acf_gaussian",
    "truth_gaussian",
    "truth_mc",
    "default_truth",
]

# Narrow-band AR(2): poles at 0.9 * exp(+-2*pi*i*0.2)
_D = 0.9
_F0 = 0.2
CASE1_COEFFS = (2.0 * _D * math.cos(2.0 * math.pi * _F0), -_D * _D)

# Innovation standard deviations making each component unit variance
_SD1 = math.sqrt(1.0 - 0.8**2)
_SD2 = math.sqrt(1.0 - 0.7**2)


def _ar2_innovation_sd(a1, a2):
    # stationary variance of AR(2): g0 = s2 (1-a2) / ((1+a2)((1-a2)^2 - a1^2))
    s2 = (1.0 + a2) * ((1.0 - a2) ** 2 - a1 * a1) / (1.0 - a2)
    return math.sqrt(s2)


_SD3 = _ar2_innovation_sd(*CASE1_COEFFS)


@dataclass
class SimSpec:
    """One simulated series: benchmark case, length, seed, burn-in samples."""

    case_id: int
    n: int
    seed: int
    burn_in: int = 1000

    def __post_init__(self):
        if self.case_id not in (1, 2, 3):
            raise ValueError("case_id must be 1, 2, or 3")
        if self.n < 64:
            raise ValueError("n must be at least 64")
        if self.burn_in < 500:
            raise ValueError("burn_in must be at least 500")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass
class TruthGrid:
    """Reference spectrum surface with provenance.

    mc_se holds per-cell standard errors when the surface is a Monte Carlo
    average; meta may carry a truncation-error bound for semi-analytic grids.
    """

    freqs: np.ndarray
    alphas: np.ndarray
    s: np.ndarray
    provenance: str
    mc_se: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.s.shape


def rng_stream(seed, *key):
    """Independent, reproducible Philox stream for (seed, key...)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=key)))


def _ar_path(coeffs, eps):
    return lfilter([1.0], np.concatenate(([1.0], -np.asarray(coeffs, dtype=float))), eps)


def mix_w1(x):
    """First mixing weight: 0.9 below -0.8, 0.2 above 0.8, linear between."""
    x = np.asarray(x, dtype=float)
    return np.where(
        x < -0.8, 0.9, np.where(x > 0.8, 0.2, 0.9 - (7.0 / 16.0) * (x + 0.8))
    )


def mix_w2(x):
    """Second mixing weight: 0.5 below -0.4, 1.0 above 0.4, linear between."""
    x = np.asarray(x, dtype=float)
    return np.where(
        x < -0.4, 0.5, np.where(x > 0.4, 1.0, 0.5 + (5.0 / 8.0) * (x + 0.4))
    )


def generate_case2_components(total, rng):
    """The three standardized AR components and the innovations of the third.

    Returns (xi1, xi2, xi3, eps3): AR(1) with coefficient 0.8, AR(1) with
    coefficient -0.7, and the narrow-band AR(2), each zero mean and unit
    variance by construction of the innovation scales.
    """
    eps1 = _SD1 * rng.standard_normal(total)
    eps2 = _SD2 * rng.standard_normal(total)
    eps3 = _SD3 * rng.standard_normal(total)
    xi1 = _ar_path([0.8], eps1)
    xi2 = _ar_path([-0.7], eps2)
    xi3 = _ar_path(CASE1_COEFFS, eps3)
    return xi1, xi2, xi3, eps3


def generate(spec):
    """Simulate one benchmark series; deterministic given spec.seed."""
    rng = rng_stream(spec.seed, spec.case_id)
    total = spec.n + spec.burn_in
    if spec.case_id == 1:
        y = _ar_path(CASE1_COEFFS, rng.standard_normal(total))
    elif spec.case_id == 2:
        xi1, xi2, xi3, _ = generate_case2_components(total, rng)
        w1 = mix_w1(xi1)
        zeta = w1 * xi1 + (1.0 - w1) * xi2
        w2 = mix_w2(zeta)
        y = w2 * zeta + (1.0 - w2) * xi3
    else:
        _, _, xi3, eps3 = generate_case2_components(total, rng)
        y = np.empty(total)
        y[0] = eps3[0]
        y[1:] = eps3[1:] * np.exp(xi3[:-1])
    return y[spec.burn_in :]


# Gauss-Legendre half-rules used by the bivariate normal quadrature
_GL_X = {
    3: np.array([0.9324695142031522, 0.6612093864662647, 0.2386191860831970]),
    6: np.array(
        [
            0.9815606342467191,
            0.9041172563704750,
            0.7699026741943050,
            0.5873179542866171,
            0.3678314989981802,
            0.1252334085114692,
        ]
    ),
    10: np.array(
        [
            0.9931285991850949,
            0.9639719272779138,
            0.9122344282513259,
            0.8391169718222188,
            0.7463319064601508,
            0.6360536807265150,
            0.5108670019508271,
            0.3737060887154196,
            0.2277858511416451,
            0.0765265211334973,
        ]
    ),
}
_GL_W = {
    3: np.array([0.1713244923791704, 0.3607615730481386, 0.4679139345726910]),
    6: np.array(
        [
            0.04717533638651183,
            0.1069393259953184,
            0.1600783285433462,
            0.2031674267230659,
            0.2334925365383548,
            0.2491470458134028,
        ]
    ),
    10: np.array(
        [
            0.01761400713915212,
            0.04060142980038694,
            0.06267204833410906,
            0.08327674157670475,
            0.1019301198172404,
            0.1181945319615184,
            0.1316886384491766,
            0.1420961093183821,
            0.1491729864726037,
            0.1527533871307259,
        ]
    ),
}


def _phid(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _bvnu(dh, dk, r):
    """P(X > dh, Y > dk) for standard bivariate normal with correlation r.

    Drezner-Wesolowsky quadrature as organized by Genz; absolute accuracy
    around 1e-15 for |r| < 1.
    """
    if abs(r) < 0.3:
        x, w = _GL_X[3], _GL_W[3]
    elif abs(r) < 0.75:
        x, w = _GL_X[6], _GL_W[6]
    else:
        x, w = _GL_X[10], _GL_W[10]
    h, k = dh, dk
    hk = h * k
    bvn = 0.0
    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = math.asin(r)
        sn = np.sin(asr * 0.5 * np.concatenate([1.0 - x, 1.0 + x]))
        bvn = float(
            np.concatenate([w, w]) @ np.exp((sn * hk - hs) / (1.0 - sn * sn))
        )
        bvn = bvn * asr / (4.0 * math.pi) + _phid(-h) * _phid(-k)
    else:
        twopi = 2.0 * math.pi
        if r < 0.0:
            k = -k
            hk = -hk
        if abs(r) < 1.0:
            ass = (1.0 - r) * (1.0 + r)
            a = math.sqrt(ass)
            bs = (h - k) ** 2
            c = (4.0 - hk) / 8.0
            d = (12.0 - hk) / 16.0
            asr = -0.5 * (bs / ass + hk)
            if asr > -100.0:
                bvn = (
                    a
                    * math.exp(asr)
                    * (1.0 - c * (bs - ass) * (1.0 - d * bs / 5.0) / 3.0 + c * d * ass * ass / 5.0)
                )
            if -hk < 100.0:
                b = math.sqrt(bs)
                bvn -= (
                    math.exp(-0.5 * hk)
                    * math.sqrt(twopi)
                    * _phid(-b / a)
                    * b
                    * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
                )
            a *= 0.5
            for sign in (-1.0, 1.0):
                xs = (a * (sign * x + 1.0)) ** 2
                rs = np.sqrt(1.0 - xs)
                asr_v = -0.5 * (bs / xs + hk)
                mask = asr_v > -100.0
                if np.any(mask):
                    term = np.exp(asr_v[mask]) * (
                        np.exp(-hk * (1.0 - rs[mask]) / (2.0 * (1.0 + rs[mask]))) / rs[mask]
                        - (1.0 + c * xs[mask] * (1.0 + d * xs[mask]))
                    )
                    bvn += a * float(w[mask] @ term)
            bvn = -bvn / twopi
        if r > 0.0:
            bvn += _phid(-max(h, k))
        else:
            bvn = -bvn
            if k > h:
                bvn += _phid(k) - _phid(h)
    return min(max(bvn, 0.0), 1.0)


def bvn_cdf(z1, z2, rho):
    """Standard bivariate normal CDF P(X <= z1, Y <= z2) with correlation rho."""
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise ValueError("correlation must lie in (-1, 1)")
    return _bvnu(-float(z1), -float(z2), rho)


def ar_correlations(coeffs, maxlag):
    """Autocorrelations rho(0..maxlag) of a stationary AR process.

    Solves the Yule-Walker system for lags 1..p, then extends by the
    recursion rho(tau) = sum_j a_j rho(tau - j). Raises for unstable
    coefficient vectors.
    """
    a = np.atleast_1d(np.asarray(coeffs, dtype=float))
    p = a.size
    m = max(p, maxlag)
    rho = np.zeros(m + 1)
    rho[0] = 1.0
    if p == 0:
        return rho[: maxlag + 1]
    roots = np.roots(np.concatenate([-a[::-1], [1.0]]))
    if roots.size and np.abs(roots).min() <= 1.0 + 1e-10:
        raise ValueError("unstable AR coefficients")
    mat = np.eye(p)
    for j in range(1, p + 1):
        for i in range(1, p + 1):
            lag = abs(j - i)
            if lag >= 1:
                mat[j - 1, lag - 1] -= a[i - 1]
    rho[1 : p + 1] = np.linalg.solve(mat, a)
    for tau in range(p + 1, m + 1):
        rho[tau] = a @ rho[tau - p : tau][::-1]
    return rho[: maxlag + 1]


def crossing_acf_gaussian(rho, alphas):
    """Crossing autocovariances of a unit-variance Gaussian process.

    R(tau, alpha) = Phi2(z, z; rho(tau)) - alpha^2 with z = Phi^{-1}(alpha);
    rho may be a vector over lags. Lag-0 (rho = 1) reduces to alpha(1-alpha).
    """
    a = validate_levels(alphas)
    z = norm.ppf(a)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.empty((rho.size, a.size))
    for i, r in enumerate(rho):
        if r >= 1.0 - 1e-14:
            out[i] = a * (1.0 - a)
        elif r <= -1.0 + 1e-14:
            out[i] = np.maximum(2.0 * a - 1.0, 0.0) - a * a
        else:
            out[i] = np.array([_bvnu(-zz, -zz, r) for zz in z]) - a * a
    return out


def truth_gaussian(ar_coeffs, alphas, maxlag=None, freqs=None, n=None):
    """Semi-analytic crossing spectrum of a stationary Gaussian AR process.

    The lag sum is truncated at maxlag (default: where the correlation
    envelope drops below 1e-8); the geometric-decay bound on the neglected
    tail is reported in meta["truncation_bound"].
    """
    a = validate_levels(alphas)
    coeffs = np.atleast_1d(np.asarray(ar_coeffs, dtype=float))
    if coeffs.size:
        roots = np.roots(np.concatenate([-coeffs[::-1], [1.0]]))
        rate = float(np.abs(1.0 / roots).max())
    else:
        rate = 0.0
    if maxlag is None:
        maxlag = 1 if rate == 0.0 else int(math.ceil(math.log(1e-8) / math.log(rate))) + 8
    if freqs is None:
        if n is None:
            raise ValueError("pass freqs or n")
        freqs = fourier_freqs(n)
    freqs = np.asarray(freqs, dtype=float)
    rho = ar_correlations(coeffs, maxlag)
    if abs(rho[maxlag]) >= 1e-8:
        raise ValueError("maxlag too small: |rho(maxlag)| >= 1e-8")
    r = crossing_acf_gaussian(rho, a)
    taus = np.arange(1, maxlag + 1)
    s = r[0][None, :] + 2.0 * np.cos(np.outer(freqs, taus)) @ r[1:]
    # |R(tau, alpha)| <= |rho(tau)| / (2 pi sqrt(1 - rho^2)); bound the tail
    # by the geometric envelope fitted to the last computed lags.
    if rate > 0.0:
        tail_idx = np.arange(max(maxlag - 20, 1), maxlag + 1)
        c = float(np.max(np.abs(rho[tail_idx]) / rate**tail_idx))
        tail = c * rate ** (maxlag + 1) / (1.0 - rate) / math.pi
    else:
        tail = 0.0
    return TruthGrid(
        freqs=freqs,
        alphas=a,
        s=s,
        provenance="semi-analytic",
        meta={"truncation_bound": tail, "maxlag": maxlag},
    )


_QUANTILE_KEY = 0x51
_REP_KEY = 0x52


def true_quantiles(case_id, alphas, seed, ndraw=10_000_000):
    """Quantiles of a benchmark process from one long fixed reference draw."""
    a = validate_levels(alphas)
    spec = SimSpec(case_id, ndraw, seed)
    y = np.sort(generate(_reseeded(spec, _QUANTILE_KEY, 0)))
    ks = np.ceil(ndraw * a).astype(np.int64)
    return y[ks - 1]


def _reseeded(spec, *key):
    child = int(np.random.SeedSequence(entropy=spec.seed, spawn_key=key).generate_state(1, np.uint64)[0])
    return SimSpec(spec.case_id, spec.n, child, spec.burn_in)


def truth_mc(spec, alphas, maxlag=512, freqs=None, n_long=2**17, reps=8, n=None):
    """Monte Carlo crossing-spectrum oracle for one benchmark case.

    Crossing series are formed against quantiles held fixed across
    replications (estimated once from a separate long draw), so replication
    averages are unbiased for the population crossing autocovariances. Each
    replication of length n_long yields a lag-window spectrum with bandwidth
    maxlag; the grid reports their mean and per-cell standard error.
    """
    if n_long < 2**17:
        raise ValueError("n_long must be at least 2**17")
    if reps < 8:
        raise ValueError("reps must be at least 8")
    a = validate_levels(alphas)
    if freqs is None:
        if n is None:
            raise ValueError("pass freqs or n")
        freqs = fourier_freqs(n)
    freqs = np.asarray(freqs, dtype=float)
    q = true_quantiles(spec.case_id, a, spec.seed)
    spectra = np.empty((reps, freqs.size, a.size))
    for rep in range(reps):
        rep_spec = _reseeded(
            SimSpec(spec.case_id, n_long, spec.seed, spec.burn_in), _REP_KEY, rep
        )
        y = generate(rep_spec)
        u = a[None, :] - (y[:, None] <= q[None, :])
        r = acf_columns(u, maxlag)
        spectra[rep] = lw_transform(r, maxlag, freqs)
    s = spectra.mean(axis=0)
    se = spectra.std(axis=0, ddof=1) / math.sqrt(reps)
    return TruthGrid(
        freqs=freqs,
        alphas=a,
        s=s,
        provenance="monte-carlo",
        mc_se=se,
        meta={"reps": reps, "n_long": n_long, "maxlag": maxlag},
    )


def default_truth(case_id, n, alphas, seed, **mc_kwargs):
    """Truth surface for a benchmark case on the Fourier grid of length-n series.

    Case 1 is Gaussian, so the semi-analytic surface is used; cases 2 and 3
    fall back to the Monte Carlo oracle.
    """
    if case_id == 1:
        return truth_gaussian(CASE1_COEFFS, alphas, n=n)
    return truth_mc(SimSpec(case_id, max(n, 64), seed), alphas, n=n, **mc_kwargs)

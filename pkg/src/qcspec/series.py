"""Quantile-crossing series and their sample autocovariances.

Given a time series y_1..y_n and a quantile level alpha, the crossing series
is u_t = alpha - I(y_t <= qhat(alpha)), a two-valued zero-mean sequence whose
autocovariance structure carries the serial dependence of y at that level.
This module builds the crossing matrix over a grid of levels and computes its
sample autocovariances with divisor n (not n - lag).
"""

from dataclasses import dataclass
from math import ceil

import numpy as np

__all__ = [
    "QcsMatrix",
    "QAcf",
    "validate_series",
    "validate_levels",
    "sample_quantile",
    "qcser",
    "qacf",
    "acf_columns",
]


def validate_series(y):
    """Return y as a finite 1-d float array; reject empty or non-finite input."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if y.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite value in series")
    return y


def validate_levels(alphas):
    """Return quantile levels as an array; must be strictly increasing in (0, 1)."""
    a = np.atleast_1d(np.asarray(alphas, dtype=float))
    if a.size == 0:
        raise ValueError("invalid level: empty grid")
    if not np.all((a > 0.0) & (a < 1.0)):
        raise ValueError("invalid level: levels must lie in (0, 1)")
    if a.size > 1 and not np.all(np.diff(a) > 0):
        raise ValueError("invalid level: levels must be strictly increasing")
    return a


@dataclass
class QcsMatrix:
    """Crossing values for one series over a grid of quantile levels.

    u has shape (n, L); column l holds alpha_l - I(y_t <= qhat(alpha_l)), so
    every entry is exactly alpha_l or alpha_l - 1.
    """

    u: np.ndarray
    alphas: np.ndarray
    qhat: np.ndarray

    @property
    def n(self):
        return self.u.shape[0]

    @property
    def nlevels(self):
        return self.u.shape[1]


@dataclass
class QAcf:
    """Sample autocovariances of a crossing matrix, lags 0..maxlag per level.

    r has shape (maxlag + 1, L); n is the length of the underlying series
    (needed to place spectra on its Fourier grid).
    """

    r: np.ndarray
    alphas: np.ndarray
    n: int

    @property
    def maxlag(self):
        return self.r.shape[0] - 1


def sample_quantile(y, alpha):
    """Type-1 sample quantile: the ceil(n*alpha)-th order statistic.

    This left-continuous inverse of the empirical CDF makes crossing counts
    exact: with distinct values, exactly ceil(n*alpha) observations fall at
    or below the returned value.
    """
    y = validate_series(y)
    if not 0.0 < float(alpha) < 1.0:
        raise ValueError("invalid level")
    k = ceil(y.size * float(alpha))
    return float(np.partition(y, k - 1)[k - 1])


def qcser(y, alphas):
    """Build the quantile-crossing matrix of y at the given levels.

    Returns a QcsMatrix with u[t, l] = alphas[l] - I(y_t <= qhat(alphas[l]))
    and the per-level sample quantiles qhat.
    """
    y = validate_series(y)
    a = validate_levels(alphas)
    n = y.size
    ys = np.sort(y)
    ks = np.ceil(n * a).astype(np.int64)
    qhat = ys[ks - 1]
    u = a[None, :] - (y[:, None] <= qhat[None, :])
    return QcsMatrix(u=u, alphas=a, qhat=qhat)


def acf_columns(u, maxlag):
    """Columnwise sample autocovariances with divisor n, lags 0..maxlag.

    u is (n, L); no centering is applied (the crossing series has mean O(1/n)
    by construction). FFT-based; identical to the direct sum
    (1/n) * sum_{t=tau+1..n} u_t u_{t-tau} up to rounding.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    if not 0 <= maxlag < n:
        raise ValueError("maxlag must satisfy 0 <= maxlag < n")
    m = 1 << int(2 * n - 1).bit_length()
    spec = np.fft.rfft(u, m, axis=0)
    r = np.fft.irfft(spec.real**2 + spec.imag**2, m, axis=0)[: maxlag + 1]
    return r / n


def qacf(qcs, maxlag):
    """Sample autocovariances of a crossing matrix, lags 0..maxlag."""
    r = acf_columns(qcs.u, maxlag)
    return QAcf(r=r, alphas=qcs.alphas, n=qcs.n)

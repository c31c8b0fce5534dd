"""Spectrum estimators on frequency grids.

Four estimators of the quantile-crossing spectrum as a function of
(frequency, level): the Tukey-Hanning lag-window estimate from sample
autocovariances, the per-level AR estimate, the AR estimate with spline
post-smoothing of its parameters across levels (AR-S), and the joint spline
autoregression (SAR). All default to the Fourier grid
omega_k = 2*pi*k/n, k = 1..floor((n-1)/2).
"""

from dataclasses import dataclass, field

import numpy as np

from .ar import ArFit, ar_fit_ls, ar_fit_yw, select_order_aic
from .sar import SarModel, sar_fit, sigma2_floor
from .series import qacf
from .spline import SplineBasis, smooth_spline_fit

__all__ = [
    "SpectrumGrid",
    "fourier_freqs",
    "tukey_hanning",
    "spec_lw",
    "spec_ar",
    "spec_ars",
    "spec_sar",
    "eval_spectrum",
]


def fourier_freqs(n):
    """Fourier frequencies 2*pi*k/n for k = 1..floor((n-1)/2)."""
    if n < 3:
        raise ValueError("need n >= 3 for a nonempty Fourier grid")
    k = np.arange(1, (n - 1) // 2 + 1)
    return 2.0 * np.pi * k / n


@dataclass
class SpectrumGrid:
    """Spectrum values on a frequency x quantile-level grid.

    s has shape (len(freqs), len(alphas)); rows follow ascending frequency.
    normalized marks division by alpha*(1-alpha).
    """

    freqs: np.ndarray
    alphas: np.ndarray
    s: np.ndarray
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.s.shape


def tukey_hanning(x):
    """Tukey-Hanning lag window w(x) = 0.5*(1 + cos(pi x)) for |x| <= 1, else 0."""
    x = np.asarray(x, dtype=float)
    w = 0.5 * (1.0 + np.cos(np.pi * x))
    return np.where(np.abs(x) <= 1.0, w, 0.0)


def _normalize(s, alphas):
    return s / (alphas * (1.0 - alphas))[None, :]


def lw_transform(r, m, freqs):
    """Windowed cosine transform of autocovariances r (maxlag+1, L) at freqs."""
    taus = np.arange(1, m + 1)
    w = tukey_hanning(taus / m)
    cosmat = np.cos(np.outer(freqs, taus))
    return r[0][None, :] + 2.0 * cosmat @ (w[:, None] * r[1 : m + 1])


def spec_lw(acf, m, freqs=None, normalized=False):
    """Lag-window spectrum estimate from sample autocovariances.

    S(omega, alpha) = sum_{|tau| <= m} w(tau/m) R(tau, alpha) e^{-i omega tau},
    real by symmetry. m is the bandwidth; requires m <= acf.maxlag.
    """
    if not 1 <= m <= acf.maxlag:
        raise ValueError("bandwidth must satisfy 1 <= M <= maxlag")
    if freqs is None:
        freqs = fourier_freqs(acf.n)
    s = lw_transform(acf.r, m, freqs)
    if normalized:
        s = _normalize(s, acf.alphas)
    return SpectrumGrid(
        freqs=freqs, alphas=acf.alphas, s=s, normalized=normalized, meta={"estimator": "lw", "M": m}
    )


def ar_denominator_sq(coeffs, freqs):
    """|1 - sum_j a_j e^{-i j omega}|^2 evaluated by Horner, shape (F, L)."""
    p, nlev = coeffs.shape
    z = np.exp(-1j * np.asarray(freqs, dtype=float))[:, None]
    # sum_j a_j z^j = (...((a_p z + a_{p-1}) z + a_{p-2}) z ...) z
    acc = np.zeros((len(freqs), nlev), dtype=complex)
    for j in range(p - 1, -1, -1):
        acc = (acc + coeffs[j][None, :]) * z
    a = 1.0 - acc
    return a.real**2 + a.imag**2


def ar_spectrum_values(coeffs, sigma2, freqs):
    """AR transfer-function spectrum sigma2 / |1 - sum a_j e^{-ij omega}|^2."""
    sigma2 = np.asarray(sigma2, dtype=float)
    if coeffs.shape[0] == 0:
        return np.broadcast_to(sigma2, (len(freqs), sigma2.size)).copy()
    den = ar_denominator_sq(coeffs, freqs)
    if den.min() < 1e-12:
        raise ValueError("near-unit-root spectrum")
    return sigma2[None, :] / den


def spec_ar(qcs, p=None, method="ls", pmax=20, freqs=None, normalized=False):
    """Per-level AR spectrum estimate; p = None selects the order by average AIC."""
    if p is None:
        p = select_order_aic(qcs, pmax, method="ls")
    if method == "ls":
        fit = ar_fit_ls(qcs, p)
    elif method == "yw":
        fit = ar_fit_yw(qacf(qcs, p), p)
    else:
        raise ValueError("method must be 'ls' or 'yw'")
    grid = eval_spectrum(fit, freqs=freqs, normalized=normalized)
    grid.meta.update({"estimator": "ar", "p": p, "method": method})
    return grid


def smooth_across_levels(values, alphas, basis=None, lam=None):
    """Smooth one sequence over the level grid; returns fitted values at the grid."""
    fit = smooth_spline_fit(alphas, values, lam=lam, basis=basis)
    return fit.predict(alphas)


def spec_ars(qcs, p=None, pmax=20, basis=None, freqs=None, normalized=False):
    """AR spectrum with spline post-smoothing of the parameters across levels.

    Each coefficient sequence a_j(alpha_l) and the residual variance sequence
    are smoothed independently with GCV-selected lambdas; the smoothed
    variance is floored away from zero before assembling the spectrum.
    """
    alphas = qcs.alphas
    if alphas.size < 4:
        raise ValueError("insufficient quantile levels")
    if p is None:
        p = select_order_aic(qcs, pmax)
    if basis is None:
        basis = SplineBasis.default(alphas[0], alphas[-1])
    fit = ar_fit_ls(qcs, p)
    coeffs = np.empty_like(fit.coeffs)
    for j in range(p):
        coeffs[j] = smooth_across_levels(fit.coeffs[j], alphas, basis)
    sigma2 = np.maximum(
        smooth_across_levels(fit.sigma2, alphas, basis), sigma2_floor(alphas)
    )
    if freqs is None:
        freqs = fourier_freqs(qcs.n)
    s = ar_spectrum_values(coeffs, sigma2, freqs)
    if normalized:
        s = _normalize(s, alphas)
    return SpectrumGrid(
        freqs=freqs,
        alphas=alphas,
        s=s,
        normalized=normalized,
        meta={"estimator": "ars", "p": p},
    )


def spec_sar(qcs, p=None, lam=None, pmax=20, basis=None, freqs=None, normalized=False):
    """Spline-autoregression spectrum estimate (joint fit across levels)."""
    model = sar_fit(qcs, p=p, basis=basis, lam=lam, pmax=pmax)
    grid = eval_spectrum(model, freqs=freqs, normalized=normalized)
    grid.meta.update({"estimator": "sar", "p": model.p, "lambda": model.lam})
    return grid


def eval_spectrum(model, freqs=None, alphas=None, normalized=False):
    """Evaluate a fitted AR-family model on a (frequency, level) grid.

    For an ArFit the levels are fixed at the fitted grid (alphas, if given,
    must match it). A SarModel evaluates anywhere inside its basis interval.
    """
    if freqs is None:
        freqs = fourier_freqs(model.n)
    freqs = np.asarray(freqs, dtype=float)
    if isinstance(model, ArFit):
        if alphas is not None and not np.array_equal(
            np.asarray(alphas, dtype=float), model.alphas
        ):
            raise ValueError("levels must match the fitted grid")
        alphas = model.alphas
        coeffs = model.coeffs
        sigma2 = model.sigma2
    elif isinstance(model, SarModel):
        alphas = model.alphas if alphas is None else np.asarray(alphas, dtype=float)
        coeffs = model.coeffs_at(alphas)
        sigma2 = model.sigma2_at(alphas)
    else:
        raise TypeError("model must be an ArFit or SarModel")
    s = ar_spectrum_values(coeffs, sigma2, freqs)
    if normalized:
        s = _normalize(s, alphas)
    return SpectrumGrid(freqs=freqs, alphas=alphas, s=s, normalized=normalized)

"""Per-quantile autoregressive fitting.

Three pieces: ordinary least squares on lagged crossing values (no
intercept), the Yule-Walker solution via the Levinson-Durbin recursion, and
order selection by the cross-level average of per-level AIC values computed
on a common estimation window so that candidate orders are comparable.
"""

from dataclasses import dataclass

import numpy as np

from .series import acf_columns

__all__ = ["ArFit", "ar_fit_ls", "ar_fit_yw", "levinson", "select_order_aic"]


@dataclass
class ArFit:
    """AR(p) parameters per quantile level.

    coeffs has shape (p, L); sigma2 is the length-L residual (or prediction
    error) variance; n is the underlying series length.
    """

    coeffs: np.ndarray
    sigma2: np.ndarray
    alphas: np.ndarray
    n: int
    method: str

    @property
    def p(self):
        return self.coeffs.shape[0]


def lag_stack(u, p, t0=None):
    """Lagged design tensors for every column of u.

    Returns (z, y) where z[l] is the (n - t0) x p matrix whose row for time t
    is [u_{t-1}, ..., u_{t-p}] and y[l] holds the responses u_t for
    t = t0..n-1 (0-based). t0 defaults to p; passing t0 > p restricts all
    fits to a common window.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    if t0 is None:
        t0 = p
    if not (0 < p <= t0 < n):
        raise ValueError("need 0 < p <= t0 < n")
    sw = np.lib.stride_tricks.sliding_window_view(u, p, axis=0)
    z = sw[t0 - p : n - p, :, ::-1]
    z = np.ascontiguousarray(np.moveaxis(z, 1, 0))
    y = np.ascontiguousarray(u[t0:].T)
    return z, y


def _ls_columns(u, p, t0=None):
    """Columnwise least-squares AR fit; returns (coeffs (p, L), rss (L,))."""
    u = np.asarray(u, dtype=float)
    n, nlev = u.shape
    if t0 is None:
        t0 = p
    yy = np.einsum("ij,ij->j", u[t0:], u[t0:])
    if p == 0:
        return np.zeros((0, nlev)), yy
    z, y = lag_stack(u, p, t0)
    gram = np.einsum("lti,ltj->lij", z, z, optimize=True)
    cross = np.einsum("lti,lt->li", z, y, optimize=True)
    try:
        a = np.linalg.solve(gram, cross[..., None])[..., 0]
    except np.linalg.LinAlgError:
        raise ValueError("singular design in least-squares AR fit") from None
    rss = np.maximum(yy - np.einsum("li,li->l", a, cross), 0.0)
    return a.T, rss


def ar_fit_ls(qcs, p):
    """Least-squares AR(p) fit per quantile level, no intercept.

    sigma2 is RSS/(n - p) over the window t = p+1..n. p = 0 returns the raw
    mean square (divisor n).
    """
    n = qcs.n
    if not 0 <= p < n / 2:
        raise ValueError("order must satisfy 0 <= p < n/2")
    coeffs, rss = _ls_columns(qcs.u, p)
    sigma2 = rss / (n - p)
    return ArFit(coeffs=coeffs, sigma2=sigma2, alphas=qcs.alphas, n=n, method="least-squares")


def levinson(r, p):
    """Levinson-Durbin recursion for the Yule-Walker equations.

    r holds autocovariances at lags 0..p (at least). Returns
    (a, sigma2, sigma2_path) with a the AR(p) coefficients, sigma2 the
    order-p prediction error variance and sigma2_path the variances at
    orders 0..p. Raises if the autocovariance sequence is not positive
    definite (any reflection coefficient reaching 1 in modulus).
    """
    r = np.asarray(r, dtype=float)
    if r.size < p + 1:
        raise ValueError("need autocovariances up to lag p")
    if r[0] <= 0:
        raise ValueError("nonpositive-definite ACF")
    a = np.zeros(p)
    sigma2 = float(r[0])
    path = np.empty(p + 1)
    path[0] = sigma2
    for m in range(1, p + 1):
        acc = r[m] - a[: m - 1] @ r[1:m][::-1]
        kappa = acc / sigma2
        if abs(kappa) >= 1.0:
            raise ValueError("nonpositive-definite ACF")
        prev = a[: m - 1].copy()
        a[: m - 1] = prev - kappa * prev[::-1]
        a[m - 1] = kappa
        sigma2 *= 1.0 - kappa * kappa
        path[m] = sigma2
    return a, sigma2, path


def ar_fit_yw(acf, p):
    """Yule-Walker AR(p) fit per quantile level from sample autocovariances.

    Solves the Toeplitz system by Levinson-Durbin; the resulting fits are
    causal (all reflection coefficients inside the unit disk).
    """
    if p > acf.maxlag:
        raise ValueError("acf does not reach lag p")
    nlev = acf.r.shape[1]
    coeffs = np.zeros((p, nlev))
    sigma2 = np.empty(nlev)
    for l in range(nlev):
        a, s2, _ = levinson(acf.r[:, l], p)
        coeffs[:, l] = a
        sigma2[l] = s2
    return ArFit(coeffs=coeffs, sigma2=sigma2, alphas=acf.alphas, n=acf.n, method="yule-walker")


def aic_table(qcs, pmax, method="ls"):
    """Cross-level average AIC for orders 0..pmax.

    AIC_p = n_eff * log(sigma2_p) + 2p with n_eff = n - pmax. The
    least-squares variant fits every order on the common window
    t = pmax+1..n; the Yule-Walker variant takes the Levinson prediction
    error variances from the full-sample autocovariances.
    """
    n = qcs.n
    if not 0 < pmax < n / 4:
        raise ValueError("pmax must satisfy 0 < pmax < n/4")
    n_eff = n - pmax
    u = qcs.u
    nlev = u.shape[1]
    sig = np.empty((pmax + 1, nlev))
    if method == "ls":
        yy = np.einsum("ij,ij->j", u[pmax:], u[pmax:])
        z, y = lag_stack(u, pmax, pmax)
        gram = np.einsum("lti,ltj->lij", z, z, optimize=True)
        cross = np.einsum("lti,lt->li", z, y, optimize=True)
        sig[0] = yy
        for p in range(1, pmax + 1):
            a = np.linalg.solve(gram[:, :p, :p], cross[:, :p, None])[..., 0]
            sig[p] = np.maximum(yy - np.einsum("li,li->l", a, cross[:, :p]), 0.0)
        sig /= n_eff
    elif method == "yw":
        r = acf_columns(u, pmax)
        for l in range(nlev):
            _, _, path = levinson(r[:, l], pmax)
            sig[:, l] = path
    else:
        raise ValueError("method must be 'ls' or 'yw'")
    with np.errstate(divide="ignore"):
        aic = n_eff * np.log(sig) + 2.0 * np.arange(pmax + 1)[:, None]
    return aic.mean(axis=1)


def select_order_aic(qcs, pmax, method="ls"):
    """Order minimizing the cross-level average AIC; ties go to the smaller p."""
    avg = aic_table(qcs, pmax, method)
    return int(np.argmin(avg))

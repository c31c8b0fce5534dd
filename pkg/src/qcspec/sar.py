"""Spline autoregression: joint penalized least-squares AR fitting across
quantile levels.

The AR coefficient functions a_j(alpha) are expanded in a spline basis of the
quantile level and fitted to all crossing series at once, with a roughness
penalty on their second derivatives controlled by a single smoothing
parameter chosen by GCV. The stacked design has Kronecker structure
X_l = U_l (I_p kron phi(alpha_l))^T, so the normal equations are accumulated
from p x p lag Gram blocks and K x K basis outer products without ever
materializing X_l.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .ar import ar_fit_ls, lag_stack, select_order_aic
from .spline import SmoothFit, SplineBasis, gcv_search, smooth_spline_fit

__all__ = ["SarModel", "sar_solve", "sar_trace_hat", "sar_gcv", "sar_fit", "sigma2_floor"]

KP_CAP = 2000


def sigma2_floor(alphas):
    """Positivity floor for smoothed innovation variances."""
    a = np.asarray(alphas, dtype=float)
    return 1e-6 * a * (1.0 - a)


@dataclass
class SarModel:
    """Fitted spline autoregression.

    theta has shape (p, K): row j holds the basis coefficients of the j-th
    AR coefficient function, so a_j(alpha) = phi(alpha)^T theta[j].
    """

    p: int
    theta: np.ndarray
    basis: SplineBasis
    lam: float
    sigma2_fit: SmoothFit
    gcv_value: float
    edf: float
    alphas: np.ndarray
    n: int

    def coeffs_at(self, alphas):
        """AR coefficient functions evaluated at the given levels, shape (p, m)."""
        b = self.basis.design(alphas)
        return self.theta @ b.T

    def sigma2_at(self, alphas):
        """Smoothed innovation variance, floored away from zero."""
        return np.maximum(self.sigma2_fit.predict(alphas), sigma2_floor(alphas))


class _SarSystem:
    """Precomputed normal-equation blocks for one (crossing matrix, basis, p)."""

    def __init__(self, qcs, basis, p, penalty="gridsum"):
        n = qcs.n
        if n < 8:
            raise ValueError("series too short")
        if not 0 < p < n / 2:
            raise ValueError("order must satisfy 0 < p < n/2")
        kdim = basis.nbasis
        if kdim * p > KP_CAP:
            raise ValueError(f"K*p = {kdim * p} exceeds cap {KP_CAP}")
        self.n = n
        self.p = p
        self.kdim = kdim
        self.nlev = qcs.nlevels
        self.alphas = qcs.alphas

        z, y = lag_stack(qcs.u, p)
        self.c = np.einsum("lti,ltj->lij", z, z, optimize=True)
        self.d = np.einsum("lti,lt->li", z, y, optimize=True)
        self.uu = float(np.einsum("lt,lt->", y, y))
        self.bmat = basis.design(qcs.alphas)

        # Gram of the stacked design: block (j, j') is sum_l C_l[j, j'] phi_l phi_l^T
        p2 = np.einsum("lk,lm->lkm", self.bmat, self.bmat)
        self.gram = np.einsum("ljm,lkq->jkmq", self.c, p2, optimize=True).reshape(
            kdim * p, kdim * p
        )
        self.rhs = np.einsum("lj,lk->jk", self.d, self.bmat).reshape(kdim * p)

        if penalty == "gridsum":
            q = basis.penalty_gridsum(qcs.alphas)
        elif penalty == "integral":
            q = basis.penalty_integral()
        else:
            raise ValueError("penalty must be 'gridsum' or 'integral'")
        self.pen = np.kron(np.eye(p), q)

    def regularized(self, lam):
        if lam < 0:
            raise ValueError("smoothing parameter must be nonnegative")
        return self.gram + (self.n - self.p) * lam * self.pen

    def solve(self, lam):
        """theta (p, K) minimizing the penalized stacked least squares."""
        g = self.regularized(lam)
        try:
            c, low = cho_factor(g, lower=True)
            theta = cho_solve((c, low), self.rhs)
        except np.linalg.LinAlgError:
            # Rank-deficient but consistent systems (degenerate level grids)
            # admit a minimum-norm solution; anything inconsistent is refused.
            theta, *_ = np.linalg.lstsq(g, self.rhs, rcond=None)
            resid = np.linalg.norm(g @ theta - self.rhs)
            if resid > 1e-8 * max(1.0, np.linalg.norm(self.rhs)):
                raise ValueError("singular system; increase lambda") from None
        return theta.reshape(self.p, self.kdim)

    def trace_hat(self, lam):
        """tr(H_lam) via the cyclic identity tr(G^-1 sum_l X_l^T X_l)."""
        g = self.regularized(lam)
        try:
            c, low = cho_factor(g, lower=True)
            return float(np.trace(cho_solve((c, low), self.gram)))
        except np.linalg.LinAlgError:
            raise ValueError("singular system; increase lambda") from None

    def rss(self, theta):
        """Stacked residual sum of squares at coefficients theta (p, K)."""
        a = theta @ self.bmat.T  # (p, L) coefficient values at the grid levels
        t1 = np.einsum("jl,lj->", a, self.d)
        t2 = np.einsum("jl,ljm,ml->", a, self.c, a, optimize=True)
        return max(self.uu - 2.0 * t1 + t2, 0.0)

    def gcv(self, lam):
        nobs = self.nlev * (self.n - self.p)
        tr = self.trace_hat(lam)
        if tr >= nobs:
            raise ValueError("effective df exceeds sample")
        theta = self.solve(lam)
        return (self.rss(theta) / nobs) / (1.0 - tr / nobs) ** 2

    def gcv_or_inf(self, lam):
        try:
            return self.gcv(lam)
        except (ValueError, np.linalg.LinAlgError):
            return np.inf


def sar_solve(qcs, basis, p, lam, penalty="gridsum"):
    """Penalized least-squares AR coefficients across levels.

    Minimizes sum_l ||u_l - X_l theta||^2 + (n-p) * lam * theta^T (I kron Q) theta
    and returns theta with shape (p, K).
    """
    return _SarSystem(qcs, basis, p, penalty).solve(lam)


def sar_trace_hat(qcs, basis, p, lam, penalty="gridsum"):
    """Effective degrees of freedom tr(H_lam) of the joint fit."""
    return _SarSystem(qcs, basis, p, penalty).trace_hat(lam)


def sar_gcv(qcs, basis, p, lam, penalty="gridsum"):
    """GCV score of the joint fit at smoothing parameter lam."""
    return _SarSystem(qcs, basis, p, penalty).gcv(lam)


def sar_fit(qcs, p=None, basis=None, lam=None, pmax=20, penalty="gridsum"):
    """Fit a spline autoregression to a crossing matrix.

    p defaults to the average-AIC minimizer; lam defaults to the GCV
    minimizer over the standard bracket. The innovation variance function is
    the per-level least-squares residual variance smoothed at the same
    lambda (its own GCV choice when p = 0, where no joint fit exists).
    """
    alphas = qcs.alphas
    if basis is None:
        basis = SplineBasis.default(alphas[0], alphas[-1])
    if p is None:
        p = select_order_aic(qcs, pmax)

    if p == 0:
        theta = np.zeros((0, basis.nbasis))
        lam_star = 0.0 if lam is None else float(lam)
        gcv_value = np.nan
        edf = 0.0
    else:
        system = _SarSystem(qcs, basis, p, penalty)
        if lam is None:
            lam_star, gcv_value = gcv_search(system.gcv_or_inf)
        else:
            lam_star = float(lam)
            gcv_value = system.gcv_or_inf(lam_star)
        theta = system.solve(lam_star)
        edf = system.trace_hat(lam_star)

    resid_var = ar_fit_ls(qcs, p).sigma2
    if alphas.size >= 4:
        sig_lam = None if p == 0 and lam is None else lam_star
        sigma2_fit = smooth_spline_fit(
            alphas, resid_var, lam=sig_lam, basis=basis, penalty=penalty
        )
    else:
        # degenerate level grids: interpolate the residual variances
        coeffs, *_ = np.linalg.lstsq(basis.design(alphas), resid_var, rcond=None)
        sigma2_fit = SmoothFit(
            basis=basis, coeffs=coeffs, lam=0.0, gcv_value=np.nan, edf=float(alphas.size)
        )

    return SarModel(
        p=p,
        theta=theta,
        basis=basis,
        lam=lam_star,
        sigma2_fit=sigma2_fit,
        gcv_value=float(gcv_value),
        edf=float(edf),
        alphas=alphas,
        n=qcs.n,
    )

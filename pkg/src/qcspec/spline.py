"""B-spline bases, second-derivative roughness penalties, and penalized
least-squares smoothing with GCV-selected smoothing parameter.

The basis is a clamped B-spline family on a closed interval. Penalties come
in two flavors: the exact integral of products of second derivatives
(Gauss-Legendre per knot span, exact for piecewise polynomials) and a grid
sum of second-derivative outer products evaluated at given points.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BSpline
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "SplineBasis",
    "SmoothFit",
    "smooth_spline_fit",
    "golden_section_min",
    "gcv_search",
    "LAMBDA_BRACKET",
]

# lambda search bracket and scan size shared by every GCV-driven selection
LAMBDA_BRACKET = (1e-9, 1e3)
_COARSE_POINTS = 25
_GOLDEN_TOL = 1e-4

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SplineBasis:
    """Clamped B-spline basis on [lo, hi].

    The number of basis functions is K = len(interior_knots) + degree + 1.
    Boundary knots are repeated degree + 1 times so the basis interpolates
    the endpoints (first function equals 1 at lo, last equals 1 at hi).
    """

    def __init__(self, lo, hi, interior_knots=(), degree=3):
        lo = float(lo)
        hi = float(hi)
        if not lo < hi:
            raise ValueError("basis interval must have lo < hi")
        interior = np.asarray(interior_knots, dtype=float)
        if interior.size and not (
            np.all(np.diff(interior) > 0)
            and interior[0] > lo
            and interior[-1] < hi
        ):
            raise ValueError("interior knots must be increasing inside (lo, hi)")
        if degree < 1:
            raise ValueError("degree must be at least 1")
        self.lo = lo
        self.hi = hi
        self.degree = int(degree)
        self.interior_knots = interior
        self.knots = np.concatenate(
            [np.full(degree + 1, lo), interior, np.full(degree + 1, hi)]
        )
        self.nbasis = interior.size + degree + 1

    @classmethod
    def default(cls, lo, hi, n_interior=10, degree=3):
        """Cubic basis with equally spaced interior knots (K = n_interior + 4)."""
        interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
        return cls(lo, hi, interior, degree)

    @classmethod
    def with_dimension(cls, lo, hi, nbasis, degree=3):
        """Basis of a requested dimension via equally spaced interior knots."""
        n_interior = int(nbasis) - degree - 1
        if n_interior < 0:
            raise ValueError("nbasis must be at least degree + 1")
        return cls.default(lo, hi, n_interior, degree)

    @classmethod
    def interpolating(cls, x, degree=3):
        """Basis with knots at the interior sample points (K = len(x) + degree - 1).

        With K >= len(x) this basis can reproduce any values on the grid x,
        which is what the vanishing-penalty limit of penalized fits needs.
        """
        x = np.asarray(x, dtype=float)
        if x.size < 2 or not np.all(np.diff(x) > 0):
            raise ValueError("need at least two strictly increasing points")
        return cls(x[0], x[-1], x[1:-1], degree)

    def design(self, x):
        """Design matrix of basis values, shape (len(x), K)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size and (x.min() < self.lo or x.max() > self.hi):
            raise ValueError("out of domain")
        return BSpline.design_matrix(x, self.knots, self.degree).toarray()

    def design_deriv2(self, x):
        """Second-derivative design matrix, shape (len(x), K)."""
        if self.degree < 2:
            raise ValueError("penalty undefined: degree < 2")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size and (x.min() < self.lo or x.max() > self.hi):
            raise ValueError("out of domain")
        spl = BSpline(self.knots, np.eye(self.nbasis), self.degree)
        return spl.derivative(2)(x)

    def basis_eval(self, alpha):
        """Basis vector phi(alpha) of length K; entries are nonnegative and sum to 1."""
        return self.design([float(alpha)])[0]

    def greville(self):
        """Greville abscissae; coefficients c = a + b * greville() represent a + b*x."""
        k = self.degree
        t = self.knots
        return np.array(
            [t[i + 1 : i + k + 1].mean() for i in range(self.nbasis)]
        )

    def penalty_integral(self):
        """Exact integral penalty Q[k, k'] = int phi_k'' phi_k'' over [lo, hi].

        Gauss-Legendre per knot span; the integrand is a polynomial of degree
        2*(degree - 2) on each span, so `degree` nodes are exact.
        """
        if self.degree < 2:
            raise ValueError("penalty undefined: degree < 2")
        nodes, weights = leggauss(max(self.degree, 2))
        spans = np.unique(self.knots)
        q = np.zeros((self.nbasis, self.nbasis))
        for a, b in zip(spans[:-1], spans[1:]):
            half = 0.5 * (b - a)
            x = a + half * (nodes + 1.0)
            d2 = self.design_deriv2(x)
            q += (d2 * (half * weights)[:, None]).T @ d2
        return q

    def penalty_gridsum(self, x):
        """Grid-sum penalty Q = sum_l phi''(x_l) phi''(x_l)^T."""
        d2 = self.design_deriv2(x)
        return d2.T @ d2


@dataclass
class SmoothFit:
    """Penalized least-squares spline fit of values on a grid."""

    basis: SplineBasis
    coeffs: np.ndarray
    lam: float
    gcv_value: float
    edf: float

    def predict(self, x):
        return self.basis.design(x) @ self.coeffs


def golden_section_min(f, lo, hi, tol=_GOLDEN_TOL):
    """Golden-section minimizer on [lo, hi]; returns (x, f(x)).

    Deterministic; stops when the bracket width drops below tol.
    """
    a, b = float(lo), float(hi)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    c = b - _INV_PHI * h
    d = a + _INV_PHI * h
    fc, fd = f(c), f(d)
    while h > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - _INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INV_PHI * h
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def gcv_search(score, bracket=LAMBDA_BRACKET, npoints=_COARSE_POINTS, tol=_GOLDEN_TOL):
    """Minimize score(lam) over a log-spaced bracket.

    A coarse scan (first minimum wins on ties) brackets the optimum, then
    golden-section search refines it on the log scale to relative tolerance
    tol. score may return inf to mark infeasible values.
    """
    grid = np.logspace(math.log10(bracket[0]), math.log10(bracket[1]), npoints)
    vals = np.array([score(l) for l in grid])
    if not np.any(np.isfinite(vals)):
        raise ValueError("GCV search failed: no feasible smoothing parameter")
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, npoints - 1)]
    t, v = golden_section_min(lambda t: score(math.exp(t)), math.log(lo), math.log(hi), tol)
    lam = math.exp(t)
    if vals[i] < v:
        return float(grid[i]), float(vals[i])
    return float(lam), float(v)


def _penalized_solve(btb, bty, q, lam):
    """Solve (B^T B + lam Q) c = B^T y; returns (coeffs, edf)."""
    g = btb + lam * q
    c, low = cho_factor(g, lower=True)
    coeffs = cho_solve((c, low), bty)
    edf = float(np.trace(cho_solve((c, low), btb)))
    return coeffs, edf


def smooth_spline_fit(x, y, lam=None, basis=None, penalty="integral"):
    """Fit a penalized spline to (x, y): minimize ||y - B c||^2 + lam c^T Q c.

    Parameters
    ----------
    x : strictly increasing grid, at least 4 points
    y : values at the grid
    lam : smoothing parameter >= 0, or None for GCV-auto selection over a
        log-spaced bracket followed by golden-section refinement
    basis : SplineBasis; default is a cubic basis with 10 interior knots on
        [x[0], x[-1]]
    penalty : "integral" (exact) or "gridsum" (sum over the grid points)

    Returns a SmoothFit. GCV(lam) = n * RSS / (n - tr H)^2 with n = len(x).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.size < 4 or not np.all(np.diff(x) > 0):
        raise ValueError("grid must be strictly increasing with at least 4 points")
    if y.shape != x.shape:
        raise ValueError("x and y must have the same length")
    if basis is None:
        basis = SplineBasis.default(x[0], x[-1])
    if penalty == "integral":
        q = basis.penalty_integral()
    elif penalty == "gridsum":
        q = basis.penalty_gridsum(x)
    else:
        raise ValueError("penalty must be 'integral' or 'gridsum'")

    b = basis.design(x)
    btb = b.T @ b
    bty = b.T @ y
    n = x.size

    def rss_of(coeffs):
        resid = y - b @ coeffs
        return float(resid @ resid)

    def gcv_of(lam_):
        try:
            coeffs, edf = _penalized_solve(btb, bty, q, lam_)
        except np.linalg.LinAlgError:
            return np.inf
        denom = n - edf
        if denom <= 1e-9:
            return np.inf
        return n * rss_of(coeffs) / denom**2

    if lam is None:
        lam, _ = gcv_search(gcv_of)
    lam = float(lam)
    if lam < 0:
        raise ValueError("smoothing parameter must be nonnegative")
    if lam == 0 and basis.nbasis > n:
        raise ValueError("underdetermined; supply lambda>0")
    try:
        coeffs, edf = _penalized_solve(btb, bty, q, lam)
    except np.linalg.LinAlgError:
        if lam == 0:
            raise ValueError("underdetermined; supply lambda>0") from None
        raise ValueError("singular smoothing system") from None
    denom = n - edf
    gcv_value = n * rss_of(coeffs) / denom**2 if denom > 1e-9 else np.inf
    return SmoothFit(basis=basis, coeffs=coeffs, lam=lam, gcv_value=float(gcv_value), edf=edf)

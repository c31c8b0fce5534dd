"""Quantile-crossing spectrum estimation for stationary time series.

Build quantile-crossing series over a grid of levels, estimate their
spectrum as a bivariate function of frequency and quantile level
(lag-window, per-level AR, AR with spline post-smoothing, and joint spline
autoregression), simulate benchmark processes with known truth surfaces,
and score estimates by spectral divergence.
"""

from .ar import ArFit, ar_fit_ls, ar_fit_yw, levinson, select_order_aic
from .evaluate import (
    DEFAULT_ALPHAS,
    EstimatorSpec,
    EvalReport,
    estimate_spectrum,
    floor_spectrum,
    kld,
    rmse,
    run_monte_carlo,
    sweep_parameter,
)
from .sar import SarModel, sar_fit, sar_gcv, sar_solve, sar_trace_hat
from .series import QAcf, QcsMatrix, qacf, qcser, sample_quantile
from .simulate import (
    CASE1_COEFFS,
    SimSpec,
    TruthGrid,
    bvn_cdf,
    generate,
    truth_gaussian,
    truth_mc,
)
from .spectrum import (
    SpectrumGrid,
    eval_spectrum,
    fourier_freqs,
    spec_ar,
    spec_ars,
    spec_lw,
    spec_sar,
    tukey_hanning,
)
from .spline import SmoothFit, SplineBasis, smooth_spline_fit

__version__ = "0.1.0"

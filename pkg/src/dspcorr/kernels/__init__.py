"""Hot numeric kernels with a compiled (numba) and a pure numpy implementation.

The active implementation is chosen once at import from ``DSPCORR_BACKEND``;
both modules stay importable for benchmarking and cross-checking.

Kernels
-------
banded_precision_sample(ab, lin, z)
    Batched draw from N(Q^{-1} lin, Q^{-1}) for banded precision ``Q`` stored in
    lower band form ``ab[k, d, j] = Q[j + d, j]``. The draw is affine in the
    standard normal input ``z``; ``z = 0`` returns the mean.
ffbs_random_walk2(y, x, obs_var, q, m0, p0, z)
    Forward-filter backward-sample for a bivariate random walk state
    (intercept, slope) observed through ``y_t = s1 + s2 * x_t + e_t``.
mixture_indicators(resid, u, log_w, means, variances)
    Inverse-CDF draw of normal-mixture component indices given residuals.
polya_gamma_1(c, rng)
    PG(1, c) draws by Devroye's alternating-series sampler.
garch_variance(e2, omega, alpha, beta, s0)
    GARCH(1,1) conditional variance recursion.
dcc_correlation(z, a, b, g, sbar, nbar)
    (A)DCC(1,1) correlation path from standardized residuals.
corr_logdet(Rs, tol)
    Batched log-determinant by Cholesky pivots, ``-inf`` when a pivot < tol.
"""
from __future__ import annotations

from dspcorr._backend import backend_name
from dspcorr.kernels import _numpy

BACKEND = backend_name()

if BACKEND == "numba":
    from dspcorr.kernels import _numba as _impl
else:
    _impl = _numpy

banded_precision_sample = _impl.banded_precision_sample
ffbs_random_walk2 = _impl.ffbs_random_walk2
mixture_indicators = _impl.mixture_indicators
polya_gamma_1 = _impl.polya_gamma_1
garch_variance = _impl.garch_variance
dcc_correlation = _impl.dcc_correlation
corr_logdet = _impl.corr_logdet

__all__ = [
    "BACKEND",
    "banded_precision_sample",
    "corr_logdet",
    "dcc_correlation",
    "ffbs_random_walk2",
    "garch_variance",
    "mixture_indicators",
    "polya_gamma_1",
]

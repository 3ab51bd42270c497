"""Constant-mean GARCH(1,1) margins by Gaussian quasi-maximum likelihood."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import expit, logit

from dspcorr import kernels

MIN_T = 100
_LOG2PI = math.log(2.0 * math.pi)


class GarchFitError(ValueError):
    """Degenerate input or failed optimization."""


@dataclass(frozen=True)
class GarchFit:
    mean: float
    omega: float
    arch: float
    garch: float
    loglik: float

    def variance(self, x: np.ndarray) -> np.ndarray:
        e = np.asarray(x, dtype=float) - self.mean
        return kernels.garch_variance(e * e, self.omega, self.arch, self.garch, float(np.var(x)))

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / np.sqrt(self.variance(x))


def _unpack(theta, scale2):
    # persistence p = arch + garch in (0, 1); share = arch / p in (0, 1)
    mu, log_omega, u_p, u_s = theta
    p = expit(u_p)
    share = expit(u_s)
    return mu, scale2 * math.exp(log_omega), p * share, p * (1.0 - share)


def _negloglik(theta, x, s0, scale2):
    mu, omega, a, b = _unpack(theta, scale2)
    e = x - mu
    e2 = e * e
    s = kernels.garch_variance(e2, omega, a, b, s0)
    if not np.all(s > 0) or not np.all(np.isfinite(s)):
        return 1e100
    return 0.5 * float(np.sum(_LOG2PI + np.log(s) + e2 / s))


def garch11_fit(series, starts=((0.90, 0.10), (0.97, 0.05), (0.60, 0.30), (0.30, 0.50))) -> GarchFit:
    """QML fit of ``x_t = mean + e_t``, ``s_t = omega + arch e_{t-1}^2 + garch s_{t-1}``.

    The variance recursion starts at the sample variance. Each start is a
    ``(persistence, arch share)`` pair; ``omega`` starts at the value that
    matches the sample variance. The best L-BFGS-B optimum is returned.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.shape[0] < MIN_T:
        raise GarchFitError(f"need a 1-d series with at least {MIN_T} observations")
    if not np.all(np.isfinite(x)):
        raise GarchFitError("series has non-finite values")
    s0 = float(np.var(x))
    if not s0 > 1e-14 * max(1.0, float(np.mean(x * x))):
        raise GarchFitError("series is (numerically) constant")
    best = None
    for p, share in starts:
        theta0 = np.array([float(np.mean(x)), math.log(1.0 - p), logit(p), logit(share)])
        res = optimize.minimize(_negloglik, theta0, args=(x, s0, s0), method="L-BFGS-B",
                                bounds=[(None, None), (-30.0, 5.0), (-12.0, 12.0), (-15.0, 15.0)])
        if np.isfinite(res.fun) and res.fun < 1e99 and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise GarchFitError("optimizer failed from every start")
    mu, omega, a, b = _unpack(best.x, s0)
    return GarchFit(float(mu), float(omega), float(a), float(b), -float(best.fun))


def simulate_garch(T: int, omega: float, arch: float, garch: float, rng: np.random.Generator,
                   mean: float = 0.0, burn: int = 500) -> np.ndarray:
    """Gaussian GARCH(1,1) path started at the unconditional variance."""
    if arch + garch >= 1.0:
        raise ValueError("arch + garch must be below one")
    n = T + burn
    z = rng.standard_normal(n)
    x = np.empty(n)
    s = omega / (1.0 - arch - garch)
    for t in range(n):
        x[t] = math.sqrt(s) * z[t]
        s = omega + arch * x[t] ** 2 + garch * s
    return mean + x[burn:]

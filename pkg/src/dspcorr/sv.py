"""Univariate stochastic volatility with Gaussian AR(1) log-variance.

Model, for each of ``k`` independent processes::

    y_t = exp(h_t / 2) e_t,                 e_t ~ N(0, 1)
    h_t = mu + phi (h_{t-1} - mu) + sigma eta_t,  eta_t ~ N(0, 1)
    h_1 ~ N(mu, sigma2 / (1 - phi^2))

The likelihood is linearized with ``ystar = log(y^2 + 1e-12)`` and the
10-component normal mixture approximation to the log-chi-square(1) law, so
that given mixture indicators the path ``h`` is a Gaussian Markov random field
drawn in one banded Cholesky solve. All functions are batched over processes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from dspcorr import kernels
from dspcorr._slice import slice_sample

LOG_OFFSET = 1e-12

# Omori, Chib, Shephard and Nakajima (2007) 10-component mixture for log chi^2_1
MIX_WEIGHTS = np.array([0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                        0.18842, 0.12047, 0.05591, 0.01575, 0.00115])
MIX_MEANS = np.array([1.92677, 1.34744, 0.73504, 0.02266, -0.85173,
                      -1.97278, -3.46788, -5.55246, -8.68384, -14.65000])
MIX_VARS = np.array([0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                     0.98583, 1.57469, 2.54498, 4.16591, 7.33342])
MIX_LOG_WEIGHTS = np.log(MIX_WEIGHTS)


def log_square(y: np.ndarray) -> np.ndarray:
    """``log(y^2 + 1e-12)``: auxiliary observation for log-variance samplers."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite value in volatility observation")
    return np.log(y * y + LOG_OFFSET)


def mixture_probabilities(resid: np.ndarray) -> np.ndarray:
    """Exact conditional component probabilities for residuals ``ystar - h``."""
    resid = np.asarray(resid, dtype=float)
    d = resid[..., None] - MIX_MEANS
    lp = MIX_LOG_WEIGHTS - 0.5 * np.log(MIX_VARS) - 0.5 * d * d / MIX_VARS
    lp -= lp.max(axis=-1, keepdims=True)
    w = np.exp(lp)
    return w / w.sum(axis=-1, keepdims=True)


def draw_indicators(resid: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Component indices (0-based) for residuals of any shape."""
    resid = np.asarray(resid, dtype=float)
    flat = np.ascontiguousarray(resid.ravel())
    u = rng.random(flat.size)
    out = kernels.mixture_indicators(flat, u, MIX_LOG_WEIGHTS, MIX_MEANS, MIX_VARS)
    return out.reshape(resid.shape)


@dataclass(frozen=True)
class SvPrior:
    """Priors ``mu ~ N(mu_mean, mu_var)``, ``(phi+1)/2 ~ Beta(phi_a, phi_b)``,
    ``sigma2 ~ Ga(s_shape, rate=s_rate)``."""

    mu_mean: float = 0.0
    mu_var: float = 100.0
    phi_a: float = 10.0
    phi_b: float = 3.0
    s_shape: float = 0.5
    s_rate: float = 0.5

    def __post_init__(self):
        if min(self.mu_var, self.phi_a, self.phi_b, self.s_shape, self.s_rate) <= 0:
            raise ValueError("SV prior constants must be positive")


@dataclass
class SvParams:
    """Parameters of ``k`` SV processes, one entry per process."""

    mu: np.ndarray
    phi: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        self.phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        self.sigma2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        if np.any(np.abs(self.phi) >= 1.0):
            raise ValueError("SV persistence must lie in (-1, 1)")
        if np.any(~(self.sigma2 > 0.0)):
            raise ValueError("SV innovation variance must be positive")

    def copy(self) -> "SvParams":
        return SvParams(self.mu.copy(), self.phi.copy(), self.sigma2.copy())


@dataclass
class SvPath:
    """Log-variance paths ``h`` (k, T) and 0-based mixture indicators ``mix``."""

    h: np.ndarray
    mix: np.ndarray

    def __post_init__(self):
        self.h = np.atleast_2d(np.asarray(self.h, dtype=float))
        self.mix = np.atleast_2d(np.asarray(self.mix, dtype=np.int64))
        if self.h.shape != self.mix.shape:
            raise ValueError("h and mix must share shape (k, T)")
        if not np.all(np.isfinite(self.h)):
            raise ValueError("SV path has non-finite entries")

    def copy(self) -> "SvPath":
        return SvPath(self.h.copy(), self.mix.copy())


def sample_mixture_indicators(ystar: np.ndarray, path: SvPath, rng: np.random.Generator) -> SvPath:
    """Refresh the indicators from their exact discrete conditional given ``h``."""
    ystar = np.atleast_2d(ystar)
    return SvPath(path.h, draw_indicators(ystar - path.h, rng))


def path_system(ystar: np.ndarray | None, params: SvParams, mix: np.ndarray, T: int):
    """Lower-banded precision and linear term of ``x = h - mu`` given indicators.

    ``ystar=None`` gives the prior (no observation term).
    """
    k = params.mu.shape[0]
    phi = params.phi[:, None]
    inv_s = 1.0 / params.sigma2[:, None]
    ab = np.zeros((k, 2, T))
    ab[:, 0, :] = (1.0 + phi * phi) * inv_s
    ab[:, 0, 0] = inv_s[:, 0]
    ab[:, 0, -1] = inv_s[:, 0]
    ab[:, 1, : T - 1] = -phi * inv_s
    lin = np.zeros((k, T))
    if ystar is not None:
        v = MIX_VARS[mix]
        ab[:, 0, :] += 1.0 / v
        lin = (np.atleast_2d(ystar) - MIX_MEANS[mix] - params.mu[:, None]) / v
    return ab, lin


def sv_path_draw(ystar, params: SvParams, mix: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Deterministic map from standard normals ``z`` to a conditional path draw.

    ``z = 0`` returns the conditional mean; the draw is affine in ``z``.
    """
    k, T = z.shape
    ab, lin = path_system(ystar, params, mix, T)
    x = kernels.banded_precision_sample(ab, lin, np.ascontiguousarray(z))
    return params.mu[:, None] + x


def sample_sv_path(ystar, params: SvParams, path: SvPath, rng: np.random.Generator) -> SvPath:
    """Exact draw of ``h`` given indicators; ``ystar=None`` draws from the prior."""
    z = rng.standard_normal(path.h.shape)
    return SvPath(sv_path_draw(ystar, params, path.mix, z), path.mix)


def _ar_stats(h: np.ndarray, mu: np.ndarray):
    x = h - mu[:, None]
    x0 = x[:, :-1]
    x1 = x[:, 1:]
    return x[:, 0], (x0 * x0).sum(1), (x0 * x1).sum(1), (x1 * x1).sum(1)


def sample_sv_mu(h: np.ndarray, params: SvParams, prior: SvPrior, rng: np.random.Generator) -> SvParams:
    """Exact Gaussian draw of ``mu`` given paths ``h`` (k, T), ``phi`` and ``sigma2``."""
    k, T = h.shape
    phi, sigma2 = params.phi, params.sigma2
    one_m = 1.0 - phi
    prec = ((1.0 - phi * phi) + (T - 1) * one_m * one_m) / sigma2 + 1.0 / prior.mu_var
    lin = ((1.0 - phi * phi) * h[:, 0] + one_m * (h[:, 1:] - phi[:, None] * h[:, :-1]).sum(1)) / sigma2
    lin += prior.mu_mean / prior.mu_var
    mu = lin / prec + rng.standard_normal(k) / np.sqrt(prec)
    return SvParams(mu, phi.copy(), sigma2.copy())


def sample_sv_phi(h: np.ndarray, params: SvParams, prior: SvPrior, rng: np.random.Generator) -> SvParams:
    """Slice step for ``phi`` on ``u = (phi + 1) / 2`` with the stationary start included."""
    sigma2 = params.sigma2
    x_first, s00, s01, s11 = _ar_stats(h, params.mu)

    def logp(u, idx):
        with np.errstate(divide="ignore", invalid="ignore"):
            p = 2.0 * u - 1.0
            one = 1.0 - p * p
            ll = 0.5 * np.log(one) - (one * x_first[idx] ** 2
                                      + s11[idx] - 2.0 * p * s01[idx] + p * p * s00[idx]) / (2.0 * sigma2[idx])
            lp = (prior.phi_a - 1.0) * np.log(u) + (prior.phi_b - 1.0) * np.log1p(-u)
            out = ll + lp
        return np.where((u > 0.0) & (u < 1.0), out, -np.inf)

    u = slice_sample(logp, 0.5 * (params.phi + 1.0), rng, width=0.1, lower=0.0, upper=1.0)
    return SvParams(params.mu.copy(), 2.0 * u - 1.0, sigma2.copy())


def sample_sv_sigma2(h: np.ndarray, params: SvParams, prior: SvPrior, rng: np.random.Generator) -> SvParams:
    """Exact generalized-inverse-Gaussian draw of ``sigma2``."""
    T = h.shape[1]
    phi = params.phi
    x_first, s00, s01, s11 = _ar_stats(h, params.mu)
    S = (1.0 - phi * phi) * x_first**2 + s11 - 2.0 * phi * s01 + phi * phi * s00
    sigma2 = sample_gig(prior.s_shape - 0.5 * T, 2.0 * prior.s_rate, S, rng)
    return SvParams(params.mu.copy(), phi.copy(), sigma2)


def sample_sv_params(path: SvPath, params: SvParams, prior: SvPrior, rng: np.random.Generator) -> SvParams:
    """One Gibbs pass over ``(mu, phi, sigma2)`` given the log-variance paths.

    ``mu`` is an exact Gaussian draw, ``phi`` a slice step on ``(phi+1)/2``, and
    ``sigma2`` an exact generalized-inverse-Gaussian draw.
    """
    params = sample_sv_mu(path.h, params, prior, rng)
    params = sample_sv_phi(path.h, params, prior, rng)
    return sample_sv_sigma2(path.h, params, prior, rng)


def sample_gig(p, a, b, rng: np.random.Generator) -> np.ndarray:
    """Draws from GIG with density proportional to ``x^(p-1) exp(-(a x + b / x) / 2)``."""
    p, a, b = np.broadcast_arrays(np.asarray(p, float), np.asarray(a, float), np.asarray(b, float))
    shape = p.shape
    b = np.maximum(b, 1e-300)
    if np.any(a <= 0.0):
        raise ValueError("GIG rate parameter a must be positive")
    p, a, b = p.ravel(), a.ravel(), b.ravel()
    out = np.empty(p.size)
    omega = np.sqrt(a * b)
    small = omega < 1e-8
    if np.any(small):
        # sqrt(a b) -> 0: for p > 0 the b / x term is negligible (Gamma(p, rate a / 2));
        # for p < 0 the a x term is (inverse Gamma(-p, scale b / 2))
        if np.any(p[small] == 0.0):
            raise ValueError("degenerate GIG with p = 0 and sqrt(a b) -> 0")
        pos = small & (p > 0.0)
        neg = small & (p < 0.0)
        out[pos] = rng.gamma(p[pos], 2.0 / a[pos])
        out[neg] = 0.5 * b[neg] / rng.gamma(-p[neg])
    big = ~small
    if np.any(big):
        out[big] = stats.geninvgauss.rvs(p[big], omega[big], scale=np.sqrt(b[big] / a[big]),
                                         random_state=rng)
    return np.maximum(out, 1e-300).reshape(shape)


def simulate_sv(params: SvParams, T: int, rng: np.random.Generator) -> np.ndarray:
    """Forward simulation of ``k`` log-variance paths from the stationary start."""
    k = params.mu.shape[0]
    sd = np.sqrt(params.sigma2)
    x = np.empty((k, T))
    x[:, 0] = rng.standard_normal(k) * sd / np.sqrt(1.0 - params.phi**2)
    for t in range(1, T):
        x[:, t] = params.phi * x[:, t - 1] + sd * rng.standard_normal(k)
    return params.mu[:, None] + x


def update_sv(y, params: SvParams, path: SvPath, prior: SvPrior, rng: np.random.Generator,
              use_data: bool = True) -> tuple[SvParams, SvPath]:
    """Indicators, path and parameters for ``k`` processes with observations ``y`` (k, T)."""
    ystar = log_square(np.atleast_2d(y)) if use_data else None
    if use_data:
        path = sample_mixture_indicators(ystar, path, rng)
    path = sample_sv_path(ystar, params, path, rng)
    params = sample_sv_params(path, params, prior, rng)
    return params, path


__all__ = [
    "LOG_OFFSET", "MIX_MEANS", "MIX_VARS", "MIX_WEIGHTS", "SvParams", "SvPath", "SvPrior",
    "draw_indicators", "log_square", "mixture_probabilities", "path_system",
    "sample_gig", "sample_mixture_indicators", "sample_sv_mu", "sample_sv_params", "sample_sv_path",
    "sample_sv_phi", "sample_sv_sigma2",
    "simulate_sv", "sv_path_draw", "update_sv",
]

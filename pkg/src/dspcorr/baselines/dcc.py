"""DCC(1,1) correlation models on GARCH(1,1)-standardized residuals.

Flavors
-------
gaussian
    Gaussian second-stage quasi-likelihood.
student
    Standardized multivariate Student-t with ``df > 2`` (profiled over a log
    grid of ``df - 2``, then refined jointly).
asymmetric
    Gaussian ADCC: ``Q_t = (1-a-b) S - g Nbar + a z z' + g n n' + b Q_{t-1}``
    with ``n = min(z, 0)`` and ``Nbar`` the sample mean of ``n n'``.

Margins are fitted to the asset columns only; the market series is unused.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import expit, gammaln, softmax

from dspcorr import kernels
from dspcorr.baselines._path import WARMUP, BaselinePath, path_from_corr
from dspcorr.baselines.garch import GarchFit, garch11_fit
from dspcorr.panel import ReturnPanel

FLAVORS = ("gaussian", "student", "asymmetric")
_MAX_PERSIST = 0.9995


class DccFitError(ValueError):
    """Second-stage estimation failed."""


@dataclass(frozen=True)
class DccParams:
    a: float
    b: float
    g: float = 0.0
    df: float = math.inf
    loglik: float = math.nan


def standardized_residuals(x: np.ndarray) -> tuple[np.ndarray, list[GarchFit]]:
    fits = [garch11_fit(x[:, j]) for j in range(x.shape[1])]
    z = np.column_stack([f.standardize(x[:, j]) for j, f in enumerate(fits)])
    return z, fits


def _targets(z):
    S = np.corrcoef(z, rowvar=False)
    S = np.atleast_2d(S)
    n = np.minimum(z, 0.0)
    Nbar = n.T @ n / z.shape[0]
    return S, Nbar


def _asym_bound(S, Nbar) -> float:
    """Largest eigenvalue of ``S^{-1/2} Nbar S^{-1/2}`` (stationarity weight of ``g``)."""
    L = np.linalg.cholesky(S)
    M = np.linalg.solve(L, np.linalg.solve(L, Nbar).T)
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[-1])


def dcc_path(z: np.ndarray, params: DccParams, S: np.ndarray, Nbar: np.ndarray) -> np.ndarray:
    """(T, N, N) correlation path, ``Q_1 = S``."""
    return kernels.dcc_correlation(np.ascontiguousarray(z), params.a, params.b, params.g, S, Nbar)


def _quad_logdet(z, R):
    L = np.linalg.cholesky(R)
    w = np.linalg.solve(L, z[..., None])[..., 0]
    q = np.sum(w * w, axis=1)
    logdet = 2.0 * np.sum(np.log(np.einsum("tii->ti", L)), axis=1)
    return q, logdet


def dcc_loglik(z, params: DccParams, S, Nbar) -> float:
    """Second-stage log-likelihood of standardized residuals ``z`` (T, N)."""
    R = dcc_path(z, params, S, Nbar)
    q, logdet = _quad_logdet(z, R)
    N = z.shape[1]
    if math.isinf(params.df):
        return float(-0.5 * np.sum(logdet + q - np.sum(z * z, axis=1)))
    nu = params.df
    c = gammaln(0.5 * (nu + N)) - gammaln(0.5 * nu) - 0.5 * N * math.log(math.pi * (nu - 2.0))
    return float(np.sum(c - 0.5 * logdet - 0.5 * (nu + N) * np.log1p(q / (nu - 2.0))))


def _unpack(theta, flavor, kappa):
    s = _MAX_PERSIST * expit(theta[0])
    if flavor == "asymmetric":
        w = softmax(np.array([theta[1], theta[2], 0.0]))
        a, b, gk = s * w[0], s * w[1], s * w[2]
        return DccParams(a, b, gk / kappa if kappa > 0 else 0.0)
    share = expit(theta[1])
    a, b = s * share, s * (1.0 - share)
    if flavor == "student":
        return DccParams(a, b, df=2.0 + math.exp(theta[2]))
    return DccParams(a, b)


def _fit_params(z, flavor, S, Nbar):
    kappa = _asym_bound(S, Nbar) if flavor == "asymmetric" else 0.0

    def nll(theta):
        try:
            v = -dcc_loglik(z, _unpack(theta, flavor, kappa), S, Nbar)
        except np.linalg.LinAlgError:
            return 1e100
        return v if np.isfinite(v) else 1e100

    # starting points: persistence around 0.97 with a small news weight
    base = [np.log(0.97 / (_MAX_PERSIST - 0.97))]
    if flavor == "asymmetric":
        # softmax logits of (a, b, g * kappa) relative to the last weight
        starts = [np.array(base + [math.log(3.0), math.log(94.0)]), np.array(base + [-2.0, 2.0])]
    elif flavor == "student":
        grid = np.log(np.array([2.0, 4.0, 8.0, 16.0, 32.0]))
        theta_ab = np.array(base + [math.log(0.03 / 0.97)])
        prof = [nll(np.append(theta_ab, g)) for g in grid]
        starts = [np.append(theta_ab, grid[int(np.argmin(prof))])]
    else:
        starts = [np.array(base + [math.log(0.03 / 0.97)]), np.array(base + [math.log(0.1 / 0.9)])]
    best = None
    for th in starts:
        res = optimize.minimize(nll, th, method="L-BFGS-B", bounds=[(-12, 12)] * len(th))
        if res.fun < 1e99 and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise DccFitError(f"{flavor} DCC: optimizer failed from every start")
    p = _unpack(best.x, flavor, kappa)
    return DccParams(float(p.a), float(p.b), float(p.g), float(p.df), -float(best.fun))


def dcc_fit(panel: ReturnPanel, flavor: str = "gaussian", params: DccParams | None = None) -> BaselinePath:
    """GARCH margins, correlation targeting and second-stage maximum likelihood.

    Passing ``params`` skips the second stage and evaluates the recursion at
    the given values. The first ``WARMUP - 1`` periods are reported undefined
    to match the other competitors.
    """
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    z, margins = standardized_residuals(panel.excess)
    S, Nbar = _targets(z)
    if params is None:
        params = _fit_params(z, flavor, S, Nbar)
    R = dcc_path(z, params, S, Nbar)
    name = {"gaussian": "dcc", "student": "dcc_t", "asymmetric": "adcc"}[flavor]
    info = {"a": params.a, "b": params.b, "g": params.g, "df": params.df, "loglik": params.loglik,
            "margins": [m.__dict__ for m in margins]}
    return path_from_corr(name, R, first=WARMUP - 1, params=info)

"""Window-based estimators: exponentially weighted, Ledoit-Wolf and hard-thresholded."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from dspcorr.baselines._path import WARMUP, BaselinePath, path_from_corr
from dspcorr.panel import ReturnPanel
from dspcorr.score import cov_to_corr

EIG_FLOOR = 1e-8
PROJ_TOL = 1e-9
PROJ_MAX_ITER = 200


class ProjectionError(ValueError):
    """Alternating projections did not converge; ``last`` holds the final iterate."""

    def __init__(self, message: str, last: np.ndarray):
        super().__init__(message)
        self.last = last


def _windows(x: np.ndarray, window: int) -> np.ndarray:
    T = x.shape[0]
    if window < 2:
        raise ValueError("window must be at least 2")
    if T < window:
        raise ValueError(f"need T >= window ({window}), got T={T}")
    # (T - window + 1, window, N), oldest row first
    return np.swapaxes(sliding_window_view(x, window, axis=0), 1, 2)


def ewma_weights(window: int = WARMUP, decay: float = 0.94) -> np.ndarray:
    """Weights for rows ordered oldest to newest: ``decay**k`` for lag ``k``, summing to one."""
    if not 0.0 < decay <= 1.0:
        raise ValueError("decay must lie in (0, 1]")
    w = decay ** np.arange(window - 1, -1, -1, dtype=float)
    return w / w.sum()


def ewma_corr(panel: ReturnPanel, window: int = WARMUP, decay: float = 0.94) -> BaselinePath:
    """Windowed exponentially weighted covariance around the weighted mean, standardized."""
    W = _windows(panel.excess, window)
    w = ewma_weights(window, decay)
    mean = np.einsum("k,skn->sn", w, W)
    D = W - mean[:, None, :]
    S = np.einsum("k,ski,skj->sij", w, D, D)
    return _assemble("ewma", cov_to_corr(S), panel.T, window)


def _assemble(method, corr_tail, T, window, params=None):
    N = corr_tail.shape[-1]
    corr = np.full((T, N, N), np.nan)
    corr[window - 1:] = corr_tail
    return path_from_corr(method, corr, first=window - 1, params=params)


def ledoit_wolf_shrink(X: np.ndarray) -> tuple[np.ndarray, float]:
    """Linear shrinkage of the (1/n) sample covariance toward ``mu I``.

    Returns the shrunk covariance and the intensity in [0, 1]. Columns are
    demeaned first.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / n
    if p == 1:
        return S, 0.0
    mu = np.trace(S) / p
    F = S - mu * np.eye(p)
    d2 = np.sum(F * F) / p
    if d2 <= 0.0:
        return S, 0.0
    # (1/n^2) sum_k ||x_k x_k' - S||_F^2 / p, expanded to avoid forming n outer products
    sq = np.sum(Xc * Xc, axis=1)
    b_bar2 = (np.sum(sq * sq) / n - np.sum(S * S)) / (n * p)
    b2 = min(b_bar2, d2)
    shrink = float(np.clip(b2 / d2, 0.0, 1.0))
    return shrink * mu * np.eye(p) + (1.0 - shrink) * S, shrink


def ledoit_wolf_corr(panel: ReturnPanel, window: int = WARMUP) -> BaselinePath:
    """Rolling Ledoit-Wolf covariance over ``window`` rows, standardized."""
    W = _windows(panel.excess, window)
    out = np.empty((W.shape[0], panel.N, panel.N))
    intensity = np.empty(W.shape[0])
    for s in range(W.shape[0]):
        S, intensity[s] = ledoit_wolf_shrink(W[s])
        out[s] = S
    return _assemble("ledoit_wolf", cov_to_corr(out), panel.T, window,
                     params={"mean_intensity": float(intensity.mean())})


def _psd_floor(A: np.ndarray, floor: float) -> np.ndarray:
    lam, V = np.linalg.eigh(A)
    X = (V * np.maximum(lam, floor)) @ V.T
    return 0.5 * (X + X.T)


def _unit_diag(A: np.ndarray) -> np.ndarray:
    X = A.copy()
    np.fill_diagonal(X, 1.0)
    return X


def nearest_pd_correlation(A: np.ndarray, floor: float = EIG_FLOOR, tol: float = PROJ_TOL,
                           max_iter: int = PROJ_MAX_ITER) -> np.ndarray:
    """Nearest correlation matrix with eigenvalues at least ``floor``.

    Alternating projections with Dykstra's correction between the
    floored-PSD cone and the unit-diagonal affine set, stopping when the
    Frobenius change between iterates drops below ``tol``. A final rescaling
    makes the diagonal exactly one while keeping the eigenvalue floor (up to
    rounding). Inputs that already satisfy the floor are returned unchanged.

    Raises
    ------
    ProjectionError
        If ``max_iter`` iterations do not reach ``tol``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.allclose(A, A.T, atol=1e-12):
        raise ValueError("input must be a symmetric square matrix")
    if not np.allclose(np.diag(A), 1.0, atol=1e-12):
        raise ValueError("input must have unit diagonal")
    A = _unit_diag(0.5 * (A + A.T))
    if np.linalg.eigvalsh(A)[0] >= floor:
        return A
    Y = A
    dS = np.zeros_like(A)
    for _ in range(max_iter):
        R = Y - dS
        X = _psd_floor(R, floor)
        dS = X - R
        Y_new = _unit_diag(X)
        change = np.linalg.norm(Y_new - Y)
        Y = Y_new
        if change < tol:
            break
    else:
        raise ProjectionError(f"no convergence in {max_iter} iterations (last change {change:.3g})", Y)
    # Restore the floor exactly; rescaling by the diagonal shrinks eigenvalues by at most max(diag).
    f = floor
    for _ in range(5):
        X = _psd_floor(Y, f)
        d = np.sqrt(np.diag(X))
        Z = X / np.outer(d, d)
        Z = _unit_diag(0.5 * (Z + Z.T))
        if np.linalg.eigvalsh(Z)[0] >= floor - 1e-12:
            return Z
        f = floor * float(np.max(d)) ** 2 * 1.001
    return Z


def threshold_corr(panel: ReturnPanel, window: int = WARMUP, thresh: float = 0.10) -> BaselinePath:
    """Rolling sample correlation, small off-diagonals set to zero, then projected to PD."""
    W = _windows(panel.excess, window)
    D = W - W.mean(axis=1, keepdims=True)
    C = cov_to_corr(np.einsum("ski,skj->sij", D, D))
    N = panel.N
    off = ~np.eye(N, dtype=bool)
    small = (np.abs(C) < thresh) & off
    C[small] = 0.0
    out = np.stack([nearest_pd_correlation(c) for c in C])
    return _assemble("threshold", out, panel.T, window)

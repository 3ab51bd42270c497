"""Correlation summaries: standardization, log-determinant, score, total correlation.

The score of an N x N correlation matrix is ``1 - det(R) ** (1 / N)``. It is 0
for the identity, 1 for any singular matrix, and equals ``1 - exp(-2 I(R))``
where ``I(R) = -log det(R) / (2N)`` is the dimension-normalized total
correlation of a Gaussian vector with correlation ``R``.
"""
from __future__ import annotations

import numpy as np

from dspcorr import kernels

SYM_TOL = 1e-12
PSD_TOL = -1e-10
PIVOT_TOL = 1e-12


class CorrelationError(ValueError):
    """A matrix failed correlation- or covariance-matrix validation."""


def validate_correlation(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise CorrelationError(f"correlation matrix must be square, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise CorrelationError("correlation matrix has non-finite entries")
    if np.abs(R - R.T).max(initial=0.0) > SYM_TOL:
        raise CorrelationError("correlation matrix is not symmetric")
    if np.abs(np.diag(R) - 1.0).max(initial=0.0) > SYM_TOL:
        raise CorrelationError("correlation matrix must have unit diagonal")
    if np.abs(R).max() > 1.0 + SYM_TOL:
        raise CorrelationError("off-diagonal correlation outside [-1, 1]")
    lam_min = np.linalg.eigvalsh(R)[0]
    if lam_min < PSD_TOL:
        raise CorrelationError(f"correlation matrix is indefinite (min eigenvalue {lam_min:.3g})")
    return R


def validate_covariance(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise CorrelationError(f"covariance matrix must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise CorrelationError("covariance matrix has non-finite entries")
    if np.any(np.diag(S) <= 0.0):
        raise CorrelationError("covariance matrix needs a strictly positive diagonal")
    return S


def cov_to_corr(S: np.ndarray) -> np.ndarray:
    """Standardize a covariance matrix (or a stack of them) to correlation.

    The diagonal of the result is set to exactly one.
    """
    S = np.asarray(S, dtype=float)
    d = np.einsum("...ii->...i", S)
    if np.any(~(d > 0.0)):
        raise CorrelationError("covariance matrix needs a strictly positive diagonal")
    sd = np.sqrt(d)
    R = S / (sd[..., :, None] * sd[..., None, :])
    idx = np.arange(S.shape[-1])
    R[..., idx, idx] = 1.0
    return R


def log_det_corr(R: np.ndarray) -> float:
    """Natural log of ``det(R)`` from Cholesky pivots.

    Returns ``-inf`` when a pivot falls below ``1e-12``, which is how singular
    boundary cases such as the all-ones matrix are detected.
    """
    R = validate_correlation(R)
    return float(kernels.corr_logdet(R[None], PIVOT_TOL)[0])


def log_det_corr_batch(Rs: np.ndarray) -> np.ndarray:
    """Unvalidated batched version of :func:`log_det_corr` for internal paths."""
    Rs = np.ascontiguousarray(Rs, dtype=float)
    return kernels.corr_logdet(Rs, PIVOT_TOL)


def _score_from_logdet(logdet: np.ndarray, n: int) -> np.ndarray:
    out = 1.0 - np.exp(logdet / n)
    return np.clip(out, 0.0, 1.0)


def score(R: np.ndarray) -> float:
    """Dimension-normalized log-determinant score ``1 - det(R)**(1/N)`` in [0, 1]."""
    R = validate_correlation(R)
    ld = float(kernels.corr_logdet(R[None], PIVOT_TOL)[0])
    return float(_score_from_logdet(np.array(ld), R.shape[0]))


def score_batch(Rs: np.ndarray) -> np.ndarray:
    """Scores for a stack of correlation matrices with shape ``(..., N, N)``."""
    Rs = np.asarray(Rs, dtype=float)
    lead = Rs.shape[:-2]
    n = Rs.shape[-1]
    ld = log_det_corr_batch(Rs.reshape(-1, n, n))
    return _score_from_logdet(ld, n).reshape(lead)


def total_correlation(R: np.ndarray) -> float:
    """``-log det(R) / (2N)``; ``+inf`` for singular ``R``."""
    R = validate_correlation(R)
    return -log_det_corr(R) / (2.0 * R.shape[0])

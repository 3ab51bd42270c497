"""Moving-block bootstrap intervals for score paths of point estimators."""
from __future__ import annotations

import numpy as np

from dspcorr.panel import ReturnPanel

MAX_DROP_FRACTION = 0.20


class BootstrapError(ValueError):
    """Too many resamples failed."""


def block_indices(T: int, block: int, rng: np.random.Generator) -> np.ndarray:
    """Row indices of one moving-block resample of length ``T``."""
    if not 1 <= block <= T:
        raise ValueError(f"block length must lie in [1, T={T}]")
    n_blocks = -(-T // block)
    starts = rng.integers(0, T - block + 1, n_blocks)
    return (starts[:, None] + np.arange(block)[None, :]).ravel()[:T]


def block_bootstrap_intervals(panel: ReturnPanel, estimator, B: int = 200, block: int = 20,
                              level: float = 0.95, seed: int = 0):
    """Recentered percentile intervals for ``estimator(panel) -> score path``.

    Each resample joins whole rows (assets, market, risk-free) from
    overlapping blocks. At each t the interval is the original estimate plus
    the ``(1-level)/2`` and ``(1+level)/2`` quantiles of the resampled scores
    minus their median, clipped to [0, 1]; it therefore always contains the
    original estimate. Times where the original estimate is undefined get NaN.

    Returns
    -------
    lo, hi : ndarray
    n_dropped : int
        Resamples on which ``estimator`` raised ``ValueError`` or
        ``LinAlgError`` (they are excluded).
    """
    if B < 1:
        raise ValueError("B must be positive")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    point = np.asarray(estimator(panel), dtype=float)
    draws = []
    dropped = 0
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        rows = block_indices(panel.T, block, rng)
        try:
            draws.append(np.asarray(estimator(panel.take(rows)), dtype=float))
        except (ValueError, np.linalg.LinAlgError):
            dropped += 1
    if dropped > MAX_DROP_FRACTION * B:
        raise BootstrapError(f"{dropped} of {B} resamples failed")
    S = np.stack(draws)
    lo = np.full(point.shape, np.nan)
    hi = np.full(point.shape, np.nan)
    cols = np.isfinite(point) & np.any(np.isfinite(S), axis=0)
    dev = S[:, cols] - np.nanmedian(S[:, cols], axis=0)
    q_lo, q_hi = np.nanquantile(dev, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], axis=0)
    lo[cols] = np.clip(point[cols] + np.minimum(q_lo, 0.0), 0.0, 1.0)
    hi[cols] = np.clip(point[cols] + np.maximum(q_hi, 0.0), 0.0, 1.0)
    return lo, hi, dropped

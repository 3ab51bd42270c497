"""Univariate slice sampling (stepping out + shrinkage), vectorized over independent targets."""
from __future__ import annotations

from typing import Callable

import numpy as np


def slice_sample(
    logp: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x0: np.ndarray,
    rng: np.random.Generator,
    width: float = 0.25,
    lower: float = -np.inf,
    upper: float = np.inf,
    max_steps: int = 32,
) -> np.ndarray:
    """One slice-sampling update for each of ``k`` independent scalar targets.

    Parameters
    ----------
    logp : callable
        ``logp(x, idx)`` returns the unnormalized log density of target
        ``idx[i]`` evaluated at ``x[i]``. It must return ``-inf`` outside the
        support.
    x0 : ndarray, shape (k,)
        Current states; ``logp(x0)`` must be finite.
    width : float
        Initial bracket width for stepping out.
    lower, upper : float
        Hard support bounds; brackets are clipped to them.
    """
    x0 = np.asarray(x0, dtype=float)
    k = x0.shape[0]
    idx = np.arange(k)
    f0 = logp(x0, idx)
    if not np.all(np.isfinite(f0)):
        raise ValueError("slice sampler started outside the support")
    level = f0 - rng.exponential(size=k)
    left = x0 - width * rng.random(k)
    right = left + width
    j = np.floor(max_steps * rng.random(k)).astype(int)
    kk = max_steps - 1 - j
    left = np.maximum(left, lower)
    right = np.minimum(right, upper)

    active = np.flatnonzero((j > 0) & (left > lower))
    while active.size:
        still = logp(left[active], active) > level[active]
        active = active[still]
        left[active] = np.maximum(left[active] - width, lower)
        j[active] -= 1
        active = active[(j[active] > 0) & (left[active] > lower)]
    active = np.flatnonzero((kk > 0) & (right < upper))
    while active.size:
        still = logp(right[active], active) > level[active]
        active = active[still]
        right[active] = np.minimum(right[active] + width, upper)
        kk[active] -= 1
        active = active[(kk[active] > 0) & (right[active] < upper)]

    out = x0.copy()
    active = idx
    while active.size:
        cand = left[active] + (right[active] - left[active]) * rng.random(active.size)
        ok = logp(cand, active) > level[active]
        out[active[ok]] = cand[ok]
        bad = active[~ok]
        below = cand[~ok] < x0[bad]
        left[bad[below]] = cand[~ok][below]
        right[bad[~below]] = cand[~ok][~below]
        active = bad
    return out

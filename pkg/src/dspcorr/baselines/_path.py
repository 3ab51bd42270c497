"""Common result type for competing estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dspcorr.score import score_batch

WARMUP = 60


@dataclass
class BaselinePath:
    """Estimated correlation and score paths of one competing method.

    ``corr`` is (T, N, N) and ``score`` has length T; both are NaN at times
    before the estimator is defined (0-based index ``WARMUP - 1``, i.e. the
    first 59 periods). ``lo``/``hi`` hold optional per-t interval bounds.
    """

    method: str
    corr: np.ndarray
    score: np.ndarray
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    params: dict | None = None

    @property
    def first_defined(self) -> int:
        """0-based index of the first defined score."""
        ok = np.flatnonzero(np.isfinite(self.score))
        if ok.size == 0:
            raise ValueError(f"{self.method}: score path is undefined everywhere")
        return int(ok[0])

    def with_intervals(self, lo: np.ndarray, hi: np.ndarray) -> "BaselinePath":
        return BaselinePath(self.method, self.corr, self.score, np.asarray(lo, float), np.asarray(hi, float),
                            self.params)


def path_from_corr(method: str, corr: np.ndarray, first: int = WARMUP - 1, params: dict | None = None) -> BaselinePath:
    """Blank out times before ``first`` and score the rest."""
    corr = np.array(corr, dtype=float)
    corr[:first] = np.nan
    s = np.full(corr.shape[0], np.nan)
    s[first:] = score_batch(corr[first:])
    return BaselinePath(method, corr, s, params=params)

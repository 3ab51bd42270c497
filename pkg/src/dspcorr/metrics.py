"""Accuracy, calibration and responsiveness metrics for estimated score paths.

Time is 1-based in every public argument: a break ``b`` is the last period
of the old regime, so post-break period ``k`` (``k = 1, 2, ...``) is time
``b + k``, stored at 0-based array index ``b + k - 1``. Evaluation ranges are
inclusive 1-based ``(first, last)`` pairs. Per-break windows stop at the next
break.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

TABLE_COLUMNS = ("rmse", "width", "coverage", "response_lag", "mae1", "settling_lag", "mae2")


def _range_slice(eval_range, T: int) -> slice:
    first, last = eval_range
    first = max(int(first), 1)
    last = min(int(last), T)
    if last < first:
        raise ValueError(f"empty evaluation range {eval_range} for T={T}")
    return slice(first - 1, last)


def _defined(est: np.ndarray, sl: slice) -> np.ndarray:
    seg = np.asarray(est, dtype=float)[sl]
    if not np.all(np.isfinite(seg)):
        raise ValueError("estimate is undefined inside the evaluation range")
    return seg


def rmse(est, truth, eval_range) -> float:
    """Root mean squared error over the inclusive 1-based ``eval_range``."""
    truth = np.asarray(truth, dtype=float)
    sl = _range_slice(eval_range, truth.shape[0])
    d = _defined(est, sl) - truth[sl]
    return float(np.sqrt(np.mean(d * d)))


def mae(est, truth, eval_range) -> float:
    truth = np.asarray(truth, dtype=float)
    sl = _range_slice(eval_range, truth.shape[0])
    return float(np.mean(np.abs(_defined(est, sl) - truth[sl])))


def interval_metrics(lo, hi, truth, eval_range) -> tuple[float, float]:
    """Mean width ``hi - lo`` and the fraction of times with ``lo <= truth <= hi``."""
    truth = np.asarray(truth, dtype=float)
    sl = _range_slice(eval_range, truth.shape[0])
    lo_s = _defined(lo, sl)
    hi_s = _defined(hi, sl)
    if np.any(lo_s > hi_s):
        raise ValueError("interval lower bound exceeds upper bound")
    tr = truth[sl]
    width = float(np.mean(hi_s - lo_s))
    coverage = float(np.mean((lo_s <= tr) & (tr <= hi_s)))
    return width, coverage


def _window_end(breaks, i: int, T: int) -> int:
    """Last time (1-based) that belongs to the post-break window of break ``i``."""
    return breaks[i + 1] if i + 1 < len(breaks) else T


def _check_breaks(breaks, T: int) -> list[int]:
    breaks = [int(b) for b in breaks]
    if not breaks:
        raise ValueError("no breaks given")
    if any(b2 <= b1 for b1, b2 in zip(breaks[:-1], breaks[1:])):
        raise ValueError("breaks must be strictly increasing")
    if breaks[0] < 1 or breaks[-1] >= T:
        raise ValueError("breaks must lie in [1, T-1]")
    return breaks


def _pooled_window_mae(est, truth, breaks, first_k: int, last_k: int) -> float:
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    T = truth.shape[0]
    breaks = _check_breaks(breaks, T)
    idx = []
    for i, b in enumerate(breaks):
        end = min(b + last_k, _window_end(breaks, i, T))
        idx.extend(range(b + first_k - 1, end))
    if not idx:
        raise ValueError("post-break windows are empty")
    idx = np.asarray(idx)
    seg = est[idx]
    if not np.all(np.isfinite(seg)):
        raise ValueError("estimate is undefined inside a post-break window")
    return float(np.mean(np.abs(seg - truth[idx])))


def mae_steady(est, truth, breaks) -> float:
    """MAE1: pooled over post-break periods 21 through 70."""
    return _pooled_window_mae(est, truth, breaks, 21, 70)


def mae_transient(est, truth, breaks) -> float:
    """MAE2: pooled over post-break periods 1 through 50."""
    return _pooled_window_mae(est, truth, breaks, 1, 50)


def _jump(truth: np.ndarray, b: int) -> float:
    # truth at the first post-break time minus truth at the break time
    return float(truth[b] - truth[b - 1])


def response_lag(est, truth, breaks) -> float:
    """Mean over breaks of the first post-break period ``k >= 1`` at which the
    estimate has moved from its own level at the break by at least half the
    true jump, in the jump's direction; ``inf`` if any break never gets there.

    Breaks with a zero true jump are skipped.
    """
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    T = truth.shape[0]
    breaks = _check_breaks(breaks, T)
    lags = []
    for i, b in enumerate(breaks):
        jump = _jump(truth, b)
        if jump == 0.0:
            continue
        base = est[b - 1]
        end = _window_end(breaks, i, T)
        lag = math.inf
        if np.isfinite(base):
            for k in range(1, end - b + 1):
                if math.copysign(1.0, jump) * (est[b + k - 1] - base) >= 0.5 * abs(jump):
                    lag = float(k)
                    break
        lags.append(lag)
    if not lags:
        raise ValueError("all breaks have zero jump")
    return float(np.mean(lags))


def settling_lag(est, truth, breaks) -> float:
    """Mean over breaks of the first ``k >= 1`` such that the estimate stays
    within 10% of the absolute true jump of the truth for periods ``k`` through
    ``k + 4``; ``inf`` if any break never settles within its window."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    T = truth.shape[0]
    breaks = _check_breaks(breaks, T)
    lags = []
    for i, b in enumerate(breaks):
        jump = _jump(truth, b)
        if jump == 0.0:
            continue
        band = 0.1 * abs(jump)
        end = _window_end(breaks, i, T)
        inside = np.abs(est[b:end] - truth[b:end]) <= band   # index j <-> period j + 1
        lag = math.inf
        run = 0
        for j, ok in enumerate(inside):
            run = run + 1 if ok else 0
            if run == 5:
                lag = float(j + 1 - 4)
                break
        lags.append(lag)
    if not lags:
        raise ValueError("all breaks have zero jump")
    return float(np.mean(lags))


@dataclass(frozen=True)
class MetricsReport:
    method: str
    rmse: float
    width: float
    coverage: float
    mae: float
    mae1: float
    mae2: float
    response_lag: float
    settling_lag: float

    def __post_init__(self):
        if not math.isnan(self.coverage) and not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")
        for name in ("rmse", "width", "mae", "response_lag", "settling_lag"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be non-negative")

    def table_row(self) -> list[float]:
        return [getattr(self, c) for c in TABLE_COLUMNS]


def evaluate(method: str, est, truth, breaks, lo=None, hi=None, eval_range=None) -> MetricsReport:
    """All metrics for one estimated path. Interval metrics are NaN without intervals.

    ``eval_range`` defaults to ``(60, T)``. Break-based metrics use only the
    breaks that fall inside ``eval_range`` (so the estimate is defined at the
    break itself); they are NaN when no break qualifies, and the lags are
    NaN when every qualifying break has a zero true jump.
    """
    truth = np.asarray(truth, dtype=float)
    T = truth.shape[0]
    eval_range = (60, T) if eval_range is None else eval_range
    width = coverage = float("nan")
    if lo is not None and hi is not None:
        width, coverage = interval_metrics(lo, hi, truth, eval_range)
    first, last = eval_range
    breaks = [int(b) for b in (() if breaks is None else breaks) if first <= int(b) < min(last, T)]
    has_breaks = len(breaks) > 0
    has_jumps = any(_jump(truth, b) != 0.0 for b in breaks)
    nan = float("nan")
    return MetricsReport(
        method=method,
        rmse=rmse(est, truth, eval_range),
        width=width,
        coverage=coverage,
        mae=mae(est, truth, eval_range),
        mae1=mae_steady(est, truth, breaks) if has_breaks else nan,
        mae2=mae_transient(est, truth, breaks) if has_breaks else nan,
        response_lag=response_lag(est, truth, breaks) if has_jumps else nan,
        settling_lag=settling_lag(est, truth, breaks) if has_jumps else nan,
    )


def write_reports_csv(reports, path, extra: dict | None = None) -> None:
    """One row per report: method, any ``extra`` columns, then the table columns and ``mae``."""
    extra = extra or {}
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", *extra, *TABLE_COLUMNS, "mae"])
        for rep in reports:
            w.writerow([rep.method, *extra.values(), *(repr(float(v)) for v in rep.table_row()), repr(rep.mae)])


def average_reports(reports) -> list[MetricsReport]:
    """Per-method means over seeds (infinite lags propagate as ``inf``)."""
    by_method: dict[str, list[MetricsReport]] = {}
    for rep in reports:
        by_method.setdefault(rep.method, []).append(rep)
    out = []
    names = [f.name for f in fields(MetricsReport) if f.name != "method"]
    for method, reps in by_method.items():
        vals = {n: float(np.mean([getattr(r, n) for r in reps])) for n in names}
        out.append(MetricsReport(method=method, **vals))
    return out


__all__ = ["MetricsReport", "TABLE_COLUMNS", "average_reports", "evaluate", "interval_metrics",
           "mae", "mae_steady", "mae_transient", "response_lag", "rmse", "settling_lag", "write_reports_csv"]

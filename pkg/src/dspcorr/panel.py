"""Return panels: prices to simple returns to excess returns, CSV in and out.

CSV conventions: UTF-8, comma separated, '.' decimal, header row, first column
named ``date``. Dates are opaque labels compared as strings, so use ISO-8601
or zero-padded integers. Missing cells are errors, never imputed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PanelError(ValueError):
    """Base class for panel ingestion and validation errors."""


class MissingCellError(PanelError):
    pass


class ParseError(PanelError):
    pass


class DateOrderError(PanelError):
    pass


class UnknownColumnError(PanelError):
    pass


class RiskFreeAlignmentError(PanelError):
    pass


def _check_dates(dates, what="dates"):
    for prev, cur in zip(dates[:-1], dates[1:]):
        if not prev < cur:
            raise DateOrderError(f"{what} not strictly increasing at {prev!r} -> {cur!r}")


@dataclass(frozen=True)
class ReturnPanel:
    """Dated T x N excess returns plus the market excess return and risk-free rate."""

    dates: tuple
    assets: tuple
    excess: np.ndarray
    market: np.ndarray
    rf: np.ndarray

    def __post_init__(self):
        excess = np.asarray(self.excess, dtype=float)
        market = np.asarray(self.market, dtype=float)
        rf = np.asarray(self.rf, dtype=float)
        object.__setattr__(self, "dates", tuple(str(d) for d in self.dates))
        object.__setattr__(self, "assets", tuple(str(a) for a in self.assets))
        object.__setattr__(self, "excess", excess)
        object.__setattr__(self, "market", market)
        object.__setattr__(self, "rf", rf)
        if excess.ndim != 2:
            raise PanelError("excess returns must be a T x N matrix")
        T, N = excess.shape
        if T < 2 or N < 1:
            raise PanelError(f"panel needs T >= 2 and N >= 1, got T={T}, N={N}")
        if len(self.dates) != T or len(self.assets) != N:
            raise PanelError("dates/assets do not match the return matrix shape")
        if market.shape != (T,) or rf.shape != (T,):
            raise PanelError("market and rf must have length T")
        if not (np.all(np.isfinite(excess)) and np.all(np.isfinite(market)) and np.all(np.isfinite(rf))):
            raise MissingCellError("panel contains missing or non-finite values")
        _check_dates(self.dates)

    @property
    def T(self) -> int:
        return self.excess.shape[0]

    @property
    def N(self) -> int:
        return self.excess.shape[1]

    def take(self, rows: np.ndarray) -> "ReturnPanel":
        """Panel built from the given rows, relabelled with the original dates.

        Used by resampling schemes, where the date labels no longer describe
        the rows that fill them.
        """
        rows = np.asarray(rows)
        return ReturnPanel(self.dates, self.assets, self.excess[rows], self.market[rows], self.rf[rows])


@dataclass(frozen=True)
class AuxSeries:
    """An auxiliary dated series, e.g. a volatility index, for report overlays."""

    dates: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(str(d) for d in self.dates))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if len(self.dates) != self.values.shape[0]:
            raise PanelError("aux dates and values differ in length")
        _check_dates(self.dates, "aux dates")


def simple_returns(prices: np.ndarray) -> np.ndarray:
    """``(P[t+1] - P[t]) / P[t]`` for a (T+1) x N price matrix."""
    P = np.asarray(prices, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[0] < 2:
        raise PanelError("need at least two price rows")
    if not np.all(np.isfinite(P)) or np.any(P <= 0.0):
        raise PanelError("prices must be finite and strictly positive")
    return (P[1:] - P[:-1]) / P[:-1]


def excess_returns(returns: np.ndarray, rf: np.ndarray) -> np.ndarray:
    R = np.asarray(returns, dtype=float)
    rf = np.asarray(rf, dtype=float)
    if rf.ndim != 1 or rf.shape[0] != R.shape[0]:
        raise PanelError(f"risk-free series has length {rf.shape[0]}, returns have {R.shape[0]} rows")
    if R.ndim == 1:
        return R - rf
    return R - rf[:, None]


def _read_csv(path) -> tuple[list[str], list[str], dict[str, list[str]]]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "date":
        raise ParseError(f"{path}: first column must be named 'date'")
    if len(set(header)) != len(header):
        raise ParseError(f"{path}: duplicated column names")
    dates = []
    cols: dict[str, list[str]] = {h: [] for h in header[1:]}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MissingCellError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        if any(cell.strip() == "" for cell in row):
            raise MissingCellError(f"{path}:{lineno}: empty cell")
        dates.append(row[0].strip())
        for h, cell in zip(header[1:], row[1:]):
            cols[h].append(cell.strip())
    return header, dates, cols


def _to_float(values: list[str], where: str) -> np.ndarray:
    out = np.empty(len(values))
    for i, v in enumerate(values):
        try:
            out[i] = float(v)
        except ValueError as exc:
            raise ParseError(f"{where}, row {i + 1}: cannot parse {v!r}") from exc
    if not np.all(np.isfinite(out)):
        raise MissingCellError(f"{where}: non-finite value")
    return out


def load_panel_csv(
    path,
    market_column: str = "market",
    rf_column: str | None = None,
    rf_file=None,
    rf_const: float | None = None,
    kind: str = "returns",
    already_excess: bool = False,
) -> ReturnPanel:
    """Load a panel from CSV.

    Parameters
    ----------
    path : path-like
        CSV with a ``date`` column, one column per asset and a market column.
    market_column : str
        Name of the market column; it is removed from the asset set.
    rf_column, rf_file, rf_const
        At most one source for the one-period risk-free rate: a column in the
        same file, a separate ``date,rf`` CSV whose dates must match exactly,
        or a constant. With none given the rate is zero.
    kind : {"returns", "prices"}
        Whether the cells are simple returns or prices. Prices lose the first
        date when converted.
    already_excess : bool
        Cells already hold excess returns; the rf source is stored but not
        subtracted. This is the layout written by :func:`write_panel_csv`.
    """
    if sum(x is not None for x in (rf_column, rf_file, rf_const)) > 1:
        raise PanelError("give at most one of rf_column, rf_file, rf_const")
    if kind not in ("returns", "prices"):
        raise PanelError(f"kind must be 'returns' or 'prices', got {kind!r}")
    header, dates, cols = _read_csv(path)
    if market_column not in cols:
        raise UnknownColumnError(f"{path}: market column {market_column!r} not found")
    if rf_column is not None and rf_column not in cols:
        raise UnknownColumnError(f"{path}: rf column {rf_column!r} not found")
    if len(set(dates)) != len(dates):
        raise DateOrderError(f"{path}: duplicated date row")
    _check_dates(dates)

    skip = {market_column} | ({rf_column} if rf_column else set())
    assets = [h for h in header[1:] if h not in skip]
    if not assets:
        raise PanelError(f"{path}: no asset columns")
    values = np.column_stack([_to_float(cols[a], f"{path}:{a}") for a in assets])
    market = _to_float(cols[market_column], f"{path}:{market_column}")

    if kind == "prices":
        values = simple_returns(values)
        market = simple_returns(market)[:, 0]
        dates = dates[1:]
    T = len(dates)

    if rf_column is not None:
        rf = _to_float(cols[rf_column], f"{path}:{rf_column}")
        if kind == "prices":
            rf = rf[1:]
    elif rf_file is not None:
        _, rf_dates, rf_cols = _read_csv(rf_file)
        if len(rf_cols) != 1:
            raise ParseError(f"{rf_file}: expected exactly one value column besides 'date'")
        rf_vals = _to_float(next(iter(rf_cols.values())), str(rf_file))
        lookup = dict(zip(rf_dates, rf_vals))
        missing = [d for d in dates if d not in lookup]
        if missing:
            raise RiskFreeAlignmentError(
                f"{rf_file}: no risk-free rate for {len(missing)} panel dates (first {missing[0]!r})"
            )
        rf = np.array([lookup[d] for d in dates])
    else:
        rf = np.full(T, 0.0 if rf_const is None else float(rf_const))

    if already_excess:
        excess, market_excess = values, market
    else:
        excess = excess_returns(values, rf)
        market_excess = excess_returns(market, rf)
    return ReturnPanel(tuple(dates), tuple(assets), excess, market_excess, rf)


def write_panel_csv(panel: ReturnPanel, path, market_column: str = "market", rf_column: str = "rf") -> None:
    """Write excess returns, market and rf; reload with ``already_excess=True, rf_column='rf'``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *panel.assets, market_column, rf_column])
        for t, d in enumerate(panel.dates):
            w.writerow([d, *(repr(float(x)) for x in panel.excess[t]),
                        repr(float(panel.market[t])), repr(float(panel.rf[t]))])


def load_aux_csv(path, column: str | None = None) -> AuxSeries:
    header, dates, cols = _read_csv(path)
    if column is None:
        if len(cols) != 1:
            raise ParseError(f"{path}: several value columns, name one")
        column = header[1]
    if column not in cols:
        raise UnknownColumnError(f"{path}: column {column!r} not found")
    if len(set(dates)) != len(dates):
        raise DateOrderError(f"{path}: duplicated date row")
    return AuxSeries(tuple(dates), _to_float(cols[column], f"{path}:{column}"))

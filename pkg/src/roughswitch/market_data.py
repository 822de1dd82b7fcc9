"""CSV ingestion for the two input datasets.

Prices:  ``date,ticker,close,return``
Options: ``date,days,forward_price,strike_price,premium,impl_volatility,cp_flag,ticker,index_flag``

Dates are ISO-8601 in files and proleptic-Gregorian ordinals (``date.toordinal()``)
in memory.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Iterator, Optional, Tuple, Union

import numpy as np

from .errors import EmptySeries, MalformedRow, NoMatch, NonPositivePrice

Source = Union[str, os.PathLike, bytes, IO]

TRADING_DAYS = 252

PRICE_COLUMNS = ("date", "ticker", "close")
OPTION_COLUMNS = (
    "date",
    "days",
    "forward_price",
    "strike_price",
    "premium",
    "impl_volatility",
    "cp_flag",
    "ticker",
)


def parse_date(text: str) -> int:
    return date.fromisoformat(text.strip()).toordinal()


def format_date(ordinal: int) -> str:
    return date.fromordinal(int(ordinal)).isoformat()


def normalize_cp_flag(flag: str) -> str:
    f = str(flag).strip().lower()
    if f in ("p", "put"):
        return "put"
    if f in ("c", "call"):
        return "call"
    raise ValueError(f"unknown cp_flag {flag!r}")


@dataclass(frozen=True)
class PriceSeries:
    ticker: str
    dates: np.ndarray  # int64 ordinals, strictly increasing
    closes: np.ndarray
    log_returns: np.ndarray
    duplicates: int = 0
    # max |stored return - recomputed log return| when the file carried a return column
    return_discrepancy: Optional[float] = None

    def __len__(self) -> int:
        return len(self.dates)

    def close_on(self, ordinal: int) -> float:
        idx = np.searchsorted(self.dates, ordinal)
        if idx >= len(self.dates) or self.dates[idx] != ordinal:
            raise NoMatch(f"no close for {self.ticker} on {format_date(ordinal)}")
        return float(self.closes[idx])


@dataclass(frozen=True)
class OptionContract:
    ticker: str
    quote_date: int
    dte: int
    strike: float
    forward_price: float
    premium: float
    implied_vol: float
    cp_flag: str

    def __post_init__(self):
        if self.dte < 1:
            raise ValueError("dte must be >= 1")
        if self.strike < 0 or self.implied_vol < 0:
            raise ValueError("strike and implied_vol must be non-negative")

    @property
    def maturity_years(self) -> float:
        return self.dte / TRADING_DAYS


@dataclass(frozen=True)
class AtmVolSeries:
    dates: np.ndarray
    atm_implied_vols: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class _OptionRow:
    date: int
    days: int
    forward_price: float
    strike: float
    premium: float
    implied_vol: float
    cp_flag: str
    ticker: str

    def sort_key(self) -> Tuple:
        # total order used for deterministic tie-breaking
        return (abs(self.strike - self.forward_price), self.strike, self.days,
                self.premium, self.implied_vol, self.forward_price)


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return fh.read()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _dict_rows(source: Source, required: Iterable[str]) -> Iterator[Tuple[int, dict]]:
    reader = csv.DictReader(io.StringIO(_read_text(source)))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in required if c not in header]
    if missing:
        raise MalformedRow(f"missing columns {missing}; header was {header}")
    reader.fieldnames = header
    for lineno, row in enumerate(reader, start=2):
        yield lineno, row


def _number(row: dict, key: str, lineno: int) -> float:
    raw = row.get(key)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise MalformedRow(f"line {lineno}: cannot parse {key}={raw!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(f"line {lineno}: non-finite {key}={raw!r}")
    return value


def _date(row: dict, lineno: int) -> int:
    raw = row.get("date")
    try:
        return parse_date(raw)
    except (TypeError, ValueError, AttributeError):
        raise MalformedRow(f"line {lineno}: cannot parse date={raw!r}") from None


def load_price_series(source: Source, ticker: str) -> PriceSeries:
    """Load closes for one ticker and recompute log returns from them.

    Rows are sorted by date; duplicate dates keep the last row seen in the file.
    A ``return`` column, if present, is only cross-checked.
    """
    by_date: dict = {}
    stored: dict = {}
    duplicates = 0
    for lineno, row in _dict_rows(source, PRICE_COLUMNS):
        if row["ticker"].strip() != ticker:
            continue
        d = _date(row, lineno)
        close = _number(row, "close", lineno)
        if close <= 0:
            raise NonPositivePrice(f"line {lineno}: close {close} for {ticker}")
        if d in by_date:
            duplicates += 1
        by_date[d] = close
        ret = (row.get("return") or "").strip()
        if ret:
            stored[d] = _number(row, "return", lineno)
        else:
            stored.pop(d, None)
    if not by_date:
        raise EmptySeries(f"no price rows for ticker {ticker!r}")

    dates = np.array(sorted(by_date), dtype=np.int64)
    closes = np.array([by_date[d] for d in dates], dtype=float)
    log_returns = np.log(closes[1:] / closes[:-1])

    discrepancy = None
    checked = [(i, stored[d]) for i, d in enumerate(dates[1:]) if d in stored]
    if checked:
        discrepancy = max(abs(log_returns[i] - r) for i, r in checked)
    return PriceSeries(ticker, dates, closes, log_returns, duplicates, discrepancy)


def dump_price_series(series: PriceSeries) -> str:
    """Serialize to the price CSV schema; ``repr`` floats make the round trip exact."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", "ticker", "close", "return"])
    for i, (d, c) in enumerate(zip(series.dates, series.closes)):
        ret = repr(float(series.log_returns[i - 1])) if i > 0 else ""
        writer.writerow([format_date(d), series.ticker, repr(float(c)), ret])
    return out.getvalue()


def _option_rows(source: Source, ticker: str) -> Iterator[_OptionRow]:
    for lineno, row in _dict_rows(source, OPTION_COLUMNS):
        if row["ticker"].strip() != ticker:
            continue
        try:
            cp = normalize_cp_flag(row["cp_flag"])
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: {exc}") from None
        days = _number(row, "days", lineno)
        if days != int(days):
            raise MalformedRow(f"line {lineno}: non-integer days {days}")
        yield _OptionRow(
            date=_date(row, lineno),
            days=int(days),
            forward_price=_number(row, "forward_price", lineno),
            strike=_number(row, "strike_price", lineno),
            premium=_number(row, "premium", lineno),
            implied_vol=_number(row, "impl_volatility", lineno),
            cp_flag=cp,
            ticker=ticker,
        )


def select_contract(source: Source, ticker: str, quote_date, dte: int, cp_flag: str) -> OptionContract:
    """Pick the ATM row (strike nearest the forward, lower strike on ties)."""
    qd = parse_date(quote_date) if isinstance(quote_date, str) else int(quote_date)
    cp = normalize_cp_flag(cp_flag)
    rows = [r for r in _option_rows(source, ticker)
            if r.date == qd and r.days == dte and r.cp_flag == cp]
    if not rows:
        raise NoMatch(f"no {cp} rows for {ticker} on {format_date(qd)} with days={dte}")
    best = min(rows, key=_OptionRow.sort_key)
    return OptionContract(
        ticker=ticker,
        quote_date=qd,
        dte=best.days,
        strike=best.strike,
        forward_price=best.forward_price,
        premium=best.premium,
        implied_vol=best.implied_vol,
        cp_flag=cp,
    )


def extract_atm_vol_series(source: Source, ticker: str, dte_band: Tuple[int, int],
                           cp_flag: Optional[str] = None) -> AtmVolSeries:
    """One ATM implied vol per quote date among rows with ``days`` inside ``dte_band`` (inclusive)."""
    lo, hi = dte_band
    cp = normalize_cp_flag(cp_flag) if cp_flag else None
    best: dict = {}
    for r in _option_rows(source, ticker):
        if not (lo <= r.days <= hi):
            continue
        if cp is not None and r.cp_flag != cp:
            continue
        cur = best.get(r.date)
        if cur is None or r.sort_key() < cur.sort_key():
            best[r.date] = r
    if not best:
        raise EmptySeries(f"no option rows for {ticker!r} with days in [{lo}, {hi}]")
    dates = np.array(sorted(best), dtype=np.int64)
    vols = np.array([best[d].implied_vol for d in dates], dtype=float)
    return AtmVolSeries(dates, vols)

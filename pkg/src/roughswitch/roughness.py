"""Rescaled-range statistic and the rolling single-window Hurst estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateWindow, InsufficientData

DEFAULT_WINDOW = 32
# relative spread below which a window is treated as constant
_DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class HurstSeries:
    dates: np.ndarray  # aligned to the last return of each window
    values: np.ndarray
    window: int
    degenerate: int = 0  # number of windows that carried forward

    def __len__(self) -> int:
        return len(self.values)


def rs_statistic(window_returns) -> float:
    """Range of cumulative demeaned returns over their sample std (ddof=1)."""
    x = np.asarray(window_returns, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("window needs at least two returns")
    scale = np.max(np.abs(x))
    dev = x - x.mean()
    sigma = math.sqrt(float(dev @ dev) / (x.size - 1))
    if scale == 0.0 or sigma <= _DEGENERATE_RTOL * scale:
        raise DegenerateWindow("zero variance window")
    cum = np.cumsum(dev)
    return float((cum.max() - cum.min()) / sigma)


def hurst_from_rs(rs: float, window: int) -> float:
    if rs <= 0.0:
        return 0.0
    return min(1.0, max(0.0, math.log2(rs) / math.log2(window)))


def rolling_hurst(returns, window: int = DEFAULT_WINDOW, dates=None) -> HurstSeries:
    """H_t = log2(R/S) / log2(window) on each trailing window, clipped to [0, 1].

    Degenerate windows repeat the previous estimate (0.5 if there is none).
    """
    r = np.asarray(returns, dtype=float)
    if window < 2:
        raise ValueError("window must be >= 2")
    if r.size < window:
        raise InsufficientData(f"need at least {window} returns, got {r.size}")
    n_out = r.size - window + 1
    values = np.empty(n_out)
    prev = 0.5
    degenerate = 0
    for k in range(n_out):
        try:
            prev = hurst_from_rs(rs_statistic(r[k:k + window]), window)
        except DegenerateWindow:
            degenerate += 1
        values[k] = prev
    if dates is None:
        out_dates = np.arange(window - 1, r.size, dtype=np.int64)
    else:
        dates = np.asarray(dates)
        if dates.size != r.size:
            raise ValueError("dates must align with returns")
        out_dates = dates[window - 1:]
    return HurstSeries(out_dates, values, window, degenerate)


def hurst_for_prices(series, window: int = DEFAULT_WINDOW, upto: Optional[int] = None) -> HurstSeries:
    """Rolling Hurst on a PriceSeries; returns are dated by their second close."""
    dates = series.dates[1:]
    r = series.log_returns
    if upto is not None:
        keep = dates <= upto
        dates, r = dates[keep], r[keep]
    return rolling_hurst(r, window, dates)

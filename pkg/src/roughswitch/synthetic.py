"""Synthetic market fixtures: fractional Gaussian noise and matching CSV files.

Used by ``selftest`` and the test-suite in place of proprietary vendor data.
"""

from __future__ import annotations

import csv
import io
import math
from datetime import date, timedelta
from functools import lru_cache
from typing import List, Tuple

import numpy as np


def fgn_autocovariance(n: int, hurst: float) -> np.ndarray:
    k = np.arange(n, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=8)
def _fgn_factor(n: int, hurst: float) -> np.ndarray:
    gamma = fgn_autocovariance(n, hurst)
    idx = np.arange(n)
    cov = gamma[np.abs(idx[:, None] - idx[None, :])]
    return np.linalg.cholesky(cov)


def fgn_cholesky(n: int, hurst: float, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Unit-variance fractional Gaussian noise (increments of fBm) by Cholesky factorization.

    Returns an array of shape ``(size, n)``.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError("hurst must lie in (0, 1)")
    L = _fgn_factor(int(n), float(hurst))
    z = rng.standard_normal((size, n))
    return z @ L.T


def black_scholes(spot, strike, vol, T, r, cp_flag="put") -> float:
    if T <= 0 or vol <= 0:
        intrinsic = spot - strike if cp_flag == "call" else strike - spot
        return max(intrinsic, 0.0)
    sq = vol * math.sqrt(T)
    d1 = (math.log(spot / strike) + (r + 0.5 * vol * vol) * T) / sq
    d2 = d1 - sq
    N = lambda x: 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))  # noqa: E731
    if cp_flag == "call":
        return spot * N(d1) - strike * math.exp(-r * T) * N(d2)
    return strike * math.exp(-r * T) * N(-d2) - spot * N(-d1)


def business_days(start: date, n: int) -> List[date]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def make_synthetic_market(
    ticker: str = "SYN",
    n_days: int = 400,
    seed: int = 7,
    hurst: float = 0.5,
    spot0: float = 100.0,
    base_vol: float = 0.2,
    vol_of_vol: float = 0.8,
    dtes: Tuple[int, ...] = (10, 20),
    strike_step: float = 2.5,
    r: float = 0.045,
    start: date = date(2022, 1, 3),
) -> Tuple[str, str, List[str]]:
    """Build (prices_csv, options_csv, iso_dates) text for one ticker.

    Log-vol follows a mean-reverting walk; returns are fGn scaled by the daily vol
    and partly driven by the vol shocks (negative leverage).
    """
    rng = np.random.default_rng(seed)
    days = business_days(start, n_days)
    noise = fgn_cholesky(n_days - 1, hurst, rng)[0]
    vol_shocks = rng.standard_normal(n_days)

    log_vol = np.empty(n_days)
    log_vol[0] = math.log(base_vol)
    dt = 1.0 / 252
    for i in range(1, n_days):
        log_vol[i] = log_vol[i - 1] + 2.0 * (math.log(base_vol) - log_vol[i - 1]) * dt \
            + vol_of_vol * math.sqrt(dt) * vol_shocks[i]
    vols = np.exp(log_vol)

    rets = vols[1:] * math.sqrt(dt) * (0.6 * noise - 0.8 * vol_shocks[1:]) - 0.5 * vols[1:] ** 2 * dt
    closes = spot0 * np.exp(np.concatenate([[0.0], np.cumsum(rets)]))

    p_out = io.StringIO()
    pw = csv.writer(p_out, lineterminator="\n")
    pw.writerow(["date", "ticker", "close", "return"])
    for i, d in enumerate(days):
        ret = "" if i == 0 else f"{rets[i - 1]:.12g}"
        pw.writerow([d.isoformat(), ticker, f"{closes[i]:.6f}", ret])

    o_out = io.StringIO()
    ow = csv.writer(o_out, lineterminator="\n")
    ow.writerow(["date", "days", "forward_price", "strike_price", "premium",
                 "impl_volatility", "cp_flag", "ticker", "index_flag"])
    for i, d in enumerate(days):
        s = float(f"{closes[i]:.6f}")
        for dte in dtes:
            T = dte / 252
            fwd = s * math.exp(r * T)
            center = round(fwd / strike_step) * strike_step
            for k in range(-2, 3):
                strike = center + k * strike_step
                iv = vols[i] * (1.0 + 0.1 * abs(math.log(strike / fwd)) / max(T, 1e-6) ** 0.5)
                for cp in ("P", "C"):
                    prem = black_scholes(s, strike, iv, T, r, "put" if cp == "P" else "call")
                    ow.writerow([d.isoformat(), dte, f"{fwd:.4f}", f"{strike:.2f}",
                                 f"{prem:.4f}", f"{iv:.6f}", cp, ticker, 0])
    return p_out.getvalue(), o_out.getvalue(), [d.isoformat() for d in days]

"""Daily calibration of the engine parameters from prices and ATM implied vols."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateSeries, InsufficientData, InvalidParams, LengthMismatch

DT = 1.0 / 252
DEFAULT_KAPPA = 2.0
DEFAULT_RATE = 0.045
DEFAULT_CALIB_WINDOW = 64


@dataclass(frozen=True)
class EngineParams:
    rho: float
    eta: float
    xi0: float
    kappa: float = DEFAULT_KAPPA
    theta: Optional[float] = None  # defaults to xi0
    v0: Optional[float] = None  # defaults to xi0
    r: float = DEFAULT_RATE
    dt: float = DT

    def __post_init__(self):
        if self.theta is None:
            object.__setattr__(self, "theta", self.xi0)
        if self.v0 is None:
            object.__setattr__(self, "v0", self.xi0)
        values = (self.rho, self.eta, self.xi0, self.kappa, self.theta, self.v0, self.r)
        if not all(math.isfinite(v) for v in values):
            raise InvalidParams(f"non-finite parameter in {self}")
        if abs(self.rho) > 1.0:
            raise InvalidParams(f"rho={self.rho} outside [-1, 1]")
        if min(self.eta, self.xi0, self.kappa, self.theta, self.v0) < 0:
            raise InvalidParams("eta, xi0, kappa, theta, v0 must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"lengths {a.shape} vs {b.shape}")
    return a, b


def estimate_rho(log_returns, vol_changes) -> float:
    """Pearson correlation of daily log returns with implied-vol changes."""
    x, y = _check_pair(log_returns, vol_changes)
    if x.size < 3:
        raise InsufficientData("need at least 3 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSeries("zero-variance series")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, rho))


def estimate_eta(log_vol_changes, hurst_current: float, dt: float = DT) -> float:
    """Vol-of-vol from std of Δ log σ scaled by dt**H, using the latest rolling H."""
    x = np.asarray(log_vol_changes, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DegenerateSeries("need at least 2 log-vol changes")
    if not np.isfinite(x).all():
        raise DegenerateSeries("non-finite log-vol changes")
    if not 0.0 < hurst_current < 1.0:
        raise InvalidParams(f"hurst_current={hurst_current} outside (0, 1)")
    if np.ptp(x) == 0.0:
        return 0.0
    return float(np.std(x, ddof=1)) / dt ** hurst_current


def estimate_xi0(atm_implied_vol: float) -> float:
    if atm_implied_vol < 0:
        raise InvalidParams("implied vol must be non-negative")
    return float(atm_implied_vol) ** 2


def default_heston_reversion(atm_implied_vol: float, kappa: float = DEFAULT_KAPPA):
    """(kappa, theta) with theta anchored at the ATM implied variance."""
    return float(kappa), estimate_xi0(atm_implied_vol)


def calibrate(price_series, atm_vols, quote_date: int, atm_implied_vol: float,
              hurst_current: float, window: int = DEFAULT_CALIB_WINDOW,
              kappa: float = DEFAULT_KAPPA, r: float = DEFAULT_RATE) -> EngineParams:
    """Fit rho and eta on the trailing ``window`` days common to both series.

    Only dates up to ``quote_date`` are used.
    """
    common = np.intersect1d(price_series.dates, atm_vols.dates)
    common = common[common <= quote_date][-(window + 1):]
    if common.size < 4:
        raise InsufficientData(f"only {common.size} dates shared by prices and ATM vols")
    closes = price_series.closes[np.searchsorted(price_series.dates, common)]
    sigma = atm_vols.atm_implied_vols[np.searchsorted(atm_vols.dates, common)]
    if np.any(sigma <= 0):
        raise DegenerateSeries("ATM implied vols must be positive for log changes")
    rets = np.diff(np.log(closes))
    rho = estimate_rho(rets, np.diff(sigma))
    h = min(0.99, max(0.01, hurst_current))
    eta = estimate_eta(np.diff(np.log(sigma)), h)
    kappa, theta = default_heston_reversion(atm_implied_vol, kappa)
    xi0 = estimate_xi0(atm_implied_vol)
    return EngineParams(rho=rho, eta=eta, xi0=xi0, kappa=kappa, theta=theta, v0=xi0, r=r)

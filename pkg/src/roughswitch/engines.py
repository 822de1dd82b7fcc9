"""Path simulation under the dynamic-Hurst rough Bergomi and the Heston engines.

Both engines return a :class:`PathEnsemble` with the same layout. Random numbers come
from counter-based Philox substreams keyed by ``seed`` with the path index in the
counter, so any subset of paths can be regenerated independently of how the
ensemble is partitioned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calibration import EngineParams
from .errors import IndexOutOfRange, InvalidParams
from .forecaster import Regime

HURST_FLOOR = 0.01


class EngineTag(str, enum.Enum):
    ROUGH_BERGOMI = "RoughBergomi"
    HESTON = "Heston"


@dataclass(frozen=True)
class HurstPath:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise InvalidParams("Hurst path must be a non-empty vector")
        if not np.all((v > 0.0) & (v < 1.0)):
            raise InvalidParams("Hurst path values must lie in (0, 1)")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def constant(cls, hurst: float, steps: int) -> "HurstPath":
        return cls(np.full(steps, float(hurst)))


def hurst_path_from_forecast(forecast: Sequence[float], steps: int,
                             floor: float = HURST_FLOOR) -> HurstPath:
    """Fill the first len(forecast) steps with the forecast, then hold the last value."""
    f = np.asarray(forecast, dtype=float)
    if f.size == 0:
        raise InvalidParams("empty forecast")
    if f.size >= steps:
        v = f[:steps]
    else:
        v = np.concatenate([f, np.full(steps - f.size, f[-1])])
    return HurstPath(np.clip(v, floor, 1.0 - floor))


@dataclass(frozen=True)
class PathEnsemble:
    asset: np.ndarray  # (M, N+1)
    variance: np.ndarray  # (M, N+1), non-negative
    dW: np.ndarray  # (M, N) vol-driver increments
    grid: np.ndarray  # (N+1,) years
    engine_tag: EngineTag
    seed: int

    @property
    def n_paths(self) -> int:
        return self.asset.shape[0]

    @property
    def n_steps(self) -> int:
        return self.dW.shape[1]

    @property
    def spot(self) -> float:
        return float(self.asset[0, 0])

    @property
    def maturity(self) -> float:
        return float(self.grid[-1])


def path_normals(seed: int, n_paths: int, n_draws: int, first_path: int = 0) -> np.ndarray:
    """Standard normals, one Philox substream per path: shape (n_paths, n_draws)."""
    if seed < 0:
        raise InvalidParams("seed must be non-negative")
    out = np.empty((n_paths, n_draws))
    for i in range(n_paths):
        bitgen = np.random.Philox(key=seed, counter=[0, 0, 0, first_path + i])
        out[i] = np.random.Generator(bitgen).standard_normal(n_draws)
    return out


def volterra_weights(t_index: int, hurst) -> np.ndarray:
    """K_t(i) = (t-i+1)^a - (t-i)^a, a = H_t - 1/2, for i = 1..t with 0^a := 0."""
    values = np.asarray(getattr(hurst, "values", hurst), dtype=float)
    if not 1 <= t_index <= values.size:
        raise IndexOutOfRange(f"t_index {t_index} outside [1, {values.size}]")
    a = values[t_index - 1] - 0.5
    lag = np.arange(t_index - 1, -1, -1, dtype=float)  # t - i for i = 1..t
    upper = (lag + 1.0) ** a
    lower = np.zeros_like(lag)
    pos = lag > 0
    lower[pos] = lag[pos] ** a
    return upper - lower


def _validate(params: EngineParams, spot: float, maturity: float, paths: int, steps: int):
    if paths < 1 or steps < 1:
        raise InvalidParams("paths and steps must be >= 1")
    if not (spot > 0 and math.isfinite(spot)):
        raise InvalidParams("spot must be positive")
    if not (maturity > 0 and math.isfinite(maturity)):
        raise InvalidParams("maturity must be positive")
    if not isinstance(params, EngineParams):
        raise InvalidParams("params must be EngineParams")


def _asset_paths(spot, r, dt, var_left, zw, zb, rho):
    """Log-Euler with left-point variance; exact per-step martingale compensation."""
    sq = math.sqrt(dt)
    vol = np.sqrt(var_left)
    shocks = vol * sq * (rho * zw + math.sqrt(max(0.0, 1.0 - rho * rho)) * zb)
    log_inc = (r - 0.5 * var_left) * dt + shocks
    M, N = zw.shape
    asset = np.empty((M, N + 1))
    asset[:, 0] = spot
    asset[:, 1:] = spot * np.exp(np.cumsum(log_inc, axis=1))
    return asset


def simulate_rbergomi(params: EngineParams, hurst: HurstPath, spot: float, maturity_years: float,
                      paths: int, steps: int, seed: int, compensator: str = "exact") -> PathEnsemble:
    """Rough Bergomi with a per-step Hurst exponent.

    ``compensator="exact"`` uses the discrete variance of the simulated driver so that
    E[v_t] = xi0 at every step; ``"paper"`` uses the continuous-time 0.5*eta^2*s^(2H).
    """
    _validate(params, spot, maturity_years, paths, steps)
    if len(hurst) != steps:
        raise InvalidParams(f"Hurst path length {len(hurst)} != steps {steps}")
    if compensator not in ("exact", "paper"):
        raise InvalidParams(f"unknown compensator {compensator!r}")
    dt = maturity_years / steps
    z = path_normals(seed, paths, 2 * steps)
    zw, zb = z[:, :steps], z[:, steps:]

    H = hurst.values
    variance = np.empty((paths, steps + 1))
    variance[:, 0] = params.xi0
    for t in range(1, steps + 1):
        w = volterra_weights(t, H)
        scale = dt ** H[t - 1]  # sqrt(dt) from dW times dt^(H - 1/2)
        y = (zw[:, :t] @ w) * scale
        if compensator == "exact":
            var_y = float(w @ w) * scale * scale
        else:
            var_y = (t * dt) ** (2.0 * H[t - 1])
        variance[:, t] = params.xi0 * np.exp(params.eta * y - 0.5 * params.eta ** 2 * var_y)

    asset = _asset_paths(spot, params.r, dt, variance[:, :-1], zw, zb, params.rho)
    grid = np.arange(steps + 1) * dt
    return PathEnsemble(asset, variance, zw * math.sqrt(dt), grid, EngineTag.ROUGH_BERGOMI, seed)


def simulate_heston(params: EngineParams, spot: float, maturity_years: float,
                    paths: int, steps: int, seed: int) -> PathEnsemble:
    """Full-truncation Euler for the variance; the stored variance is max(v, 0)."""
    _validate(params, spot, maturity_years, paths, steps)
    dt = maturity_years / steps
    sq = math.sqrt(dt)
    z = path_normals(seed, paths, 2 * steps)
    zw, zb = z[:, :steps], z[:, steps:]

    raw = np.full(paths, params.v0, dtype=float)
    variance = np.empty((paths, steps + 1))
    variance[:, 0] = params.v0
    for t in range(steps):
        vp = np.maximum(raw, 0.0)
        raw = raw + params.kappa * (params.theta - vp) * dt + params.eta * np.sqrt(vp) * sq * zw[:, t]
        variance[:, t + 1] = np.maximum(raw, 0.0)

    asset = _asset_paths(spot, params.r, dt, variance[:, :-1], zw, zb, params.rho)
    grid = np.arange(steps + 1) * dt
    return PathEnsemble(asset, variance, zw * sq, grid, EngineTag.HESTON, seed)


def simulate(regime: Regime, params: EngineParams, spot: float, maturity_years: float,
             paths: int, steps: int, seed: int, hurst: Optional[HurstPath] = None,
             compensator: str = "exact") -> PathEnsemble:
    """Dispatch on the regime: Rough -> rough Bergomi, Smooth -> Heston."""
    if Regime(regime) is Regime.ROUGH:
        if hurst is None:
            raise InvalidParams("rough Bergomi needs a Hurst path")
        return simulate_rbergomi(params, hurst, spot, maturity_years, paths, steps, seed, compensator)
    return simulate_heston(params, spot, maturity_years, paths, steps, seed)

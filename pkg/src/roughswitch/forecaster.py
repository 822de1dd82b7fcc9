"""Multi-horizon Hurst forecasting with squared-error gradient-boosted trees.

Trees use exact greedy split search over midpoints between sorted unique feature
values, with at least ``MIN_LEAF`` samples per leaf. One booster is trained per
forecast horizon on the last ``lags`` Hurst values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import InsufficientData, NonFiniteInput, ShapeMismatch

MIN_LEAF = 2
MIN_FIT_ROWS = 16
ROUGH_THRESHOLD = 0.5


@dataclass(frozen=True)
class GbtConfig:
    rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_rows: int = MIN_FIT_ROWS


@dataclass(frozen=True)
class RegressionTree:
    """Flat array tree. ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            go_left = X[rows[active], feat[active]] < self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def leaf_values(self) -> np.ndarray:
        return self.value[self.feature < 0]


def _best_split(X: np.ndarray, y: np.ndarray):
    """Exhaustive search; returns (gain, feature, threshold) or None."""
    n, p = X.shape
    if n < 2 * MIN_LEAF:
        return None
    total = y.sum()
    base = total * total / n
    best = None
    for j in range(p):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        cs = np.cumsum(y[order])
        k = np.arange(MIN_LEAF, n - MIN_LEAF + 1)
        valid = xs[k - 1] < xs[k]
        if not valid.any():
            continue
        k = k[valid]
        left = cs[k - 1]
        gain = left * left / k + (total - left) ** 2 / (n - k) - base
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0]:
            lo, hi = xs[k[i] - 1], xs[k[i]]
            thr = 0.5 * (lo + hi)
            if not lo < thr:
                thr = hi
            best = (float(gain[i]), j, float(thr))
    return best


def fit_tree(X: np.ndarray, y: np.ndarray, max_depth: int) -> RegressionTree:
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []
    sse_scale = float(y @ y) + 1e-300

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        if depth >= max_depth:
            return node
        split = _best_split(X[idx], y[idx])
        if split is None or split[0] <= 1e-14 * sse_scale:
            return node
        _, j, thr = split
        mask = X[idx, j] < thr
        feature[node] = j
        threshold[node] = thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
    )


@dataclass(frozen=True)
class GbtModel:
    trees: List[RegressionTree]
    learning_rate: float
    base_prediction: float
    max_depth: int
    train_mse: List[float] = field(default_factory=list)  # entry k: MSE after k rounds

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], self.base_prediction)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_gbt(features, targets, rounds: int = 100, learning_rate: float = 0.1,
            max_depth: int = 3) -> GbtModel:
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"features {X.shape} vs targets {y.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("features and targets must be finite")
    if y.size < 2 * 2 ** max_depth:
        raise InsufficientData(f"{y.size} rows < {2 * 2 ** max_depth} needed for depth {max_depth}")
    if learning_rate <= 0 or max_depth < 1 or rounds < 0:
        raise ValueError("invalid boosting hyperparameters")

    # a constant target is reproduced exactly rather than via its rounded mean
    base = float(y[0]) if np.ptp(y) == 0.0 else float(y.mean())
    pred = np.full(y.size, base)
    mse = [float(np.mean((y - pred) ** 2))]
    trees = []
    for _ in range(rounds):
        tree = fit_tree(X, y - pred, max_depth)
        pred = pred + learning_rate * tree.predict(X)
        trees.append(tree)
        mse.append(float(np.mean((y - pred) ** 2)))
    return GbtModel(trees, float(learning_rate), base, int(max_depth), mse)


@dataclass(frozen=True)
class ForecastEnsemble:
    horizon_models: List[GbtModel]
    lags: int

    @property
    def horizon(self) -> int:
        return len(self.horizon_models)


@dataclass(frozen=True)
class ForecastPath:
    values: np.ndarray
    mean: float


class Regime(str, enum.Enum):
    ROUGH = "Rough"
    SMOOTH = "Smooth"


def lagged_dataset(values: np.ndarray, lags: int, h: int):
    """Rows are windows ``values[t-lags+1 .. t]`` (oldest first), target ``values[t+h]``."""
    n_rows = len(values) - lags - h + 1
    if n_rows <= 0:
        return np.empty((0, lags)), np.empty(0)
    X = np.lib.stride_tricks.sliding_window_view(values, lags)[:n_rows]
    y = values[lags - 1 + h: lags - 1 + h + n_rows]
    return np.array(X), np.array(y)


def train_horizon_models(hurst, horizon: int, lags: int = 5,
                         config: Optional[GbtConfig] = None) -> ForecastEnsemble:
    config = config or GbtConfig()
    values = np.asarray(getattr(hurst, "values", hurst), dtype=float)
    if horizon < 1 or lags < 1:
        raise ValueError("horizon and lags must be >= 1")
    min_rows = max(config.min_rows, 2 * 2 ** config.max_depth)
    available = len(values) - lags - horizon + 1
    if available < min_rows:
        raise InsufficientData(
            f"{len(values)} Hurst values give {max(available, 0)} rows at horizon {horizon}; need {min_rows}")
    models = []
    for h in range(1, horizon + 1):
        X, y = lagged_dataset(values, lags, h)
        models.append(fit_gbt(X, y, config.rounds, config.learning_rate, config.max_depth))
    return ForecastEnsemble(models, lags)


def predict_path(ensemble: ForecastEnsemble, latest_lags: Sequence[float]) -> ForecastPath:
    x = np.asarray(latest_lags, dtype=float)
    if x.shape != (ensemble.lags,):
        raise ShapeMismatch(f"expected {ensemble.lags} lags, got shape {x.shape}")
    values = np.array([float(m.predict(x[None, :])[0]) for m in ensemble.horizon_models])
    values = np.clip(values, 0.0, 1.0)
    return ForecastPath(values, float(np.mean(values)))


def select_regime(mean_hurst: float, override: Optional[str] = None,
                  threshold: float = ROUGH_THRESHOLD) -> Regime:
    """Rough iff the mean forecast is strictly below ``threshold``.

    ``override`` forces an engine (``"rbergomi"``/``"rough"`` or ``"heston"``/``"smooth"``);
    ``"auto"`` or None applies the rule.
    """
    if override not in (None, "auto"):
        o = str(override).lower()
        if o in ("rbergomi", "rough"):
            return Regime.ROUGH
        if o in ("heston", "smooth"):
            return Regime.SMOOTH
        raise ValueError(f"unknown engine override {override!r}")
    if not np.isfinite(mean_hurst):
        raise NonFiniteInput("mean Hurst must be finite")
    return Regime.ROUGH if mean_hurst < threshold else Regime.SMOOTH

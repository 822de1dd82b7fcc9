"""Small fully-connected regressor (two tanh hidden layers) trained with mini-batch Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import NonFiniteLoss
from .kernels import Standardizer


@dataclass(frozen=True)
class MlpConfig:
    hidden: Tuple[int, ...] = (32, 32)
    epochs: int = 30
    batch_size: int = 256
    learning_rate: float = 5e-3
    seed: int = 0


def init_params(n_in: int, hidden: Sequence[int], rng: np.random.Generator) -> List[np.ndarray]:
    sizes = [n_in, *hidden, 1]
    params = []
    for a, b in zip(sizes[:-2], sizes[1:-1]):
        params.append(rng.normal(0.0, math.sqrt(2.0 / (a + b)), size=(a, b)))
        params.append(np.zeros(b))
    # zero output layer: training starts from the mean predictor
    params.append(np.zeros((sizes[-2], 1)))
    params.append(np.zeros(1))
    return params


def forward(params: List[np.ndarray], X: np.ndarray):
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for k in range(n_layers):
        z = h @ params[2 * k] + params[2 * k + 1]
        h = np.tanh(z) if k < n_layers - 1 else z
        acts.append(h)
    return h[:, 0], acts


def loss_and_grad(params: List[np.ndarray], X: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient with respect to every parameter array."""
    pred, acts = forward(params, X)
    n = X.shape[0]
    err = pred - y
    loss = float(err @ err) / n
    grads = [None] * len(params)
    delta = (2.0 / n) * err[:, None]
    n_layers = len(params) // 2
    for k in range(n_layers - 1, -1, -1):
        grads[2 * k] = acts[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ params[2 * k].T) * (1.0 - acts[k] ** 2)
    return loss, grads


@dataclass(frozen=True)
class MlpModel:
    params: List[np.ndarray]
    x_std: Standardizer
    y_mean: float
    y_scale: float
    loss_trace: List[float] = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        out, _ = forward(self.params, self.x_std(np.asarray(X, dtype=float)))
        return self.y_mean + self.y_scale * out


def deep_mlp_fit(features, targets, config: MlpConfig = MlpConfig()) -> MlpModel:
    """Fit on standardized inputs and targets; raises NonFiniteLoss on divergence."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise ValueError(f"features {X.shape} vs targets {y.shape}")
    rng = np.random.default_rng(config.seed)
    x_std = Standardizer.fit(X)
    Z = x_std(X)
    y_mean = float(y.mean())
    y_scale = float(y.std())
    if not y_scale > 1e-12 * max(1.0, abs(y_mean)):
        y_scale = 1.0
    t = (y - y_mean) / y_scale
    if np.ptp(y) == 0.0:
        # residue from the mean would be amplified by Adam's normalization
        t = np.zeros_like(t)

    params = init_params(X.shape[1], config.hidden, rng)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    trace = []
    n = X.shape[0]
    bs = max(1, min(config.batch_size, n))
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = loss_and_grad(params, Z[idx], t[idx])
            if not math.isfinite(loss):
                raise NonFiniteLoss("MLP training diverged")
            epoch_loss += loss * idx.size
            step += 1
            lr = config.learning_rate * math.sqrt(1 - b2 ** step) / (1 - b1 ** step)
            for k, g in enumerate(grads):
                m[k] = b1 * m[k] + (1 - b1) * g
                v[k] = b2 * v[k] + (1 - b2) * g * g
                params[k] = params[k] - lr * m[k] / (np.sqrt(v[k]) + eps)
        trace.append(epoch_loss / n)
    final, _ = forward(params, Z)
    if not np.all(np.isfinite(final)):
        raise NonFiniteLoss("MLP produced non-finite predictions")
    return MlpModel(params, x_std, y_mean, y_scale, trace)

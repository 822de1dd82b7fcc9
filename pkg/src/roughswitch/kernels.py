"""Gaussian RBF kernel, its Random Fourier Feature approximation, and ridge regression."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, LengthMismatch, SingularSystem

DEFAULT_D = 128
DEFAULT_LAMBDA = 1e-3
MEDIAN_SUBSET = 256


def rbf(x, y, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"{x.shape} vs {y.shape}")
    if gamma < 0:
        raise InvalidParams("gamma must be non-negative")
    diff = x - y
    return math.exp(-gamma * float(diff @ diff))


def median_heuristic_gamma(X, seed: int = 0, subset: int = MEDIAN_SUBSET) -> float:
    """gamma = 1 / (2 * median^2) of pairwise distances on a seeded row subset."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] > subset:
        idx = np.sort(np.random.default_rng(seed).choice(X.shape[0], subset, replace=False))
        X = X[idx]
    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    iu = np.triu_indices(X.shape[0], k=1)
    med2 = float(np.median(d2[iu]))
    if not med2 > 0:
        return 1.0
    return 1.0 / (2.0 * med2)


@dataclass(frozen=True)
class RffMap:
    projection: np.ndarray  # (m, D), entries ~ N(0, 2*gamma)
    gamma: float
    seed: int

    @property
    def D(self) -> int:
        return self.projection.shape[1]

    @property
    def m(self) -> int:
        return self.projection.shape[0]

    @property
    def dim(self) -> int:
        return 2 * self.D


def sample_rff(m: int, D: int = DEFAULT_D, gamma: float = 1.0, seed: int = 0) -> RffMap:
    if m < 1 or D < 1 or not gamma > 0:
        raise InvalidParams(f"need m, D >= 1 and gamma > 0 (m={m}, D={D}, gamma={gamma})")
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, math.sqrt(2.0 * gamma), size=(m, D))
    return RffMap(W, float(gamma), seed)


def rff_embed(x, rff: RffMap) -> np.ndarray:
    """sqrt(1/D) [cos(W^T x), sin(W^T x)]; accepts a vector or a row matrix."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != rff.m:
        raise LengthMismatch(f"input length {x.shape[-1]} != map input dim {rff.m}")
    z = x @ rff.projection
    return np.concatenate([np.cos(z), np.sin(z)], axis=-1) / math.sqrt(rff.D)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 1e-12 * np.maximum(1.0, np.abs(mean)), scale, 1.0)
        return cls(mean, scale)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray
    intercept: float
    regularization: float
    standardizer: Standardizer

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.intercept + self.standardizer(X) @ self.weights


def ridge_fit(features, targets, lam: float = DEFAULT_LAMBDA) -> RidgeModel:
    """Minimize ||Fw - y||^2 + lam ||w||^2 on standardized features, intercept unpenalized."""
    F = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if F.ndim != 2 or F.shape[0] != y.shape[0] or F.shape[0] < 1:
        raise LengthMismatch(f"features {F.shape} vs targets {y.shape}")
    if lam < 0:
        raise InvalidParams("lambda must be non-negative")
    std = Standardizer.fit(F)
    Z = std(F)
    ybar = float(y.mean())
    A = Z.T @ Z
    A[np.diag_indices_from(A)] += lam
    b = Z.T @ (y - ybar)
    if lam == 0.0:
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise SingularSystem("rank-deficient normal equations with lambda = 0")
        w = np.linalg.solve(A, b)
    else:
        try:
            c = np.linalg.cholesky(A)
            w = np.linalg.solve(c.T, np.linalg.solve(c, b))
        except np.linalg.LinAlgError:
            raise SingularSystem("normal equations not positive definite") from None
    return RidgeModel(w, ybar, float(lam), std)

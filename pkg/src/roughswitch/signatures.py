"""Truncated (depth 3) signatures and log-signatures of piecewise-linear paths.

Elements of the truncated tensor algebra are flat vectors laid out level by level:
``[1 | d | d^2 | d^3]`` with row-major word order, so level-k coordinate of word
``(i1, .., ik)`` sits at ``offset_k + i1*d^(k-1) + .. + ik``. All tensor routines
accept leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import IndexOutOfRange, InvalidParams, NotGroupLike, UnknownChannel

DEPTH = 3
CHANNELS = ("time", "vol", "price")
_VAR_FLOOR = 1e-8


def sig_dim(d: int, depth: int = DEPTH) -> int:
    return sum(d ** k for k in range(depth + 1))


def channel_count(m: int) -> int:
    for d in range(1, 64):
        if sig_dim(d) == m:
            return d
    raise InvalidParams(f"{m} is not a depth-3 signature length")


def levels(x: np.ndarray, d: int) -> Tuple[np.ndarray, ...]:
    """Split a flat element into its four levels (views)."""
    o1, o2, o3 = 1, 1 + d, 1 + d + d * d
    return x[..., 0], x[..., o1:o2], x[..., o2:o3], x[..., o3:o3 + d ** 3]


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a[..., :, None] * b[..., None, :]
    return out.reshape(out.shape[:-2] + (-1,))


def tensor_product(a: np.ndarray, b: np.ndarray, d: int) -> np.ndarray:
    """Product in the tensor algebra truncated at level 3."""
    a0, a1, a2, a3 = levels(a, d)
    b0, b1, b2, b3 = levels(b, d)
    a0, b0 = a0[..., None], b0[..., None]
    c0 = a0 * b0
    c1 = a0 * b1 + a1 * b0
    c2 = a0 * b2 + _outer(a1, b1) + a2 * b0
    c3 = a0 * b3 + _outer(a1, b2) + _outer(a2, b1) + a3 * b0
    return np.concatenate([c0, c1, c2, c3], axis=-1)


def unit(d: int, batch: Tuple[int, ...] = ()) -> np.ndarray:
    e = np.zeros(batch + (sig_dim(d),))
    e[..., 0] = 1.0
    return e


def tensor_exp(x: np.ndarray, d: int) -> np.ndarray:
    """exp(x) = 1 + x + x^2/2 + x^3/6 for x with zero scalar part."""
    x = np.array(x, dtype=float)
    x[..., 0] = 0.0
    x2 = tensor_product(x, x, d)
    x3 = tensor_product(x2, x, d)
    out = x + x2 / 2.0 + x3 / 6.0
    out[..., 0] = 1.0
    return out


def tensor_log(s: np.ndarray, d: int) -> np.ndarray:
    """log(s) = A - A^2/2 + A^3/3 with A = s - 1."""
    s = np.asarray(s, dtype=float)
    if not np.allclose(s[..., 0], 1.0, rtol=0, atol=1e-12):
        raise NotGroupLike("scalar coordinate must be 1")
    a = s.copy()
    a[..., 0] = 0.0
    a2 = tensor_product(a, a, d)
    a3 = tensor_product(a2, a, d)
    out = a - a2 / 2.0 + a3 / 3.0
    out[..., 0] = 0.0
    return out


def segment_signature(delta: np.ndarray) -> np.ndarray:
    """Signature of one linear segment: levels delta^{(x)k}/k!."""
    delta = np.asarray(delta, dtype=float)
    one = np.ones(delta.shape[:-1] + (1,))
    l2 = _outer(delta, delta)
    l3 = _outer(l2, delta)
    return np.concatenate([one, delta, l2 / 2.0, l3 / 6.0], axis=-1)


def chen_step(sig: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """sig (x) exp(delta), expanded to avoid building the full product."""
    d = delta.shape[-1]
    s0, s1, s2, s3 = levels(sig, d)
    dd = _outer(delta, delta)
    c1 = s1 + delta
    c2 = s2 + _outer(s1, delta) + dd / 2.0
    c3 = s3 + _outer(s2, delta) + _outer(s1, dd) / 2.0 + _outer(dd, delta) / 6.0
    return np.concatenate([s0[..., None], c1, c2, c3], axis=-1)


@dataclass(frozen=True)
class SignatureVector:
    coords: np.ndarray
    d: int
    depth: int = DEPTH

    def level(self, k: int) -> np.ndarray:
        return levels(self.coords, self.d)[k]


@dataclass(frozen=True)
class LogSignatureVector:
    coords: np.ndarray
    d: int


@dataclass(frozen=True)
class AugmentedPath:
    """Points of shape (N+1, d) or, for a batch of paths, (M, N+1, d)."""

    points: np.ndarray
    channel_names: Tuple[str, ...]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim not in (2, 3) or pts.shape[-1] < 2:
            raise InvalidParams("augmented path needs d >= 2 channels")
        if "time" in self.channel_names:
            t = pts[..., self.channel_names.index("time")]
            if not np.all(np.diff(t, axis=-1) > 0):
                raise InvalidParams("time channel must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def d(self) -> int:
        return self.points.shape[-1]

    @property
    def n_steps(self) -> int:
        return self.points.shape[-2] - 1

    def __len__(self) -> int:
        return self.points.shape[0] if self.points.ndim == 3 else 1

    def __getitem__(self, i) -> "AugmentedPath":
        if self.points.ndim != 3:
            raise TypeError("single path is not indexable")
        return AugmentedPath(self.points[i], self.channel_names)


def parse_channels(channels: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    names = tuple(c.strip() for c in channels.split(",")) if isinstance(channels, str) else tuple(channels)
    for c in names:
        if c not in CHANNELS:
            raise UnknownChannel(c)
    if len(set(names)) != len(names):
        raise InvalidParams(f"duplicate channels in {names}")
    if len(names) < 2:
        raise InvalidParams("need at least two channels")
    return names


def time_augment(ensemble, channels: Union[str, Sequence[str]] = CHANNELS) -> AugmentedPath:
    """Stack (t in years, log variance, log(X/spot)) channels for every path."""
    names = parse_channels(channels)
    M = ensemble.asset.shape[0]
    cols = []
    for c in names:
        if c == "time":
            cols.append(np.broadcast_to(ensemble.grid, (M, ensemble.grid.size)))
        elif c == "vol":
            cols.append(np.log(np.maximum(ensemble.variance, _VAR_FLOOR)))
        else:
            cols.append(np.log(ensemble.asset / ensemble.asset[:, :1]))
    return AugmentedPath(np.stack(cols, axis=-1), names)


def signature_stream(points: np.ndarray) -> np.ndarray:
    """Signatures from time 0 to every grid point: (..., N+1, d) -> (..., N+1, m)."""
    points = np.asarray(points, dtype=float)
    d = points.shape[-1]
    n = points.shape[-2]
    batch = points.shape[:-2]
    out = np.empty(batch + (n, sig_dim(d)))
    cur = unit(d, batch)
    out[..., 0, :] = cur
    deltas = np.diff(points, axis=-2)
    for k in range(n - 1):
        cur = chen_step(cur, deltas[..., k, :])
        out[..., k + 1, :] = cur
    return out


def signature(path: AugmentedPath, upto: int = None, depth: int = DEPTH) -> SignatureVector:
    """Exact depth-3 signature of the piecewise-linear path over steps [0, upto]."""
    if depth != DEPTH:
        raise InvalidParams("only depth 3 is supported")
    pts = path.points
    if pts.ndim != 2:
        raise InvalidParams("signature() takes a single path; use signature_stream for batches")
    n = pts.shape[0] - 1
    upto = n if upto is None else upto
    if not 1 <= upto <= n:
        raise IndexOutOfRange(f"upto={upto} outside [1, {n}]")
    d = pts.shape[1]
    cur = unit(d)
    for delta in np.diff(pts[:upto + 1], axis=0):
        cur = chen_step(cur, delta)
    return SignatureVector(cur, d)


def log_signature(sig: Union[SignatureVector, np.ndarray], d: int = None) -> LogSignatureVector:
    if isinstance(sig, SignatureVector):
        coords, d = sig.coords, sig.d
    else:
        coords = np.asarray(sig, dtype=float)
        d = d if d is not None else channel_count(coords.shape[-1])
    return LogSignatureVector(tensor_log(coords, d), d)

"""Independent reference computations used as test oracles.

Nothing here imports the code paths it checks.
"""

import itertools
import math

import numpy as np


def iterated_integrals(points, substeps=10_000):
    """Depth-3 iterated integrals of a piecewise-linear path by direct quadrature.

    Integrates dS = S (x) dX on a fine subdivision with a trapezoid rule at each level.
    Returns the flat [1 | d | d^2 | d^3] vector.
    """
    points = np.asarray(points, dtype=float)
    n_seg = len(points) - 1
    per = max(1, substeps // n_seg)
    fine = [points[0:1]]
    for a, b in zip(points[:-1], points[1:]):
        s = np.arange(1, per + 1)[:, None] / per
        fine.append(a + s * (b - a))
    fine = np.vstack(fine)
    dxs = np.diff(fine, axis=0)
    d = points.shape[1]
    i1 = np.zeros(d)
    i2 = np.zeros((d, d))
    i3 = np.zeros((d, d, d))
    for dx in dxs:
        n1 = i1 + dx
        n2 = i2 + np.outer(0.5 * (i1 + n1), dx)
        n3 = i3 + np.multiply.outer(0.5 * (i2 + n2), dx)
        i1, i2, i3 = n1, n2, n3
    return np.concatenate([[1.0], i1, i2.ravel(), i3.ravel()])


def word_product(a, b, d, depth=3):
    """Truncated tensor product, word by word (dict over words)."""
    out = {}
    for wa, va in a.items():
        for wb, vb in b.items():
            w = wa + wb
            if len(w) <= depth:
                out[w] = out.get(w, 0.0) + va * vb
    return out


def to_words(flat, d, depth=3):
    out = {}
    pos = 0
    for k in range(depth + 1):
        for w in itertools.product(range(d), repeat=k):
            out[w] = float(flat[pos])
            pos += 1
    return out


def from_words(words, d, depth=3):
    flat = []
    for k in range(depth + 1):
        for w in itertools.product(range(d), repeat=k):
            flat.append(words.get(w, 0.0))
    return np.array(flat)


def word_exp(x_flat, d, depth=3):
    """exp by power series on word dictionaries."""
    x = to_words(x_flat, d, depth)
    x[()] = 0.0
    result = {(): 1.0}
    term = {(): 1.0}
    for k in range(1, depth + 1):
        term = word_product(term, x, d, depth)
        term = {w: v / k for w, v in term.items()}
        for w, v in term.items():
            result[w] = result.get(w, 0.0) + v
    return from_words(result, d, depth)


def black_scholes_put(spot, strike, vol, T, r):
    sq = vol * math.sqrt(T)
    d1 = (math.log(spot / strike) + (r + 0.5 * vol * vol) * T) / sq
    d2 = d1 - sq
    Phi = lambda x: 0.5 * math.erfc(-x / math.sqrt(2.0))  # noqa: E731
    return strike * math.exp(-r * T) * Phi(-d2) - spot * Phi(-d1)


def exhaustive_stump(x, y):
    """Best single split on one feature by trying every midpoint; returns (thr, left_mean, right_mean)."""
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    best = None
    for k in range(1, len(xs)):
        if xs[k - 1] == xs[k]:
            continue
        l, r = ys[:k], ys[k:]
        sse = ((l - l.mean()) ** 2).sum() + ((r - r.mean()) ** 2).sum()
        if best is None or sse < best[0]:
            best = (sse, 0.5 * (xs[k - 1] + xs[k]), l.mean(), r.mean())
    return best[1:]


def pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def ridge_lstsq(F, y, lam):
    """Ridge via least squares on the augmented system [Z; sqrt(lam) I] w = [y - ybar; 0]."""
    mu = F.mean(axis=0)
    sd = F.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (F - mu) / sd
    p = F.shape[1]
    A = np.vstack([Z, math.sqrt(lam) * np.eye(p)])
    b = np.concatenate([y - y.mean(), np.zeros(p)])
    w, *_ = np.linalg.lstsq(A, b, rcond=None)
    return y.mean() + Z @ w

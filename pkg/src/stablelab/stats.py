"""Small statistical toolkit: Hill estimator, KS distances, distance correlation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HillResult",
    "hill_estimate",
    "ks_distance",
    "ks_two_sample",
    "ks_one_sample",
    "distance_correlation",
    "rank_transform",
    "factorization_error",
    "standard_error",
]


@dataclass(frozen=True)
class HillResult:
    alpha: float
    ci_low: float
    ci_high: float
    k: int
    threshold: float


def hill_estimate(samples, top_fraction: float = 0.05, min_exceedances: int = 100) -> HillResult:
    """Hill tail-index estimate from the top ``top_fraction`` of positive samples.

    The 95% band is the asymptotic ``alpha_hat (1 +- 1.96 / sqrt(k))``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    x = x[x > 0]
    k = int(math.floor(top_fraction * len(x)))
    if k < min_exceedances:
        raise ValueError(f"need at least {min_exceedances} exceedances, got {k}")
    top = np.partition(x, len(x) - k - 1)[len(x) - k - 1 :]
    thr = top.min()
    logs = np.log(top) - math.log(thr)
    h = logs.sum() / k
    if h <= 0:
        raise ValueError("no tail: the top order statistics are all equal")
    a = 1.0 / h
    half = 1.96 * a / math.sqrt(k)
    return HillResult(a, a - half, a + half, k, float(thr))


def _ecdf_gap(a_sorted, b_sorted, grid):
    fa = np.searchsorted(a_sorted, grid, side="right") / len(a_sorted)
    fb = np.searchsorted(b_sorted, grid, side="right") / len(b_sorted)
    return float(np.max(np.abs(fa - fb)))


def ks_distance(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty sample")
    return _ecdf_gap(a, b, np.concatenate([a, b]))


def ks_two_sample(a, b, permutations: int = 1000, rng: np.random.Generator | None = None,
                  batch: int = 50):
    """Two-sample KS distance with a permutation p-value ``(1 + #{D* >= D}) / (1 + P)``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty sample")
    d = ks_distance(a, b)
    if permutations <= 0:
        return d, float("nan")
    rng = np.random.default_rng(0) if rng is None else rng
    pooled = np.concatenate([a, b])
    order = np.argsort(pooled, kind="stable")
    ps = pooled[order]
    # evaluate only at the last index of each run of ties
    last = np.append(ps[1:] != ps[:-1], True)
    na, nb = len(a), len(b)
    labels = np.zeros(len(pooled), dtype=np.int8)
    labels[:na] = 1
    hits = 0
    done = 0
    while done < permutations:
        m = min(batch, permutations - done)
        lab = np.stack([rng.permutation(labels) for _ in range(m)])
        ca = np.cumsum(lab, axis=1, dtype=np.int64)
        cb = np.arange(1, len(pooled) + 1) - ca
        gap = np.abs(ca[:, last] / na - cb[:, last] / nb).max(axis=1)
        hits += int(np.sum(gap >= d - 1e-12))
        done += m
    return d, (1 + hits) / (1 + permutations)


def ks_one_sample(samples, cdf) -> float:
    """``sup |F_emp - F|`` for a continuous ``F``, with ties handled exactly."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if len(x) == 0:
        raise ValueError("empty sample")
    u, idx_last = np.unique(x, return_index=False, return_counts=True)
    hi = np.cumsum(idx_last) / len(x)
    lo = hi - idx_last / len(x)
    F = np.asarray(cdf(u), dtype=float)
    return float(max(np.max(np.abs(hi - F)), np.max(np.abs(F - lo))))


def rank_transform(x) -> np.ndarray:
    """Ranks scaled to ``(0, 1)``; ties share their average rank."""
    from scipy.stats import rankdata

    x = np.asarray(x, dtype=float)
    return rankdata(x, axis=0) / (len(x) + 1)


def _u_centered(x):
    n = len(x)
    a = np.abs(x[:, None] - x[None, :]) if x.ndim == 1 else np.sqrt(
        ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    rs = a.sum(axis=1)
    tot = rs.sum()
    a -= rs[:, None] / (n - 2)
    a -= rs[None, :] / (n - 2)
    a += tot / ((n - 1) * (n - 2))
    np.fill_diagonal(a, 0.0)
    return a


def distance_correlation(x, y, ranks: bool = True) -> float:
    """Bias-corrected distance correlation (U-centered), optionally on ranks.

    Heavy-tailed samples with ``alpha < 1`` have no first moment, so the default
    works on rank-transformed margins, which keeps the statistic well defined and
    leaves independence untouched.  Negative bias-corrected values are clipped to 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 4:
        raise ValueError("need paired samples of size >= 4")
    if ranks:
        x, y = rank_transform(x), rank_transform(y)
    n = len(x)
    A = _u_centered(x)
    B = _u_centered(y)
    scale = 1.0 / (n * (n - 3))
    xy = (A * B).sum() * scale
    xx = (A * A).sum() * scale
    yy = (B * B).sum() * scale
    if xx <= 0 or yy <= 0:
        return 0.0
    r2 = xy / math.sqrt(xx * yy)
    return float(math.sqrt(max(r2, 0.0)))


def factorization_error(x, y, quantiles=(0.25, 0.5, 0.75)) -> float:
    """``max |F(x_a, y_b) - F_x(x_a) F_y(y_b)|`` on a grid of marginal quantiles."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    qx = np.quantile(x, quantiles)
    qy = np.quantile(y, quantiles)
    bx = x[:, None] <= qx[None, :]
    by = y[:, None] <= qy[None, :]
    joint = (bx[:, :, None] & by[:, None, :]).mean(axis=0)
    prod = bx.mean(axis=0)[:, None] * by.mean(axis=0)[None, :]
    return float(np.max(np.abs(joint - prod)))


def standard_error(p, n: int):
    p = np.asarray(p, dtype=float)
    return np.sqrt(np.clip(p * (1 - p), 0, None) / n)

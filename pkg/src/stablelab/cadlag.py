"""Finitely represented cadlag paths, Skorohod J1 distances and tightness moduli.

A path on ``[0, T]`` is stored as breakpoints ``0 = t_0 < ... < t_m <= T`` with a
value (and optionally a slope) per segment ``[t_i, t_{i+1})``.  When ``t_m == T``
the last segment is the single point ``{T}``, which is how partial-sum paths carry
their terminal value ``S_n / B_n``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import ndimage

__all__ = [
    "CadlagPath",
    "TimeChange",
    "from_partial_sums",
    "j1_distance",
    "j1_distance_infinite",
    "sup_distance",
    "modulus",
    "partial_sum_moduli",
    "occupation_fraction",
    "path_to_csv",
    "path_from_csv",
]

_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CadlagPath:
    times: np.ndarray
    values: np.ndarray
    horizon: float
    slopes: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or len(t) == 0 or len(t) != len(v):
            raise ValueError("need one value row per breakpoint")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        if not self.horizon > 0 or t[-1] > self.horizon:
            raise ValueError("last breakpoint must not exceed the horizon")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "horizon", float(self.horizon))
        if self.slopes is not None:
            s = np.asarray(self.slopes, dtype=float).reshape(v.shape)
            object.__setattr__(self, "slopes", s if np.any(s != 0) else None)

    @classmethod
    def constant(cls, value, horizon: float = 1.0) -> "CadlagPath":
        return cls(np.array([0.0]), np.atleast_2d(np.asarray(value, dtype=float)), horizon)

    @classmethod
    def step(cls, jump_times, jump_sizes, horizon: float = 1.0, start=0.0) -> "CadlagPath":
        """Path equal to ``start`` plus the jumps that occurred up to time t."""
        jt = np.asarray(jump_times, dtype=float)
        js = np.asarray(jump_sizes, dtype=float)
        start = np.atleast_1d(np.asarray(start, dtype=float))
        if js.ndim == 1:
            js = js[:, None] * np.ones(len(start))
        order = np.argsort(jt, kind="stable")
        jt, js = jt[order], js[order]
        vals = start + np.concatenate([np.zeros((1, js.shape[1])), np.cumsum(js, axis=0)])
        return cls(np.concatenate([[0.0], jt]), vals, horizon)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def is_step(self) -> bool:
        return self.slopes is None

    def _seg_index(self, t):
        return np.searchsorted(self.times, t, side="right") - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = self._seg_index(np.minimum(t, self.horizon))
        out = self.values[idx]
        if self.slopes is not None:
            dt = (np.minimum(t, self.horizon) - self.times[idx])[..., None]
            out = out + self.slopes[idx] * dt
        return out

    def left_limit(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="left") - 1
        idx = np.maximum(idx, 0)
        out = self.values[idx]
        if self.slopes is not None:
            out = out + self.slopes[idx] * (t - self.times[idx])[..., None]
        return out

    def terminal(self, s: float | None = None) -> np.ndarray:
        return self(self.horizon if s is None else s)

    def restrict(self, s: float) -> "CadlagPath":
        """Restriction to ``[0, s]``; beyond the horizon the path is continued constantly."""
        if s <= 0:
            raise ValueError("restriction horizon must be positive")
        keep = self.times <= s
        t = self.times[keep]
        v = self.values[keep]
        sl = None if self.slopes is None else self.slopes[keep]
        if s > self.horizon:
            if t[-1] == self.horizon:
                # the terminal point becomes an ordinary segment
                if sl is not None:
                    sl = sl.copy()
                    sl[-1] = 0.0
            else:
                tv = self(self.horizon)
                t = np.append(t, self.horizon)
                v = np.vstack([v, tv])
                if sl is not None:
                    sl = np.vstack([sl, np.zeros(self.dim)])
        return CadlagPath(t, v, s, sl)

    def jumps(self, s: float | None = None):
        """Jump times in ``(0, s)`` and post-jump values, for step paths."""
        s = self.horizon if s is None else s
        if not self.is_step:
            raise ValueError("jump extraction needs a step path")
        t, v = self.times, self.values
        inner = (t > 0) & (t < s)
        change = np.any(v[1:] != v[:-1], axis=1)
        mask = inner[1:] & change
        return t[1:][mask], v[1:][mask]

    def breakpoints(self) -> np.ndarray:
        return self.times


@dataclass(frozen=True)
class TimeChange:
    """Increasing piecewise-linear homeomorphism of ``[0, T]``."""

    knots: np.ndarray
    images: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        im = np.asarray(self.images, dtype=float)
        if len(k) < 2 or len(k) != len(im):
            raise ValueError("need matching knots and images")
        if k[0] != 0 or im[0] != 0 or k[-1] != im[-1]:
            raise ValueError("lambda must fix 0 and T")
        if np.any(np.diff(k) <= 0) or np.any(np.diff(im) <= 0):
            raise ValueError("lambda must be strictly increasing")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "images", im)

    @classmethod
    def identity(cls, T: float = 1.0) -> "TimeChange":
        return cls(np.array([0.0, T]), np.array([0.0, T]))

    def __call__(self, t):
        return np.interp(t, self.knots, self.images)

    def inverse(self, u):
        return np.interp(u, self.images, self.knots)

    def distortion(self) -> float:
        return float(np.max(np.abs(self.images - self.knots)))


def from_partial_sums(sums, B: float, A, n: int) -> CadlagPath:
    """Path ``t -> (S_[tn] - ([tn]/n) A) / B`` on ``[0, 1]``."""
    s = np.asarray(sums, dtype=float)
    if s.size == 0:
        raise ValueError("empty partial sums")
    if s.ndim == 1:
        s = s[:, None]
    if len(s) != n + 1:
        raise ValueError("expected S_0..S_n")
    if not B > 0:
        raise ValueError("B must be positive")
    if np.any(s[0] != 0):
        raise ValueError("S_0 must vanish")
    A = np.broadcast_to(np.asarray(A, dtype=float), (s.shape[1],))
    k = np.arange(n + 1)[:, None]
    vals = (s - (k / n) * A) / B
    return CadlagPath(np.arange(n + 1) / n, vals, 1.0)


def _norm_rows(a):
    return np.sqrt(np.sum(a * a, axis=-1))


def _eval_points(x: CadlagPath, y: CadlagPath, s: float):
    """Right values and left limits of ``x - y`` at all merged breakpoints in ``[0, s]``."""
    pts = np.union1d(x.times[x.times <= s], y.times[y.times <= s])
    pts = np.union1d(pts, [s])
    right = x(pts) - y(pts)
    left = x.left_limit(pts) - y.left_limit(pts)
    return pts, right, left


def sup_distance(x: CadlagPath, y: CadlagPath, s: float | None = None) -> float:
    if x.dim != y.dim:
        raise ValueError("dimension mismatch")
    s = min(x.horizon, y.horizon) if s is None else s
    _, right, left = _eval_points(x, y, s)
    return float(max(_norm_rows(right).max(), _norm_rows(left).max()))


@numba.njit(cache=True)
def _j1_bottleneck(cost, tau, sigma, s):
    """Min over lattice paths of the max cost.

    ``cost[i, j]`` is the distance between x after i jumps and y after j jumps.
    Moves: x jump alone inside gap j (pays distance from tau_i to [sigma_j, sigma_{j+1}]),
    y jump alone (free), or a matched pair (pays |tau_i - sigma_j|).
    """
    m = len(tau)
    M = len(sigma)
    INF = np.inf
    best = np.full((m + 1, M + 1), INF)
    best[0, 0] = cost[0, 0]
    for i in range(m + 1):
        for j in range(M + 1):
            if i == 0 and j == 0:
                continue
            c = INF
            if i > 0:
                lo = 0.0 if j == 0 else sigma[j - 1]
                hi = s if j == M else sigma[j]
                t = tau[i - 1]
                gap = lo - t if t < lo else (t - hi if t > hi else 0.0)
                c = min(c, max(best[i - 1, j], gap))
                if j > 0:
                    c = min(c, max(best[i - 1, j - 1], abs(t - sigma[j - 1])))
            if j > 0:
                c = min(c, best[i, j - 1])
            best[i, j] = max(c, cost[i, j])
    return best[m, M]


def _j1_step(x: CadlagPath, y: CadlagPath, s: float) -> float:
    tau, xv = x.jumps(s)
    sig, yv = y.jumps(s)
    X = np.vstack([x.values[:1], xv])
    Y = np.vstack([y.values[:1], yv])
    cost = _norm_rows(X[:, None, :] - Y[None, :, :])
    d = _j1_bottleneck(cost, tau, sig, float(s))
    end = float(np.linalg.norm(x(s) - y(s)))
    return float(max(d, end))


@numba.njit(cache=True)
def _matching_dp(cost, tau, sigma):
    """Bottleneck-optimal monotone partial matching of jump times (pair costs only)."""
    m = len(tau)
    M = len(sigma)
    best = np.full((m + 1, M + 1), np.inf)
    move = np.zeros((m + 1, M + 1), dtype=np.int8)
    best[0, 0] = cost[0, 0]
    for i in range(m + 1):
        for j in range(M + 1):
            if i == 0 and j == 0:
                continue
            c = np.inf
            mv = 0
            if i > 0 and best[i - 1, j] < c:
                c = best[i - 1, j]
                mv = 1
            if j > 0 and best[i, j - 1] < c:
                c = best[i, j - 1]
                mv = 2
            if i > 0 and j > 0:
                v = max(best[i - 1, j - 1], abs(tau[i - 1] - sigma[j - 1]))
                if v < c:
                    c = v
                    mv = 3
            best[i, j] = max(c, cost[i, j])
            move[i, j] = mv
    return move


def _compose_cost(x: CadlagPath, y: CadlagPath, lam: TimeChange, s: float) -> float:
    """Exact ``sup ||x o lam - y|| v sup |lam - id|`` for piecewise-affine paths on [0, s]."""
    xb = x.times[x.times <= s]
    pts = np.union1d(np.union1d(lam.inverse(xb), y.times[y.times <= s]), lam.knots)
    pts = pts[(pts >= 0) & (pts <= s)]
    pts = np.union1d(pts, [0.0, s])
    right = x(lam(pts)) - y(pts)
    # left limits: x o lam jumps at lam^{-1}(x breakpoints)
    eps_left = x.left_limit(lam(pts)) - y.left_limit(pts)
    val = max(_norm_rows(right).max(), _norm_rows(eps_left).max())
    return float(max(val, lam.distortion()))


def _j1_general(x: CadlagPath, y: CadlagPath, s: float) -> float:
    best = sup_distance(x, y, s)
    # candidate lambda from the bottleneck matching of the jump skeletons
    def skeleton(p):
        t = p.times[(p.times > 0) & (p.times < s)]
        sizes = p(t) - p.left_limit(t)
        keep = _norm_rows(sizes) > 0
        return t[keep], p(t[keep])

    tau, xv = skeleton(x)
    sig, yv = skeleton(y)
    if len(tau) and len(sig):
        X = np.vstack([x(0.0)[None, :], xv])
        Y = np.vstack([y(0.0)[None, :], yv])
        cost = _norm_rows(X[:, None, :] - Y[None, :, :])
        move = _matching_dp(cost, tau, sig)
        i, j = len(tau), len(sig)
        pairs = []
        while i > 0 or j > 0:
            mv = move[i, j]
            if mv == 3:
                pairs.append((sig[j - 1], tau[i - 1]))
                i, j = i - 1, j - 1
            elif mv == 1:
                i -= 1
            else:
                j -= 1
        if pairs:
            pairs.sort()
            knots = np.array([0.0] + [p[0] for p in pairs] + [s])
            images = np.array([0.0] + [p[1] for p in pairs] + [s])
            if np.all(np.diff(knots) > 0) and np.all(np.diff(images) > 0):
                best = min(best, _compose_cost(x, y, TimeChange(knots, images), s))
    return best


def j1_distance(x: CadlagPath, y: CadlagPath, s: float | None = None) -> float:
    """Skorohod J1 distance on ``[0, s]`` under the Euclidean norm.

    Exact for step paths (bottleneck shortest path over interleavings of the two
    jump sequences).  For paths with affine pieces it returns the smaller of the
    sup distance and the cost of the piecewise-linear time change induced by the
    best jump matching, which is an upper bound equal to the sup distance when
    neither path jumps.
    """
    if x.dim != y.dim:
        raise ValueError("dimension mismatch")
    s = min(x.horizon, y.horizon) if s is None else float(s)
    if not s > 0:
        raise ValueError("horizon must be positive")
    xs, ys = x.restrict(s), y.restrict(s)
    if xs.is_step and ys.is_step:
        return _j1_step(xs, ys, s)
    return _j1_general(xs, ys, s)


def j1_distance_infinite(x: CadlagPath, y: CadlagPath, s_cut: float = 20.0, nodes: int = 16,
                         return_error: bool = False):
    """``int_0^inf e^-s (1 ^ d_{J1,s}) ds`` with paths continued constantly.

    Beyond the common horizon the integrand is constant, so that part is exact.
    The error estimate compares Gauss-Legendre rules of ``nodes`` and ``2 nodes``.
    """
    T = min(x.horizon, y.horizon, s_cut)
    cuts = np.union1d(x.times, y.times)
    cuts = np.union1d(cuts[(cuts > 0) & (cuts < T)], [0.0, T])

    def integrate(k):
        gx, gw = np.polynomial.legendre.leggauss(k)
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            ss = 0.5 * (b - a) * gx + 0.5 * (a + b)
            vals = np.array([min(1.0, j1_distance(x, y, si)) for si in ss])
            total += 0.5 * (b - a) * np.sum(gw * np.exp(-ss) * vals)
        return total

    coarse = integrate(nodes)
    fine = integrate(2 * nodes)
    tail_d = min(1.0, j1_distance(x.restrict(T + 1.0), y.restrict(T + 1.0), T + 1.0))
    if T < s_cut:
        tail = math.exp(-T) * tail_d
        err = abs(fine - coarse)
    else:
        tail = math.exp(-s_cut) * 1.0
        err = abs(fine - coarse) + math.exp(-s_cut)
    value = fine + tail
    return (value, err) if return_error else value


def _step_segments(x: CadlagPath):
    """Segment starts, values, and the terminal point folded in as a final segment."""
    if not x.is_step:
        raise ValueError("moduli are implemented for step paths")
    b = x.times
    v = x.values
    if b[-1] < x.horizon:
        b = np.append(b, x.horizon)
        v = np.vstack([v, v[-1:]])
    return b, v


def modulus(x: CadlagPath, delta: float, which: int) -> float:
    """Tightness moduli of a step path on ``[0, 1]``.

    ``which=1``: ``sup_{t <= delta} ||x_t - x_0||``; ``which=2``:
    ``sup_{1-delta <= t <= 1} ||x_1 - x_t||``; ``which=3``: the two-sided modulus
    ``sup ||x_t - x_t'|| ^ ||x_t'' - x_t||`` over ``t - delta <= t' < t < t'' <= t + delta``.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if which not in (1, 2, 3):
        raise ValueError("which must be 1, 2 or 3")
    T = x.horizon
    b, v = _step_segments(x)
    if which == 1:
        sel = b <= delta + _TOL
        return float(_norm_rows(v[sel] - v[0]).max())
    if which == 2:
        nb = np.append(b[1:], np.inf)
        sel = (nb > T - delta + _TOL) | (b >= T - delta - _TOL)
        return float(_norm_rows(v[-1] - v[sel]).max())
    # segments k = 0..m-1 are [b_k, b_{k+1}); the last row of b/v is the terminal point
    m = len(b) - 1
    out = 0.0
    for k in range(m):
        lo, hi = b[k], b[k + 1]
        cands = [lo]
        for l in range(k + 1, m + 1):
            t = b[l] - delta
            if lo + _TOL < t < hi - _TOL:
                cands.append(t)
        for t in cands:
            left = [i for i in range(k) if b[i + 1] > t - delta + _TOL]
            right = [l for l in range(k + 1, m + 1) if b[l] <= t + delta + _TOL]
            if not left or not right:
                continue
            a = _norm_rows(v[left] - v[k]).max()
            c = _norm_rows(v[right] - v[k]).max()
            out = max(out, min(a, c))
    return float(out)


def partial_sum_moduli(paths: np.ndarray, delta: float, which: int) -> np.ndarray:
    """Moduli of the scalar partial-sum paths ``paths[r] = (S_0..S_n)/B`` on the grid k/n.

    Vectorized over rows; agrees with :func:`modulus` applied to
    :func:`from_partial_sums` paths.
    """
    P = np.atleast_2d(np.asarray(paths, dtype=float))
    n = P.shape[1] - 1
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    q = round(n * delta, 9)
    if which == 1:
        kmax = min(int(math.floor(q)), n)
        return np.max(np.abs(P[:, : kmax + 1] - P[:, :1]), axis=1)
    if which == 2:
        # segments [k/n, (k+1)/n) meet [1 - delta, 1] iff k >= floor(n - q)
        kmin = max(int(math.floor(round(n - q, 9))), 0)
        return np.max(np.abs(P[:, -1:] - P[:, kmin:]), axis=1)
    if which != 3:
        raise ValueError("which must be 1, 2 or 3")
    Q = int(math.floor(q))
    phi = q - Q
    us = {0.0, phi, 1.0 - phi} if phi > 0 else {0.0}
    configs = set()
    for u in us:
        if u >= 1.0:
            continue
        A = math.ceil(round(q + 1 - u, 9)) - 1
        Bw = math.floor(round(u + q, 9))
        configs.add((A, Bw))
    out = np.zeros(P.shape[0])
    body = P[:, :n]  # values on segments k = 0..n-1
    for A, Bw in configs:
        if A < 1 or Bw < 1:
            continue
        # left window: indices k-A..k-1, right window: k+1..k+Bw (clipped to 0..n)
        lmax = _window(P, A, "max", "left")[:, :n]
        lmin = _window(P, A, "min", "left")[:, :n]
        rmax = _window(P, Bw, "max", "right")[:, :n]
        rmin = _window(P, Bw, "min", "right")[:, :n]
        left = np.maximum(lmax - body, body - lmin)
        right = np.maximum(rmax - body, body - rmin)
        k = np.arange(n)
        left[:, k == 0] = 0.0
        val = np.minimum(left, right)
        out = np.maximum(out, val.max(axis=1))
    return out


def _window(P: np.ndarray, w: int, kind: str, side: str) -> np.ndarray:
    """Running max/min over ``P[k-w..k-1]`` (left) or ``P[k+1..k+w]`` (right), clipped to the row."""
    n1 = P.shape[1]
    f = ndimage.maximum_filter1d if kind == "max" else ndimage.minimum_filter1d
    pad = np.full((P.shape[0], w), -np.inf if kind == "max" else np.inf)
    if side == "left":
        # ext[:, j + w] = P[:, j]; window of k is ext[:, k..k+w-1]
        ext = np.concatenate([pad, P], axis=1)
        return _left_aligned(ext, w, f)[:, :n1]
    ext = np.concatenate([P, pad], axis=1)
    return _left_aligned(ext, w, f)[:, 1 : n1 + 1]


def _left_aligned(a: np.ndarray, size: int, f) -> np.ndarray:
    """``out[:, j] = f(a[:, j:j+size])``; windows running off the end are clipped."""
    return f(a, size=size, axis=1, mode="nearest", origin=-(size // 2))


def occupation_fraction(x: CadlagPath, component: int = 0) -> float:
    """Lebesgue measure of ``{s in [0, T] : x_s > 0}`` divided by ``T`` (exact for step paths)."""
    if not 0 <= component < x.dim:
        raise IndexError("component out of range")
    b, v = _step_segments(x)
    lengths = np.diff(b)
    pos = v[:-1, component] > 0
    return float(np.sum(lengths[pos]) / x.horizon)


def path_to_csv(x: CadlagPath, fh=None) -> str:
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"v{i + 1}" for i in range(x.dim)])
    for t, row in zip(x.times, x.values):
        w.writerow([repr(float(t))] + [repr(float(c)) for c in row])
    return buf.getvalue() if fh is None else ""


def path_from_csv(text: str, horizon: float) -> CadlagPath:
    rows = list(csv.reader(io.StringIO(text)))
    data = np.array([[float(c) for c in r] for r in rows[1:]])
    return CadlagPath(data[:, 0], data[:, 1:], horizon)

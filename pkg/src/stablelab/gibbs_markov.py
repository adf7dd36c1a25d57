"""Gibbs-Markov interval systems, observables and the regularity quantities built on them.

Two affine instances with full branches are provided:

* :class:`DyadicRenewalMap` on ``(0, 1]`` with cylinders ``Z_k = (2^-k, 2^-k+1]``
  and branches ``T x = 2^k x - 1``;
* :class:`HeavyBernoulliShift`, an iid symbol sequence with Zipf-type weights
  realized on ``[0, 1)`` by consecutive half-open cylinders.

Forward float iteration of an expanding map loses one bit per doubling and
eventually collapses onto a fixed point, so orbit *sampling* is done backwards
through inverse branches (or directly from the symbol stream), which is exact in
law.  :func:`iterate` still applies the forward branches for pathwise checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numba
import numpy as np
from scipy import special

from .stable_laws import TailModel

__all__ = [
    "BoundaryError",
    "GibbsMarkovSystem",
    "DyadicRenewalMap",
    "HeavyBernoulliShift",
    "MarkovModulatedShift",
    "Observable",
    "Orbit",
    "Density",
    "f_alpha",
    "symbol_observable",
    "constant_observable",
    "iterate",
    "ergodic_sum",
    "separation_time",
    "d_theta",
    "theta_f",
    "theta_f_n",
    "weighted_sums",
    "oscillation_check",
    "lipschitz_ratio_check",
    "distortion_check",
    "sample_initial",
]


class BoundaryError(ValueError):
    """A point outside the domain or on the null set of cylinder boundaries."""


@dataclass(frozen=True)
class Orbit:
    """Finite orbit ``x, Tx, ..., T^{n-1} x`` with its cylinder symbols."""

    symbols: np.ndarray
    points: np.ndarray | None = None


class GibbsMarkovSystem:
    """Interface shared by the concrete systems.

    Subclasses provide the cylinder lookup, the branch maps and their inverses,
    an exact sampler for the invariant law and for stationary orbits.
    """

    name = "abstract"
    theta: float = 0.5
    R: float = 0.0
    flat: float = 1.0
    full_branches = True

    def cylinder(self, x: float):
        raise NotImplementedError

    def branch(self, symbol, x: float) -> float:
        raise NotImplementedError

    def inverse_branch(self, symbol, y):
        raise NotImplementedError

    def T(self, x: float) -> float:
        return self.branch(self.cylinder(x), x)

    def sample_invariant(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def sample_symbols(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample_orbit(self, rng: np.random.Generator, n: int, points: bool = True) -> Orbit:
        raise NotImplementedError

    def point_in_cylinder(self, word, y):
        """Point of the rank-``len(word)`` cylinder ``[word]`` whose ``T^n``-image is ``y``."""
        x = y
        for s in reversed(list(word)):
            x = self.inverse_branch(s, x)
        return x

    def exact_branch(self, symbol):
        """Affine inverse branch ``y -> a + slope * y`` with rational coefficients."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"name": self.name}


class DyadicRenewalMap(GibbsMarkovSystem):
    name = "dyadic"
    theta = 0.5
    R = 0.0
    flat = 1.0

    def cylinder(self, x: float) -> int:
        x = float(x)
        if not 0.0 < x <= 1.0:
            raise BoundaryError(f"{x!r} lies outside (0, 1]")
        m, e = math.frexp(x)
        # x = m 2^e with m in [1/2, 1); powers of two close their cylinder on the right
        return 2 - e if m == 0.5 else 1 - e

    def cylinders(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any((x <= 0) | (x > 1)):
            raise BoundaryError("points must lie in (0, 1]")
        m, e = np.frexp(x)
        return np.where(m == 0.5, 2 - e, 1 - e).astype(np.int64)

    def branch(self, symbol: int, x: float) -> float:
        return math.ldexp(x, int(symbol)) - 1.0

    def inverse_branch(self, symbol: int, y):
        return np.ldexp(1.0 + np.asarray(y, dtype=float), -int(symbol))

    def exact_branch(self, symbol: int):
        w = Fraction(1, 2 ** int(symbol))
        return w, w

    def cylinder_bounds(self, symbol: int):
        return math.ldexp(1.0, -int(symbol)), math.ldexp(1.0, -int(symbol) + 1)

    def symbol_prob(self, symbol: int) -> float:
        return math.ldexp(1.0, -int(symbol))

    def sample_invariant(self, rng, size=None):
        return 1.0 - rng.random(size)

    def sample_symbols(self, rng, n: int) -> np.ndarray:
        return rng.geometric(0.5, size=n).astype(np.int64)

    def sample_orbit(self, rng, n: int, points: bool = True) -> Orbit:
        ks = self.sample_symbols(rng, n)
        tail = 1.0 - rng.random()
        return Orbit(ks, _dyadic_backward(ks, tail) if points else None)


@numba.njit(cache=True, nogil=True)
def _dyadic_backward(ks, tail):
    n = len(ks)
    out = np.empty(n)
    x = tail
    for j in range(n - 1, -1, -1):
        s = 1.0 + x
        if s == 1.0:
            s = 1.0000000000000002
        x = s * 2.0 ** (-ks[j])
        out[j] = x
    return out


class HeavyBernoulliShift(GibbsMarkovSystem):
    """Iid symbols with ``p_k = p_-k`` proportional to ``|k|^-(1+alpha)`` (or ``k >= 1`` only).

    The interval realization lists cylinders in the order ``1, -1, 2, -2, ...``
    (``1, 2, 3, ...`` one-sided) as half-open subintervals of ``[0, 1)``.
    """

    name = "heavy_bernoulli"
    theta = 0.5
    R = 0.0
    flat = 1.0

    def __init__(self, alpha: float, symmetric: bool = True):
        if not 0 < alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        self.alpha = float(alpha)
        self.symmetric = bool(symmetric)
        self._z = float(special.zeta(1.0 + alpha))

    @property
    def tail_model(self) -> TailModel:
        c = 1.0 / (self.alpha * self._z)
        if self.symmetric:
            return TailModel.pure_power(self.alpha, c / 2, c / 2)
        return TailModel.pure_power(self.alpha, c, 0.0)

    @property
    def mean(self) -> float | None:
        if self.alpha <= 1:
            return None
        if self.symmetric:
            return 0.0
        return float(special.zeta(self.alpha) / self._z)

    def to_dict(self) -> dict:
        return {"name": self.name, "alpha": self.alpha, "symmetric": self.symmetric}

    def symbol_prob(self, symbol: int) -> float:
        k = abs(int(symbol))
        if k == 0 or (not self.symmetric and symbol < 0):
            return 0.0
        p = k ** (-(1.0 + self.alpha)) / self._z
        return p / 2 if self.symmetric else p

    def _mass_before(self, k: int) -> float:
        """Total probability of magnitudes ``< k``."""
        if k <= 1:
            return 0.0
        return 1.0 - float(special.zeta(1.0 + self.alpha, k)) / self._z

    def cylinder_bounds(self, symbol: int):
        k = abs(int(symbol))
        lo = self._mass_before(k)
        p = self.symbol_prob(symbol)
        if self.symmetric and symbol < 0:
            return lo + p, self._mass_before(k + 1)
        if not self.symmetric:
            return lo, self._mass_before(k + 1)
        return lo, lo + p

    def cylinder(self, x: float) -> int:
        x = float(x)
        if not 0.0 <= x < 1.0:
            raise BoundaryError(f"{x!r} lies outside [0, 1)")
        # magnitude k is the largest with zeta(a, k) >= (1 - x) zeta(a, 1)
        target = (1.0 - x) * self._z
        a = 1.0 + self.alpha
        lo = 1
        while special.zeta(a, 2 * lo) >= target:
            lo *= 2
        hi = 2 * lo  # zeta(a, hi) < target
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if special.zeta(a, mid) >= target:
                lo = mid
            else:
                hi = mid
        k = lo
        # settle rounding ties against the same boundaries cylinder_bounds reports
        while k > 1 and x < self._mass_before(k):
            k -= 1
        while x >= self._mass_before(k + 1):
            k += 1
        if not self.symmetric:
            return k
        left, _ = self.cylinder_bounds(k)
        return k if x < left + self.symbol_prob(k) else -k

    def branch(self, symbol: int, x: float) -> float:
        lo, hi = self.cylinder_bounds(symbol)
        return (x - lo) / (hi - lo)

    def inverse_branch(self, symbol: int, y):
        lo, hi = self.cylinder_bounds(symbol)
        return lo + (hi - lo) * np.asarray(y, dtype=float)

    def exact_branch(self, symbol: int):
        lo, hi = self.cylinder_bounds(symbol)
        lo, hi = Fraction(lo), Fraction(hi)
        return lo, hi - lo

    def sample_invariant(self, rng, size=None):
        return rng.random(size)

    def sample_symbols(self, rng, n: int) -> np.ndarray:
        k = rng.zipf(1.0 + self.alpha, size=n).astype(np.int64)
        if self.symmetric:
            k *= 2 * rng.integers(0, 2, size=n, dtype=np.int64) - 1
        return k

    def sample_orbit(self, rng, n: int, points: bool = False) -> Orbit:
        syms = self.sample_symbols(rng, n)
        if not points:
            return Orbit(syms, None)
        y = rng.random()
        pts = np.empty(n)
        for j in range(n - 1, -1, -1):
            y = float(self.inverse_branch(int(syms[j]), y))
            pts[j] = y
        return Orbit(syms, pts)


class MarkovModulatedShift(GibbsMarkovSystem):
    """Symbols ``s = sign * k`` with iid Zipf magnitudes and a persistent sign chain.

    The sign repeats with probability ``persistence``.  All transitions are
    positive, so the shift is Gibbs-Markov with big images; the distortion
    constant is ``max |log(2 q)|`` over the two sign-transition weights ``q``.
    Only symbolic orbits are provided.
    """

    name = "markov_modulated"
    theta = 0.5
    full_branches = True

    def __init__(self, alpha: float, persistence: float = 0.75, truncation: int = 10**6):
        if not 0 < alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if not 0 < persistence < 1:
            raise ValueError("persistence must lie in (0, 1)")
        self.alpha = float(alpha)
        self.persistence = float(persistence)
        self.truncation = int(truncation)
        self._z = float(special.zeta(1.0 + alpha))
        self.R = max(abs(math.log(2 * persistence)), abs(math.log(2 * (1 - persistence))))
        self.flat = 1.0

    def to_dict(self) -> dict:
        return {"name": self.name, "alpha": self.alpha, "persistence": self.persistence,
                "truncation": self.truncation}

    @property
    def tail_model(self) -> TailModel:
        pi_plus = float(self.stationary_law()[0].sum() + self.stationary_law()[2][0])
        c = 1.0 / (self.alpha * self._z)
        return TailModel.pure_power(self.alpha, c * pi_plus, c * (1 - pi_plus))

    def stationary_law(self, iterations: int = 200, tol: float = 1e-15):
        """Stationary weights of ``+k`` and ``-k`` for ``k <= truncation`` plus two tail cells.

        Power iteration on the truncated chain; the tail beyond the truncation
        is closed by the exact Hurwitz-zeta mass of the magnitude law.
        """
        K = self.truncation
        mag = np.arange(1, K + 1, dtype=float) ** (-(1.0 + self.alpha)) / self._z
        tail = float(special.zeta(1.0 + self.alpha, K + 1)) / self._z
        q = self.persistence
        plus = np.full(K, 0.5) * mag
        minus = np.full(K, 0.5) * mag
        tails = np.array([0.5 * tail, 0.5 * tail])
        for _ in range(iterations):
            wp = plus.sum() + tails[0]
            wm = minus.sum() + tails[1]
            new_wp = q * wp + (1 - q) * wm
            new_wm = (1 - q) * wp + q * wm
            new_plus, new_minus = new_wp * mag, new_wm * mag
            new_tails = np.array([new_wp * tail, new_wm * tail])
            delta = abs(new_wp - wp) + abs(new_wm - wm)
            plus, minus, tails = new_plus, new_minus, new_tails
            if delta < tol:
                break
        return plus, minus, tails

    @property
    def mean(self) -> float | None:
        if self.alpha <= 1:
            return None
        return 0.0

    def sample_symbols(self, rng, n: int) -> np.ndarray:
        k = rng.zipf(1.0 + self.alpha, size=n).astype(np.int64)
        flips = rng.random(n) >= self.persistence
        first = 1 if rng.random() < 0.5 else -1
        signs = first * np.where(np.cumsum(flips) % 2 == 0, 1, -1)
        return k * signs

    def sample_orbit(self, rng, n: int, points: bool = False) -> Orbit:
        if points:
            raise NotImplementedError("only symbolic orbits are available")
        return Orbit(self.sample_symbols(rng, n), None)

    def sample_invariant(self, rng, size=None):
        raise NotImplementedError("only symbolic orbits are available")


@dataclass(frozen=True)
class Observable:
    """Observable with per-cylinder Lipschitz data and tail metadata.

    ``func`` evaluates on points, ``symbol_func`` on symbols (for observables that
    are constant on cylinders).  ``lipschitz`` maps a symbol to ``D_Z(f)``.
    """

    name: str
    func: Callable | None
    lipschitz: Callable
    tail: TailModel | None = None
    mean: float | None = None
    symbol_func: Callable | None = None
    integer: bool = False
    dim: int = 1
    params: dict = field(default_factory=dict)

    def values(self, orbit: Orbit) -> np.ndarray:
        if self.symbol_func is not None:
            return self.symbol_func(orbit.symbols)
        if orbit.points is None:
            raise ValueError(f"{self.name} needs orbit points")
        return self.func(orbit.points)

    def theta_values(self, orbit: Orbit) -> np.ndarray:
        return self.lipschitz(orbit.symbols)

    def __call__(self, x):
        if self.func is None:
            raise ValueError(f"{self.name} is defined on symbols only")
        return self.func(x)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


def f_alpha(alpha: float, lipschitz_factor: float = 4.0) -> Observable:
    """``f(x) = x^(-1/alpha)`` on the dyadic map, with ``mu(f > t) = t^-alpha`` for t >= 1.

    ``D_{Z_k}(f) = (lipschitz_factor / alpha) 2^(k / alpha)``.  Within ``Z_k`` a pair
    with separation time ``s >= 2`` is at distance at most ``2^-k 2^-(s-2)``, and
    ``|f'| <= alpha^-1 2^(k (1/alpha + 1))`` there, which gives the factor 4.
    """
    inv = 1.0 / alpha
    fac = lipschitz_factor / alpha
    mean = alpha / (alpha - 1.0) if alpha > 1 else None
    return Observable(
        name="f_alpha",
        func=lambda x: np.asarray(x, dtype=float) ** (-inv),
        lipschitz=lambda k: fac * np.exp2(np.asarray(k, dtype=float) * inv),
        tail=TailModel.pure_power(alpha, 1.0, 0.0),
        mean=mean,
        params={"alpha": alpha, "lipschitz_factor": lipschitz_factor},
    )


def symbol_observable(system: HeavyBernoulliShift | MarkovModulatedShift, scale: int = 1) -> Observable:
    """``f = scale * symbol``; constant on cylinders, hence ``theta_f = 0``."""
    tm = system.tail_model
    s = int(scale)
    if s == 0:
        raise ValueError("scale must be nonzero")
    # scaling by s multiplies the tail constants by |s|^alpha; the sign swaps sides
    cp, cm = (tm.c_plus, tm.c_minus) if s > 0 else (tm.c_minus, tm.c_plus)
    tail = TailModel.pure_power(tm.alpha, cp * abs(s) ** tm.alpha, cm * abs(s) ** tm.alpha)
    mean = None if system.mean is None else s * system.mean
    return Observable(
        name="symbol",
        func=None,
        lipschitz=lambda k: np.zeros(np.shape(k)),
        tail=tail,
        mean=mean,
        symbol_func=lambda k: s * np.asarray(k, dtype=np.int64),
        integer=True,
        params={"scale": s},
    )


def constant_observable(c: float) -> Observable:
    c = float(c)
    return Observable(
        name="constant",
        func=lambda x: np.full(np.shape(x), c),
        lipschitz=lambda k: np.zeros(np.shape(k)),
        tail=None,
        mean=c,
        symbol_func=lambda k: np.full(np.shape(k), c),
        integer=c == int(c),
        params={"value": c},
    )


def iterate(sys: GibbsMarkovSystem, x: float, n: int) -> np.ndarray:
    """Forward orbit ``x, Tx, ..., T^n x`` by the branch maps."""
    out = np.empty(n + 1)
    out[0] = x
    for i in range(n):
        x = sys.T(x)
        out[i + 1] = x
    return out


def _symbols_along(sys, x, n):
    syms = []
    for _ in range(n):
        s = sys.cylinder(x)
        syms.append(s)
        x = sys.branch(s, x)
    return syms


def ergodic_sum(sys: GibbsMarkovSystem, f: Observable, x: float, n: int):
    if n == 0:
        return 0.0
    pts = iterate(sys, x, n - 1)
    syms = np.array([sys.cylinder(p) for p in pts])
    vals = f.values(Orbit(syms, pts))
    return vals.sum(axis=0)


def separation_time(sys: GibbsMarkovSystem, x: float, y: float, n_max: int) -> int:
    """First ``n >= 1`` with different rank-n cylinders; ``n_max`` means "at least n_max"."""
    for j in range(n_max):
        sx, sy = sys.cylinder(x), sys.cylinder(y)
        if sx != sy:
            return j + 1
        x, y = sys.branch(sx, x), sys.branch(sy, y)
    return n_max


def d_theta(sys: GibbsMarkovSystem, x: float, y: float, n_max: int = 1074) -> float:
    if x == y:
        return 0.0
    return sys.theta ** separation_time(sys, x, y, n_max)


def theta_f(sys: GibbsMarkovSystem, f: Observable, x: float) -> float:
    return float(f.lipschitz(np.array([sys.cylinder(x)]))[0])


def weighted_sums(g_values: np.ndarray, rho: float) -> np.ndarray:
    """``G_k = sum_{j<k} rho^(k-j) g_j`` for k = 1..n along the last axis."""
    g = np.asarray(g_values, dtype=float)
    return _weighted_sums(np.ascontiguousarray(g.reshape(-1, g.shape[-1])), float(rho)).reshape(g.shape)


@numba.njit(cache=True, nogil=True)
def _weighted_sums(g, rho):
    out = np.empty_like(g)
    for r in range(g.shape[0]):
        v = 0.0
        for k in range(g.shape[1]):
            v = rho * (v + g[r, k])
            out[r, k] = v
    return out


def theta_f_n(sys: GibbsMarkovSystem, f: Observable, x: float, n: int) -> float:
    """``sum_{k<n} theta^(n-k) theta_f(T^k x)``."""
    if n == 0:
        return 0.0
    syms = np.array(_symbols_along(sys, x, n))
    return float(weighted_sums(f.lipschitz(syms), sys.theta)[-1])


def oscillation_check(sys: GibbsMarkovSystem, f: Observable, word, m: int,
                      rng: np.random.Generator) -> int:
    """Count pairs in ``[word]`` violating ``|S_n f(x) - S_n f(y)| <= theta_{f,n}(Z)``."""
    word = [int(s) for s in word]
    if not word:
        raise ValueError("empty cylinder word")
    if m < 1:
        raise ValueError("need at least one pair")
    n = len(word)
    bound = float(weighted_sums(f.lipschitz(np.array(word)), sys.theta)[-1])

    def sums(tails):
        pts = np.empty((n, len(tails)))
        x = tails
        for j in range(n - 1, -1, -1):
            x = sys.inverse_branch(word[j], x)
            pts[j] = x
        syms = np.repeat(np.array(word)[:, None], len(tails), axis=1)
        return f.values(Orbit(syms, pts)).sum(axis=0)

    ya = sys.sample_invariant(rng, m)
    yb = sys.sample_invariant(rng, m)
    diff = np.abs(sums(ya) - sums(yb))
    return int(np.sum(diff > bound))


def lipschitz_ratio_check(sys: GibbsMarkovSystem, f: Observable, symbol: int, m: int,
                          rng: np.random.Generator, depth: int = 6) -> float:
    """Max of ``|f(x) - f(y)| / (D_Z(f) d_theta(x, y))`` over sampled pairs in ``Z``.

    Pairs are drawn with a prescribed common prefix of random length so that all
    separation times ``2..depth+1`` are exercised.  Values ``<= 1`` confirm the bound.
    """
    D = float(f.lipschitz(np.array([symbol]))[0])
    worst = 0.0
    for _ in range(m):
        extra = int(rng.integers(0, depth))
        prefix = [symbol] + [int(s) for s in sys.sample_symbols(rng, extra)]
        ya, yb = sys.sample_invariant(rng, 2)
        x = float(sys.point_in_cylinder(prefix, ya))
        y = float(sys.point_in_cylinder(prefix, yb))
        if x == y:
            continue
        s = separation_time(sys, x, y, 60)
        ratio = abs(float(f(x)) - float(f(y))) / (D * sys.theta ** s)
        worst = max(worst, ratio)
    return worst


def distortion_check(sys: GibbsMarkovSystem, n: int, trials: int, rng: np.random.Generator) -> float:
    """Max ``|log|`` ratio between ``mu(Z & T^-n E)/mu(Z)`` and ``mu(T^n Z & E)/mu(T^n Z)``.

    Affine full-branch systems are evaluated in exact rational arithmetic; systems
    exposing ``distortion_ratio`` (e.g. the induced intermittent map) are sampled
    numerically.
    """
    worst = 0.0
    for _ in range(trials):
        word = [s if isinstance(s, tuple) else int(s) for s in sys.sample_symbols(rng, n)]
        a, b = np.sort(sys.sample_invariant(rng, 2))
        if hasattr(sys, "distortion_ratio"):
            r = sys.distortion_ratio(word, float(a), float(b))
        else:
            # compose the affine inverse branches exactly: Z & T^-n E = psi_word(E)
            off, slope = Fraction(0), Fraction(1)
            for s in word:
                o, sl = sys.exact_branch(s)
                off, slope = off + slope * o, slope * sl
            A, B = Fraction(float(a)), Fraction(float(b))
            muZ = slope  # T^n Z is the whole space, of measure 1
            muZE = slope * (B - A)
            r = (muZE / muZ) / (B - A)
        if r <= 0:
            continue
        worst = max(worst, abs(math.log(r)))
    return worst


@dataclass(frozen=True)
class Density:
    """Probability density on the state space with a declared upper bound."""

    pdf: Callable
    bound: float


def sample_initial(sys: GibbsMarkovSystem, law, rng: np.random.Generator, size=None):
    """Draw from the invariant law or from a bounded density by rejection."""
    if law is None or law == "invariant":
        return sys.sample_invariant(rng, size)
    if not isinstance(law, Density) or not np.isfinite(law.bound) or law.bound <= 0:
        raise ValueError("density laws need a finite positive bound")
    count = 1 if size is None else int(np.prod(size))
    out = np.empty(0)
    while len(out) < count:
        m = max(16, 2 * (count - len(out)) * int(math.ceil(law.bound)))
        x = sys.sample_invariant(rng, m)
        d = np.asarray(law.pdf(x), dtype=float)
        if np.any(d > law.bound * (1 + 1e-12)):
            raise ValueError("density exceeds its declared bound")
        keep = rng.random(m) * law.bound < d
        out = np.concatenate([out, x[keep]])
    out = out[:count]
    return float(out[0]) if size is None else out.reshape(size)

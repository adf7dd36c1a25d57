"""Two-cusp intermittent maps, their first-return structure on ``Y = (y0, y1)``, and excursions.

The concrete family is

    T x = x (1 + (2x)^p)                 on (0, 1/2]
    T x = 1 - (1-x)(1 + (2(1-x))^p)      on (1/2, 1)

with neutral fixed points at 0 and 1, ``r_j(x) = 2^p x^(1+p)`` exactly, and the
symmetry ``T(1 - x) = 1 - T(x)``.

Every point of ``Y`` leaves ``Y`` after one step: ``x in (y0, 1/2)`` is sent to
``(y1, 1)`` (an excursion near the cusp at 1) and ``x in (1/2, y1)`` to
``(0, y0)``.  Writing the distance to the cusp as ``z``, an excursion is the
iteration of the left branch ``z -> z + b z^(1+p)`` (``b = 2^p``) until ``z > y0``.
With ``a_0 = y0`` and ``a_{k+1}`` the left-branch preimage of ``a_k``, a first
step landing at ``z in (a_{k+1}, a_k]`` gives return time ``k + 2``.

Return times reach ``10^15`` and beyond for ``p = 3``, so long excursions are
never iterated.  The cell index comes from a table of ``u_k = a_k^-p`` (and an
asymptotic expansion beyond it).  The landing point is obtained by transporting
the position inside the cell, in ``u`` coordinates, to a shallow cell and
iterating from there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import integrate

from .gibbs_markov import BoundaryError
from .stats import hill_estimate

__all__ = [
    "IntermittentMap",
    "ReturnStructure",
    "LongExcursionError",
    "ExcursionBatch",
    "make_lsv2",
    "find_Y",
    "first_return",
    "excursions",
    "induced_chain",
    "uniform_excursions",
    "stationary_excursions",
    "induced_sums",
    "exact_first_return",
    "excursion_tail_estimate",
    "measure_finiteness",
    "estimate_density_at_half",
    "side_tail_constant",
    "InducedIntermittent",
]


class LongExcursionError(RuntimeError):
    """The excursion exceeded the configured cap."""


@dataclass(frozen=True)
class IntermittentMap:
    p: float
    c: float = 0.5

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("p must be positive")
        if self.c != 0.5:
            raise ValueError("only the symmetric breakpoint c = 1/2 is implemented")

    @property
    def b(self) -> float:
        return 2.0 ** self.p

    @property
    def kappa0(self) -> float:
        return self.b

    @property
    def kappa1(self) -> float:
        return self.b

    @property
    def alpha(self) -> float:
        return 1.0 / self.p

    def T0(self, z):
        z = np.asarray(z, dtype=float)
        return z * (1.0 + (2.0 * z) ** self.p)

    def T(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x <= 0) | (x >= 1)):
            raise BoundaryError("points must lie in (0, 1)")
        left = x <= 0.5
        out = np.where(left, self.T0(np.where(left, x, 0.25)), 1.0 - self.T0(np.where(left, 0.75, 1.0 - x)))
        return out if out.ndim else float(out)

    def r0(self, x):
        """``T x - x`` on the left branch."""
        return self.b * np.asarray(x, dtype=float) ** (1.0 + self.p)

    def r1(self, x):
        """``x - T(1 - x)`` mirrored: distance gained near the cusp at 1."""
        return self.r0(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        z = np.where(x <= 0.5, x, 1.0 - x)
        return 1.0 + (1.0 + self.p) * self.b * z ** self.p

    def T0_inverse(self, a: float) -> float:
        return _t0_inverse(float(a), float(self.p), self.b)

    def to_dict(self) -> dict:
        return {"name": "lsv2", "p": self.p}


def make_lsv2(p: float) -> IntermittentMap:
    return IntermittentMap(float(p))


@numba.njit(cache=True, nogil=True)
def _t0(z, p, b):
    return z + b * z ** (1.0 + p)


@numba.njit(cache=True, nogil=True)
def _t0_inverse(a, p, b):
    # Newton on z + b z^(1+p) = a from the asymptotic guess
    z = a / (1.0 + b * a ** p)
    for _ in range(60):
        g = z + b * z ** (1.0 + p) - a
        dg = 1.0 + (1.0 + p) * b * z ** p
        step = g / dg
        z -= step
        if abs(step) <= 4e-16 * z:
            break
    return z


@numba.njit(cache=True)
def _preimage_table(y0, p, b, K):
    a = np.empty(K + 1)
    a[0] = y0
    for k in range(K):
        a[k + 1] = _t0_inverse(a[k], p, b)
    return a


@dataclass(frozen=True, eq=False)
class ReturnStructure:
    map: IntermittentMap
    y0: float
    y1: float
    a: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    shallow: int = 16

    @property
    def table_size(self) -> int:
        return len(self.a) - 1

    def to_dict(self) -> dict:
        return {"y0": self.y0, "y1": self.y1, "table_size": self.table_size, "shallow": self.shallow}


def find_Y(m: IntermittentMap, table_size: int = 2**20, shallow: int = 16) -> ReturnStructure:
    """Period-2 orbit ``{y0, y1}`` via ``T y0 = 1 - y0`` and the excursion tables."""
    g = lambda y: float(m.T0(y)) - (1.0 - y)
    lo, hi = 1e-300, 0.5
    if not (g(lo) < 0 < g(hi)):
        raise ValueError("period-2 point not bracketed")
    while hi - lo > 1e-16:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    y0 = 0.5 * (lo + hi)
    y1 = 1.0 - y0
    if abs(float(m.T(y1)) - y0) > 1e-10:
        raise ValueError("T(y1) does not return to y0")
    a = _preimage_table(y0, float(m.p), m.b, int(table_size))
    u = a ** (-m.p)
    return ReturnStructure(m, y0, y1, a, u, int(shallow))


@numba.njit(cache=True, nogil=True)
def _first_z(h, p):
    # distance to the cusp after one step from 1/2 -+ h; accurate for tiny h
    return 2.0 * h - (0.5 - h) * math.expm1(p * math.log1p(-2.0 * h))


@numba.njit(cache=True, nogil=True)
def _cell(u, utab, p, b):
    """Real-valued cell coordinate kappa with u = u_kappa (integer part = cell index)."""
    K = len(utab) - 1
    if u < utab[K]:
        k = max(np.searchsorted(utab, u, side="right") - 1, 0)
        frac = (u - utab[k]) / (utab[k + 1] - utab[k])
        return float(k), frac
    c = 0.5 * (p + 1.0) * b
    pb = p * b
    kap = K + (u - utab[K]) / pb
    for _ in range(4):
        F = utab[K] + pb * (kap - K) - c * math.log(kap / K) - u
        kap -= F / (pb - c / kap)
    k = np.floor(kap)
    return k, kap - k


NUDGED, CENSORED, RANDOMIZED = 1, 2, 4


@numba.njit(cache=True, nogil=True)
def _excursion(x, p, b, y0, y1, utab, shallow, cap, rnd):
    """One first return from ``x in Y``: (phi, side, landing, flags).

    ``rnd`` in [0, 1) replaces the in-cell position when the float state cannot
    resolve it (the true landing then depends on digits below machine precision).
    """
    flags = 0
    if x < 0.5:
        side = 1
        h = 0.5 - x
    else:
        side = 0
        h = x - 0.5
    if h <= 0.0:
        h = 5.551115123125783e-17
        flags |= NUDGED
    z = _first_z(h, p)
    u = z ** (-p)
    kf, frac = _cell(u, utab, p, b)
    phi = kf + 2.0
    if cap > 0 and phi > cap:
        flags |= CENSORED
    if kf > shallow:
        # uncertainty of u inherited from the spacing of x near 1/2
        e = math.frexp(x)[1]
        rel = 0.5 * math.ldexp(1.0, e - 53) / h + 2.3e-16
        K = len(utab) - 1
        if kf < K:
            k = int(kf)
            width = utab[k + 1] - utab[k]
        else:
            width = p * b
        if p * u * rel > 0.25 * width:
            frac = rnd
            flags |= RANDOMIZED
        # transport the in-cell position to the cell ``shallow`` and finish exactly
        J = shallow
        uu = utab[J] + frac * (utab[J + 1] - utab[J])
        z = uu ** (-1.0 / p)
    while z <= y0:
        z = _t0(z, p, b)
    w = z if side == 0 else 1.0 - z
    if w <= y0:
        w = np.nextafter(y0, 1.0)
        flags |= NUDGED
    elif w >= y1:
        w = np.nextafter(y1, 0.0)
        flags |= NUDGED
    return phi, side, w, flags


@numba.njit(cache=True, nogil=True)
def _tally(counts, flags):
    if flags & NUDGED:
        counts[0] += 1
    if flags & CENSORED:
        counts[1] += 1
    if flags & RANDOMIZED:
        counts[2] += 1


@numba.njit(cache=True, nogil=True)
def _chain(x, rnds, p, b, y0, y1, utab, shallow, cap):
    n = len(rnds)
    phis = np.empty(n)
    sides = np.empty(n, dtype=np.int8)
    counts = np.zeros(3, dtype=np.int64)
    for i in range(n):
        phi, side, x, fl = _excursion(x, p, b, y0, y1, utab, shallow, cap, rnds[i])
        phis[i] = phi
        sides[i] = side
        _tally(counts, fl)
    return phis, sides, x, counts


@numba.njit(cache=True, nogil=True)
def _batch(xs, rnds, p, b, y0, y1, utab, shallow, cap):
    n = len(xs)
    phis = np.empty(n)
    sides = np.empty(n, dtype=np.int8)
    counts = np.zeros(3, dtype=np.int64)
    for i in range(n):
        phi, side, w, fl = _excursion(xs[i], p, b, y0, y1, utab, shallow, cap, rnds[i])
        phis[i] = phi
        sides[i] = side
        _tally(counts, fl)
    return phis, sides, counts


@numba.njit(cache=True, nogil=True)
def _chain_sums(x, rnds, p, b, y0, y1, utab, shallow, cap):
    s0 = 0.0
    s1 = 0.0
    counts = np.zeros(3, dtype=np.int64)
    for i in range(len(rnds)):
        phi, side, x, fl = _excursion(x, p, b, y0, y1, utab, shallow, cap, rnds[i])
        if side == 0:
            s0 += phi
        else:
            s1 += phi
        _tally(counts, fl)
    return s0, s1, counts


@numba.njit(cache=True, nogil=True)
def _chain_points(x, rnds, p, b, y0, y1, utab, shallow):
    pts = np.empty(len(rnds))
    for i in range(len(rnds)):
        phi, side, x, fl = _excursion(x, p, b, y0, y1, utab, shallow, 0.0, rnds[i])
        pts[i] = x
    return pts


@numba.njit(cache=True, nogil=True)
def _exact_return(x, p, b, y0, y1, cap):
    """Plain iteration of T until re-entering Y (reference for short excursions)."""
    n = 0
    side = -1
    while True:
        if x <= 0.5:
            x = _t0(x, p, b)
        else:
            x = 1.0 - _t0(1.0 - x, p, b)
        n += 1
        if n == 1:
            side = 0 if x < 0.5 else 1
        if y0 < x < y1:
            return n, side, x
        if n >= cap:
            return -1, side, x


def first_return(m: IntermittentMap, rs: ReturnStructure, x: float, cap: float | None = None,
                 rng: np.random.Generator | None = None):
    """``(phi, side, T_Y x)`` for ``x in Y``; the side is the cusp visited (Tx in Z_side)."""
    x = float(x)
    if not rs.y0 < x < rs.y1 or x == 0.5:
        raise BoundaryError(f"{x!r} is not an interior point of Y off the breakpoint")
    rnd = 0.5 if rng is None else float(rng.random())
    phi, side, w, fl = _excursion(x, float(m.p), m.b, rs.y0, rs.y1, rs.u, rs.shallow,
                                  _cap(cap), rnd)
    if fl & CENSORED:
        raise LongExcursionError(f"return time {phi:.3g} exceeds cap {cap:.3g}")
    return phi, int(side), w


def _cap(cap):
    return 0.0 if cap is None else float(cap)


def exact_first_return(m: IntermittentMap, rs: ReturnStructure, x: float, cap: int = 10**7):
    """Reference first return by direct iteration (only sensible for short excursions)."""
    n, side, w = _exact_return(float(x), float(m.p), m.b, rs.y0, rs.y1, int(cap))
    if n < 0:
        raise LongExcursionError("cap exceeded")
    return n, int(side), w


@dataclass
class ExcursionBatch:
    phi: np.ndarray
    side: np.ndarray
    nudged: int = 0
    censored: int = 0
    randomized: int = 0

    @classmethod
    def from_counts(cls, phi, side, counts):
        return cls(phi, side, int(counts[0]), int(counts[1]), int(counts[2]))

    def by_side(self, j: int) -> np.ndarray:
        """``phi^(j)``: the return time on returns whose excursion visits cusp j, else 0."""
        return np.where(self.side == j, self.phi, 0.0)

    def accounting(self) -> dict:
        return {"returns": int(len(self.phi)), "nudged": self.nudged, "censored": self.censored,
                "randomized": self.randomized}


def _args(m, rs):
    return float(m.p), m.b, rs.y0, rs.y1, rs.u, rs.shallow


def induced_chain(m: IntermittentMap, rs: ReturnStructure, x0: float, n: int,
                  rng: np.random.Generator, cap: float | None = None) -> tuple[ExcursionBatch, float]:
    """``n`` consecutive returns of the induced orbit of ``x0``."""
    rnds = rng.random(int(n))
    phis, sides, x, counts = _chain(float(x0), rnds, *_args(m, rs), _cap(cap))
    return ExcursionBatch.from_counts(phis, sides, counts), float(x)


def induced_sums(m: IntermittentMap, rs: ReturnStructure, x0: float, n: int,
                 rng: np.random.Generator, cap: float | None = None):
    """Per-side sums of the return times over ``n`` consecutive returns, plus accounting counts."""
    rnds = rng.random(int(n))
    return _chain_sums(float(x0), rnds, *_args(m, rs), _cap(cap))


def excursions(m: IntermittentMap, rs: ReturnStructure, x, rng: np.random.Generator,
               cap: float | None = None) -> ExcursionBatch:
    """Single first returns from each starting point in ``x``."""
    x = np.ascontiguousarray(np.asarray(x, dtype=float).ravel())
    if np.any((x <= rs.y0) | (x >= rs.y1)):
        raise BoundaryError("starting points must lie in Y")
    phis, sides, counts = _batch(x, rng.random(len(x)), *_args(m, rs), _cap(cap))
    return ExcursionBatch.from_counts(phis, sides, counts)


def uniform_excursions(m: IntermittentMap, rs: ReturnStructure, N: int, rng: np.random.Generator,
                       cap: float | None = None) -> ExcursionBatch:
    x = rs.y0 + (rs.y1 - rs.y0) * rng.random(N)
    x = x[(x > rs.y0) & (x < rs.y1)]
    return excursions(m, rs, x, rng, cap)


def stationary_excursions(m: IntermittentMap, rs: ReturnStructure, returns: int, chains: int,
                          burn_in: int, rng: np.random.Generator, cap: float | None = None) -> ExcursionBatch:
    """Returns from ``chains`` induced orbits started uniformly on Y, after ``burn_in`` returns each."""
    per = -(-returns // chains)
    phis, sides = [], []
    counts = np.zeros(3, dtype=np.int64)
    for _ in range(chains):
        x0 = rs.y0 + (rs.y1 - rs.y0) * rng.random()
        _, x0 = induced_chain(m, rs, x0, burn_in, rng, cap) if burn_in else (None, x0)
        b, _ = induced_chain(m, rs, x0, per, rng, cap)
        phis.append(b.phi)
        sides.append(b.side)
        counts += [b.nudged, b.censored, b.randomized]
    return ExcursionBatch.from_counts(np.concatenate(phis)[:returns], np.concatenate(sides)[:returns],
                                      counts)


def excursion_tail_estimate(m: IntermittentMap, rs: ReturnStructure, N: int, rng: np.random.Generator,
                            top_fraction: float = 0.05, thresholds=None, cap: float | None = None,
                            batch: ExcursionBatch | None = None) -> dict:
    """Per-side Hill exponents and matched-threshold tail-count ratios.

    Without ``batch`` the starting points are ``N`` independent uniform draws on ``Y``.
    """
    if N < 10**4:
        raise ValueError("need at least 10^4 draws")
    if batch is None:
        batch = uniform_excursions(m, rs, N, rng, cap)
    out = {"accounting": batch.accounting()}
    for j in (0, 1):
        v = batch.phi[batch.side == j]
        h = hill_estimate(v, top_fraction)
        out[f"hill_{j}"] = {"alpha": h.alpha, "ci": [h.ci_low, h.ci_high], "k": h.k,
                            "threshold": h.threshold}
    if thresholds is None:
        allv = np.sort(batch.phi)
        thresholds = [float(allv[int(q * (len(allv) - 1))]) for q in (0.9, 0.95, 0.99)]
    ratios = []
    for t in thresholds:
        c0 = int(np.sum((batch.side == 0) & (batch.phi > t)))
        c1 = int(np.sum((batch.side == 1) & (batch.phi > t)))
        ratios.append({"threshold": float(t), "count_0": c0, "count_1": c1,
                       "ratio": c0 / c1 if c1 else float("nan")})
    out["tail_ratios"] = ratios
    return out


def measure_finiteness(m: IntermittentMap, eps: float = 1e-6) -> str:
    """``int_0^c x / r0(x) dx`` is finite iff ``p < 1``.

    The integrand equals ``x^-p / 2^p`` exactly here; the part on ``(0, eps)`` is
    evaluated analytically and the rest by quadrature.
    """
    p = m.p
    if p >= 1:
        # the head int_0^eps x^-p dx already diverges
        return "infinite"
    body, _ = integrate.quad(lambda x: x / float(m.r0(x)), eps, m.c)
    head = eps ** (1 - p) / ((1 - p) * m.b)
    return "finite" if math.isfinite(body + head) else "infinite"


def estimate_density_at_half(m: IntermittentMap, rs: ReturnStructure, rng: np.random.Generator,
                             returns: int = 2 * 10**6, chains: int = 20, burn_in: int = 1000,
                             width: float = 0.01) -> float:
    """Density of the induced invariant law at ``1/2`` from long induced orbits.

    The window is symmetric about ``1/2`` so the linear term of the density cancels.
    """
    per = returns // chains
    hits = 0
    total = 0
    for _ in range(chains):
        x0 = rs.y0 + (rs.y1 - rs.y0) * rng.random()
        pts = _chain_points(x0, rng.random(per + burn_in), *_args(m, rs))[burn_in:]
        hits += int(np.sum(np.abs(pts - 0.5) < width))
        total += len(pts)
    return hits / (total * 2 * width)


def side_tail_constant(m: IntermittentMap, density_half: float) -> float:
    """``c`` in ``mu_Y(phi^(j) > t) ~ c t^-1/p``.

    Near the breakpoint ``z ~ T'(1/2) h`` with ``T'(1/2) = 2 + p``, and the cell
    boundaries satisfy ``a_k ~ (p b k)^(-1/p)``.
    """
    return density_half * (m.p * m.b) ** (-1.0 / m.p) / (2.0 + m.p)


class InducedIntermittent:
    """First-return map ``T_Y`` viewed as a full-branch Gibbs-Markov system.

    Rank-one cylinders are labelled ``(phi, side)``; only what the distortion
    check needs is provided, with Lebesgue measure on ``Y`` as reference.
    """

    name = "induced_lsv2"

    def __init__(self, m: IntermittentMap, rs: ReturnStructure, max_depth: int = 40):
        self.m, self.rs = m, rs
        self.max_depth = max_depth

    def sample_symbols(self, rng, n):
        return [(int(rng.integers(2, self.max_depth)), int(rng.integers(0, 2))) for _ in range(n)]

    def sample_invariant(self, rng, size):
        return self.rs.y0 + (self.rs.y1 - self.rs.y0) * rng.random(size)

    def inverse(self, symbol, w):
        """Preimage of ``w in Y`` under the branch ``symbol = (phi, side)``."""
        phi, side = symbol
        p, b = float(self.m.p), self.m.b
        z = w if side == 0 else 1.0 - w
        for _ in range(phi - 1):
            z = _t0_inverse(z, p, b)
        # z is the distance to the cusp after the first step
        x = _t0_inverse(1.0 - z, p, b)
        return x if side == 1 else 1.0 - x

    def distortion_ratio(self, word, a, b):
        """Lebesgue ``(|Z & T_Y^-n E| / |Z|) / (|E| / |Y|)`` for ``E = (a, b)``."""
        def pull(w):
            for s in reversed(word):
                w = self.inverse(s, w)
            return w

        ylen = self.rs.y1 - self.rs.y0
        z_lo, z_hi = sorted((pull(self.rs.y0 + 1e-15), pull(self.rs.y1 - 1e-15)))
        e_lo, e_hi = sorted((pull(a), pull(b)))
        if z_hi <= z_lo:
            return 1.0
        return ((e_hi - e_lo) / (z_hi - z_lo)) / ((b - a) / ylen)

"""Z-extensions ``T_f(x, m) = (T x, m + f(x))`` and occupation-time experiments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gibbs_markov import GibbsMarkovSystem, Observable

__all__ = [
    "SkewProductState",
    "LevelOverflowError",
    "skew_orbit",
    "levels_from_steps",
    "occupation_counts",
    "OccupationSample",
    "occupation_fraction_experiment",
    "validate_integer_observable",
]

_LIMIT = 2**62


class LevelOverflowError(OverflowError):
    """The level accumulator would leave the int64 range."""


@dataclass(frozen=True)
class SkewProductState:
    x: float | None
    m: int


def validate_integer_observable(f: Observable, alpha: float | None = None) -> None:
    """Reject observables outside the occupation-time hypotheses (integer, centered, symmetric at 1)."""
    if not f.integer:
        raise ValueError("the level increment must be integer valued")
    tail = f.tail
    if tail is None:
        return
    if tail.alpha > 1 and f.mean not in (0, 0.0):
        raise ValueError("alpha > 1 requires a centered observable")
    if tail.alpha == 1 and not tail.symmetric:
        raise ValueError("alpha = 1 requires a symmetric observable")


def levels_from_steps(steps, m0: int = 0) -> np.ndarray:
    """``m_0..m_n`` from integer increments, with an overflow guard."""
    st = np.asarray(steps)
    if st.dtype.kind not in "iu":
        if not np.all(st == np.round(st)):
            raise ValueError("increments must be integers")
        st = st.astype(np.int64)
    bound = np.abs(st.astype(np.float64)).sum(axis=-1).max(initial=0.0) + abs(m0)
    if bound >= _LIMIT:
        raise LevelOverflowError("level accumulator could overflow int64")
    out = np.empty(st.shape[:-1] + (st.shape[-1] + 1,), dtype=np.int64)
    out[..., 0] = m0
    np.cumsum(st, axis=-1, out=out[..., 1:])
    out[..., 1:] += m0
    return out


def skew_orbit(sys: GibbsMarkovSystem, f: Observable, start: SkewProductState, n: int,
               rng: np.random.Generator | None = None) -> np.ndarray:
    """Level trajectory ``m_0..m_n`` along the orbit of ``start.x``.

    With ``start.x is None`` a stationary orbit is drawn from ``rng``.
    """
    if start.x is None:
        if rng is None:
            raise ValueError("need a random stream to draw the starting point")
        orbit = sys.sample_orbit(rng, n, points=f.symbol_func is None)
    else:
        from .gibbs_markov import Orbit, iterate

        pts = iterate(sys, start.x, max(n - 1, 0))[:n]
        orbit = Orbit(np.array([sys.cylinder(p) for p in pts]), pts)
    vals = f.values(orbit)
    if not np.all(vals == np.round(vals)):
        raise ValueError("the level increment must be integer valued")
    return levels_from_steps(np.asarray(vals).astype(np.int64), int(start.m))


def occupation_counts(steps: np.ndarray, thresholds=(-1, 0, 1)) -> np.ndarray:
    """``#{0 <= k < n : S_k >= c}`` for each threshold ``c`` (``S_0 = 0`` included).

    All the level conventions reduce to this: with ``m_k = m0 + s S_k`` the
    condition ``m_k >= c'`` is ``S_k >= ceil((c' - m0) / s)`` for ``s > 0``.
    """
    lev = levels_from_steps(steps, 0)[..., :-1]
    return np.stack([(lev >= c).sum(axis=-1) for c in thresholds], axis=-1)


@dataclass
class OccupationSample:
    """Occupation fractions per replicate for each (scale, m0, convention) variant."""

    n: int
    fractions: dict

    def variant(self, scale: int = 1, m0: int = 0, convention: str = "m>=1") -> np.ndarray:
        return self.fractions[(scale, m0, convention)]


def _threshold(scale: int, m0: int, convention: str) -> int:
    c = 1 if convention == "m>=1" else 0
    # m0 + scale * S >= c  <=>  S >= ceil((c - m0) / scale)
    return -((m0 - c) // scale)


def occupation_fraction_experiment(sys: GibbsMarkovSystem, f: Observable, n: int, N: int,
                                   rngs, scales=(1, 2), m0s=(0, 1),
                                   conventions=("m>=1", "m>=0")) -> OccupationSample:
    """Empirical occupation fractions ``(1/n) #{k < n : m_k in N}`` of the level walk.

    ``rngs`` supplies one generator per replicate.  Every variant is read off the
    same orbit: replacing ``f`` by ``s f`` and starting at level ``m0`` only changes
    the threshold that the base walk ``S_k`` must reach.
    """
    validate_integer_observable(f)
    if scales and any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    variants = [(s, m, c) for s in scales for m in m0s for c in conventions]
    thr = sorted({_threshold(s, m, c) for s, m, c in variants})
    counts = np.empty((N, len(thr)), dtype=np.int64)
    for i, rng in enumerate(rngs):
        if i >= N:
            break
        orbit = sys.sample_orbit(rng, n, points=f.symbol_func is None)
        steps = np.asarray(f.values(orbit)).astype(np.int64)
        counts[i] = occupation_counts(steps, thr)
    idx = {t: j for j, t in enumerate(thr)}
    fr = {v: counts[:, idx[_threshold(*v)]] / n for v in variants}
    return OccupationSample(n, fr)

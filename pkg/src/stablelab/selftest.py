"""Pathwise-exact invariant suite behind ``stablelab selftest``.

Everything here holds sample by sample (no Monte Carlo slack), so a single
violation is a bug.  The brute-force J1 oracle is independent of the dynamic
program in :mod:`stablelab.cadlag`.
"""
from __future__ import annotations

import itertools
import math
import time

import numpy as np

from . import intermittent as im
from .cadlag import CadlagPath, from_partial_sums, j1_distance, modulus, partial_sum_moduli, sup_distance
from .gibbs_markov import DyadicRenewalMap, HeavyBernoulliShift, distortion_check, f_alpha, oscillation_check
from .limit_lab import Criterion, _three_point
from .stable_laws import StableParams, arcsine_cdf, char_fn
from .zextension import levels_from_steps, occupation_counts

__all__ = [
    "j1_bruteforce",
    "random_step_path",
    "oscillation_suite",
    "endpoint_inclusion",
    "disjoint_supports",
    "j1_oracle_suite",
    "j1_metric_axioms",
    "run_selftest",
]


def random_step_path(rng: np.random.Generator, max_jumps: int = 3, horizon: float = 1.0) -> CadlagPath:
    k = int(rng.integers(0, max_jumps + 1))
    t = np.sort(rng.uniform(0.02, 0.98, k) * horizon)
    return CadlagPath.step(t, rng.normal(size=k), horizon, start=rng.normal())


def j1_bruteforce(x: CadlagPath, y: CadlagPath, s: float | None = None, eta: float = 1e-9) -> float:
    """J1 distance of two step paths by enumerating where each jump of ``x`` is sent.

    For step paths only the images ``u_i = lambda(tau_i)`` of the jump times of
    ``x`` matter.  Each image is either a jump time of ``y`` or the point of a
    gap between jumps of ``y`` nearest to ``tau_i``; every combination with
    increasing images is scored exactly.
    """
    s = min(x.horizon, y.horizon) if s is None else s
    tau, xv = x.jumps(s)
    sig, yv = y.jumps(s)
    X = np.vstack([x.values[:1], xv])
    m = len(tau)
    edges = np.concatenate([[0.0], sig, [s]])
    cands = []
    for i, t in enumerate(tau):
        c = set(float(v) for v in sig)
        for a, b in zip(edges[:-1], edges[1:]):
            lo, hi = a + (i + 1) * eta, b - (m - i) * eta
            if lo < hi:
                c.add(float(min(max(t, lo), hi)))
        cands.append(sorted(c))
    pts_y = np.concatenate([[0.0], sig, [s]])
    best = math.inf
    for us in itertools.product(*cands):
        u = np.asarray(us, dtype=float)
        if m and (np.any(np.diff(u) <= 0) or u[0] <= 0 or u[-1] >= s):
            continue
        shift = float(np.max(np.abs(u - tau))) if m else 0.0
        if shift >= best:
            continue
        pts = np.union1d(pts_y, u)
        xl = X[np.searchsorted(u, pts, side="right")]
        diff = float(np.max(np.linalg.norm(xl - y(pts), axis=1)))
        best = min(best, max(shift, diff))
    return best


def oscillation_suite(rng: np.random.Generator, cylinders: int = 1000, pairs: int = 100,
                      max_len: int = 4) -> int:
    """Violations of the cylinder oscillation bound for ``f_alpha`` on the dyadic map."""
    sys = DyadicRenewalMap()
    bad = 0
    for a in (0.8, 1.5):
        f = f_alpha(a)
        for _ in range(cylinders // 2):
            word = sys.sample_symbols(rng, int(rng.integers(1, max_len + 1)))
            bad += oscillation_check(sys, f, word, pairs, rng)
    return bad


def endpoint_inclusion(rng: np.random.Generator, paths: int = 2000, n: int = 200) -> int:
    """Paths where ``max_k |S_n - S_k| > kappa`` but ``max_k |S_k| <= kappa / 2``."""
    sys = DyadicRenewalMap()
    f = f_alpha(1.5)
    bad = 0
    kap = np.geomspace(0.1, 1000.0, 40) * n ** (1 / 1.5)
    for _ in range(paths):
        S = np.cumsum(f(sys.sample_orbit(rng, n).points) - 3.0)
        lhs = max(np.abs(S[-1] - S).max(), abs(S[-1]))
        rhs = np.abs(S).max()
        bad += int(np.sum((lhs > kap) & ~(rhs > kap / 2)))
    return bad


def disjoint_supports(rng: np.random.Generator, returns: int = 10**6) -> int:
    """Returns on which both excursion coordinates are nonzero (p = 3)."""
    m = im.make_lsv2(3.0)
    rs = im.find_Y(m)
    b = im.uniform_excursions(m, rs, returns, rng)
    return int(np.sum((b.by_side(0) > 0) & (b.by_side(1) > 0)))


def j1_oracle_suite(rng: np.random.Generator, pairs: int = 200) -> float:
    """Largest gap between :func:`j1_distance` and the brute-force oracle."""
    worst = 0.0
    for _ in range(pairs):
        x, y = random_step_path(rng), random_step_path(rng)
        worst = max(worst, abs(j1_distance(x, y) - j1_bruteforce(x, y)))
    return worst


def j1_metric_axioms(rng: np.random.Generator, triples: int = 1000, tol: float = 1e-9) -> dict:
    sym = tri = dom = 0
    for _ in range(triples):
        x, y, z = (random_step_path(rng) for _ in range(3))
        dxy, dyx = j1_distance(x, y), j1_distance(y, x)
        dxz, dyz = j1_distance(x, z), j1_distance(y, z)
        sym += abs(dxy - dyx) > tol
        tri += dxz > dxy + dyz + tol
        dom += dxy > sup_distance(x, y) + tol
    return {"symmetry": int(sym), "triangle": int(tri), "domination": int(dom)}


def _small_identities(rng: np.random.Generator) -> dict:
    """Exact identities from the module examples, as violation counts."""
    bad = {}
    sys = DyadicRenewalMap()
    bad["distortion"] = int(distortion_check(sys, 5, 200, rng) > 0) + int(
        distortion_check(HeavyBernoulliShift(0.75), 5, 200, rng) > 0)
    p = from_partial_sums([0, 0, 1, 1, 3], 1.0, 0.0, 4)
    bad["from_partial_sums"] = int(not np.array_equal(p.values[:, 0], [0, 0, 1, 1, 3]))
    x = CadlagPath.step([0.5], [1.0])
    y = CadlagPath.step([0.6], [1.0])
    bad["j1_example"] = int(abs(j1_distance(x, y) - 0.1) > 1e-12)
    bad["moduli"] = 0
    for _ in range(50):
        w = random_step_path(rng)
        P = np.cumsum(np.concatenate([[0.0], rng.normal(size=50)]))
        q = from_partial_sums(P, 1.0, 0.0, 50)
        bad["moduli"] += int(abs(modulus(w, 1.0, 1) - float(np.abs(w.values - w.values[0]).max())) > 1e-12)
        for d in (0.013, 0.1, 0.37):
            for j in (1, 2, 3):
                bad["moduli"] += int(
                    abs(partial_sum_moduli(P[None, :], d, j)[0] - modulus(q, d, j)) > 1e-12)
    params = [StableParams(0.5, 1, 0), StableParams(0.8, 1, 1), StableParams(1.5, 2, 1)]
    t = rng.normal(size=20) * 3
    bad["char_fn"] = sum(int(abs(char_fn(pr, 0.0) - 1) > 0) +
                         int(np.max(np.abs(char_fn(pr, -t) - np.conj(char_fn(pr, t)))) > 1e-14)
                         for pr in params)
    ts = np.linspace(0.01, 0.99, 15)
    bad["arcsine_reflection"] = sum(
        int(np.max(np.abs(arcsine_cdf(r, ts) - (1 - arcsine_cdf(1 - r, 1 - ts)))) > 1e-9)
        for r in (0.3, 0.5, 0.7))
    steps = rng.integers(-3, 4, size=(20, 300))
    lev = levels_from_steps(steps, 0)[:, :-1]
    cnt = occupation_counts(steps, [0, 1, -2])
    bad["occupation_counts"] = int(np.any(cnt[:, 0] != (lev >= 0).sum(1)) or
                                   np.any(cnt[:, 2] != (lev >= -2).sum(1)))
    S = np.cumsum(rng.normal(size=(30, 12)), axis=1)
    brute = np.array([max((min(abs(r[j] - r[i]), abs(r[l] - r[j]))
                           for i in range(12) for j in range(i + 1, 12) for l in range(j + 1, 12)),
                          default=0.0) for r in S])
    bad["three_point_max"] = int(np.max(np.abs(_three_point(S) - brute)) > 1e-12)
    return bad


def run_selftest(seed: int = 0, quick: bool = False) -> tuple[list[Criterion], dict]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9,)))
    t0 = time.perf_counter()
    crits = []
    timings = {}

    def timed(name, fn):
        t = time.perf_counter()
        out = fn()
        timings[name] = time.perf_counter() - t
        return out

    crits.append(Criterion("oscillation_violations",
                           timed("oscillation", lambda: oscillation_suite(rng, 100 if quick else 1000)), 0, "=="))
    crits.append(Criterion("endpoint_pathwise_violations",
                           timed("endpoint", lambda: endpoint_inclusion(rng, 200 if quick else 2000)), 0, "=="))
    crits.append(Criterion("disjoint_excursion_violations",
                           timed("disjoint", lambda: disjoint_supports(rng, 10**5 if quick else 10**6)), 0, "=="))
    crits.append(Criterion("j1_oracle_gap", timed("j1_oracle", lambda: j1_oracle_suite(rng, 50 if quick else 200)),
                           1e-3, "<"))
    ax = timed("j1_axioms", lambda: j1_metric_axioms(rng, 100 if quick else 1000))
    crits += [Criterion(f"j1_{k}_violations", v, 0, "==") for k, v in ax.items()]
    ids = timed("identities", lambda: _small_identities(rng))
    crits += [Criterion(f"{k}_violations", v, 0, "==") for k, v in ids.items()]
    timings["total"] = time.perf_counter() - t0
    return crits, timings

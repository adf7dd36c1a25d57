import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablelab.gibbs_markov import BoundaryError
from stablelab.intermittent import (
    LongExcursionError,
    excursion_tail_estimate,
    excursions,
    exact_first_return,
    find_Y,
    first_return,
    induced_chain,
    make_lsv2,
    measure_finiteness,
    stationary_excursions,
    uniform_excursions,
)

M3 = make_lsv2(3.0)
RS3 = find_Y(M3)


def test_formula_examples():
    m = make_lsv2(1.0)
    assert m.T(0.25) == pytest.approx(3 / 8)
    assert m.T(0.5) == pytest.approx(1.0)
    with pytest.raises(BoundaryError):
        m.T(1.0)
    with pytest.raises(ValueError):
        make_lsv2(0.0)


@given(st.floats(0.1, 5), st.floats(1e-6, 1 - 1e-6))
def test_symmetry_of_map(p, x):
    if x == 0.5:
        return
    m = make_lsv2(p)
    assert m.T(1 - x) == pytest.approx(1 - m.T(x), abs=1e-12)


@pytest.mark.parametrize("p", [0.5, 1.0, 3.0])
def test_cusp_expansion_constant(p):
    m = make_lsv2(p)
    x = 2.0 ** -np.arange(5, 21)
    assert np.allclose(m.r0(x) / x ** (1 + p), 2 ** p, rtol=1e-13)
    # T x - x loses relative accuracy by cancellation, so compare absolutely
    assert np.all(np.abs((m.T(x) - x) - m.r0(x)) <= 4 * np.finfo(float).eps * x)
    assert m.derivative(1e-15) == pytest.approx(1.0, abs=1e-6)


def test_period_two_point():
    rs = find_Y(make_lsv2(1.0), table_size=64)
    assert rs.y0 == pytest.approx((math.sqrt(3) - 1) / 2, abs=1e-14)
    for p in (0.5, 2.0, 3.0):
        m = make_lsv2(p)
        r = find_Y(m, table_size=64)
        assert r.y1 == pytest.approx(1 - r.y0)
        assert r.y0 < 0.5 < r.y1
        assert m.T(r.y1) == pytest.approx(r.y0, abs=1e-10)


def test_measure_finiteness():
    assert measure_finiteness(make_lsv2(0.5)) == "finite"
    assert measure_finiteness(make_lsv2(1.0)) == "infinite"
    assert measure_finiteness(make_lsv2(3.0)) == "infinite"


@given(st.floats(0.0, 1.0))
def test_first_return_matches_direct_iteration(u):
    x = RS3.y0 + (RS3.y1 - RS3.y0) * (0.02 + 0.96 * u)
    if x == 0.5:
        return
    try:
        n, side, w = exact_first_return(M3, RS3, x, cap=10**5)
    except LongExcursionError:
        return
    phi, s, v = first_return(M3, RS3, x)
    assert phi == n
    if n > 1:
        assert s == side
    assert RS3.y0 < v < RS3.y1


def test_no_immediate_returns():
    # T y0 = y1 and T is increasing on each branch, so every point of Y leaves Y
    xs = np.linspace(RS3.y0, RS3.y1, 1001)[1:-1]
    tx = M3.T(xs[xs != 0.5])
    assert np.all((tx < RS3.y0) | (tx > RS3.y1))


def test_first_return_rejects_outside():
    with pytest.raises(BoundaryError):
        first_return(M3, RS3, 0.1)
    with pytest.raises(BoundaryError):
        first_return(M3, RS3, 0.5)


def test_symmetric_excursions():
    xs = np.linspace(RS3.y0, RS3.y1, 203)[1:-1]
    xs = xs[xs != 0.5]
    for x in xs:
        a = first_return(M3, RS3, x)
        b = first_return(M3, RS3, 1 - x)
        assert a[0] == b[0]
        if a[0] > 1:
            assert a[1] == 1 - b[1]
        assert a[2] == pytest.approx(1 - b[2], abs=1e-9)


def test_disjoint_supports_and_positivity(rng):
    b = uniform_excursions(M3, RS3, 100_000, rng)
    assert np.all(b.phi >= 1)
    assert not np.any((b.by_side(0) > 0) & (b.by_side(1) > 0))
    assert b.censored == 0


def test_cap_is_reported(rng):
    b = uniform_excursions(M3, RS3, 20_000, rng, cap=1e3)
    assert b.censored > 0
    assert b.accounting()["censored"] == b.censored


def test_truncated_mean_reproducible():
    means = []
    for seed in (1, 2):
        b = uniform_excursions(M3, RS3, 100_000, np.random.default_rng(seed), cap=1e6)
        phi = np.minimum(b.phi, 1e6)
        means.append((phi.mean(), phi.std() / math.sqrt(len(phi))))
    (m1, s1), (m2, s2) = means
    assert abs(m1 - m2) < 3 * math.hypot(s1, s2)


def test_hill_on_stationary_chains(rng):
    b = stationary_excursions(M3, RS3, 200_000, 4, 500, rng)
    est = excursion_tail_estimate(M3, RS3, len(b.phi), rng, batch=b)
    for j in (0, 1):
        assert abs(est[f"hill_{j}"]["alpha"] - 1 / 3) < 0.05
    for r in est["tail_ratios"]:
        assert 0.8 < r["ratio"] < 1.25


def test_induced_chain_continues(rng):
    b, x = induced_chain(M3, RS3, 0.45, 50, rng)
    assert len(b.phi) == 50 and RS3.y0 < x < RS3.y1
    with pytest.raises(ValueError):
        excursion_tail_estimate(M3, RS3, 100, rng)
    with pytest.raises(BoundaryError):
        excursions(M3, RS3, [0.1], rng)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special
from scipy import stats as sst

from stablelab.gibbs_markov import (
    BoundaryError,
    Density,
    DyadicRenewalMap,
    HeavyBernoulliShift,
    MarkovModulatedShift,
    constant_observable,
    distortion_check,
    ergodic_sum,
    f_alpha,
    iterate,
    lipschitz_ratio_check,
    oscillation_check,
    sample_initial,
    separation_time,
    symbol_observable,
    theta_f,
    theta_f_n,
    weighted_sums,
)
from stablelab.intermittent import InducedIntermittent, find_Y, make_lsv2
from stablelab.stats import ks_one_sample

dy = DyadicRenewalMap()


def test_dyadic_orbit_example():
    assert np.allclose(iterate(dy, 0.75, 2), [0.75, 0.5, 1.0])
    assert np.allclose(iterate(dy, 1.0, 3), 1.0)


def test_dyadic_cylinders():
    assert dy.cylinder(0.75) == 1 and dy.cylinder(0.5) == 2 and dy.cylinder(1.0) == 1
    assert dy.cylinder(0.3) == 2
    with pytest.raises(BoundaryError):
        dy.cylinder(0.0)


@given(st.floats(1e-12, 1.0, exclude_min=True))
def test_dyadic_branch_inverse(x):
    k = dy.cylinder(x)
    assert float(dy.inverse_branch(k, dy.branch(k, x))) == pytest.approx(x, rel=1e-12)
    assert 0.0 < dy.branch(k, x) <= 1.0


def test_ergodic_sum_examples():
    f1 = f_alpha(1.0)
    assert ergodic_sum(dy, f1, 0.75, 3) == pytest.approx(13 / 3)
    assert ergodic_sum(dy, f1, 0.75, 0) == 0
    assert ergodic_sum(dy, constant_observable(2.5), 0.3, 7) == pytest.approx(17.5)


def test_separation_time_examples():
    assert separation_time(dy, 0.75, 0.3, 10) == 1
    assert separation_time(dy, 0.75, 0.8, 10) == 2
    assert separation_time(dy, 0.6, 0.6, 10) == 10


def test_theta_f_examples():
    f = f_alpha(0.8)
    hb = HeavyBernoulliShift(0.75)
    assert theta_f(hb, symbol_observable(hb), 0.4) == 0
    assert theta_f(dy, constant_observable(1.0), 0.4) == 0
    assert theta_f(dy, f, 0.3) == pytest.approx(4 / 0.8 * 2 ** (2 / 0.8))
    assert theta_f_n(dy, f, 0.75, 1) == pytest.approx(0.5 * theta_f(dy, f, 0.75))
    want = 0.25 * theta_f(dy, f, 0.75) + 0.5 * theta_f(dy, f, 0.5)
    assert theta_f_n(dy, f, 0.75, 2) == pytest.approx(want)


@pytest.mark.parametrize("a", [0.8, 1.5])
@pytest.mark.parametrize("k", [1, 2, 5, 9])
def test_lipschitz_constant_bounds_sampled_ratios(rng, a, k):
    assert lipschitz_ratio_check(dy, f_alpha(a), k, 300, rng) <= 1.0


def test_narrower_constant_is_violated(rng):
    # 2/alpha is enough below alpha = 1 but not above it, hence the factor 4
    worst = max(lipschitz_ratio_check(dy, f_alpha(1.9, 2.0), k, 2000, rng, depth=10) for k in (1, 3, 5))
    assert worst > 1.0


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.8, 1.5]), st.integers(1, 4))
def test_oscillation_bound(seed, a, n):
    rng = np.random.default_rng(seed)
    word = dy.sample_symbols(rng, n)
    assert oscillation_check(dy, f_alpha(a), word, 100, rng) == 0


def test_oscillation_piecewise_constant(rng):
    hb = HeavyBernoulliShift(0.75)
    assert oscillation_check(hb, symbol_observable(hb), [1, -2, 3], 50, rng) == 0
    with pytest.raises(ValueError):
        oscillation_check(dy, f_alpha(0.8), [], 5, rng)


@given(st.floats(0.05, 0.95), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_weighted_sums_recursion(rho, n, seed):
    g = np.random.default_rng(seed).random(n)
    G = weighted_sums(g, rho)
    direct = [sum(rho ** (k - j) * g[j] for j in range(k)) for k in range(1, n + 1)]
    assert np.allclose(G, direct)


def test_distortion_affine_is_zero(rng):
    assert distortion_check(dy, 4, 100, rng) == 0.0
    assert distortion_check(HeavyBernoulliShift(0.75), 4, 100, rng) == 0.0


def test_distortion_induced_is_finite(rng):
    m = make_lsv2(3.0)
    sysi = InducedIntermittent(m, find_Y(m, table_size=2**12))
    a = distortion_check(sysi, 1, 100, rng)
    b = distortion_check(sysi, 1, 400, rng)
    assert math.isfinite(a) and math.isfinite(b) and b < 2 * a + 0.5


def test_invariant_sampling(rng):
    x = sample_initial(dy, "invariant", rng, 10**6)
    assert np.all((x > 0) & (x <= 1))
    assert abs(x.mean() - 0.5) < 5 * math.sqrt(1 / 12 / len(x))
    d = sample_initial(dy, Density(lambda t: 2.0 * (t <= 0.5), 2.0), rng, 1000)
    assert np.all(d <= 0.5)
    with pytest.raises(ValueError):
        sample_initial(dy, Density(lambda t: 1 / t, math.inf), rng, 5)


@pytest.mark.parametrize("system", [DyadicRenewalMap(), HeavyBernoulliShift(0.75)])
def test_measure_preservation(rng, system):
    x = system.sample_invariant(rng, 200_000)
    if isinstance(system, HeavyBernoulliShift):
        x = x[:20_000]
    tx = np.array([system.T(float(v)) for v in x])
    assert ks_one_sample(tx, sst.uniform.cdf) < 0.012


def test_heavy_bernoulli_cylinders_tile_interval():
    hb = HeavyBernoulliShift(0.75)
    edges = sorted(hb.cylinder_bounds(s) for s in [1, -1, 2, -2, 3, -3])
    for (a, b), (c, _) in zip(edges, edges[1:]):
        assert b == pytest.approx(c, abs=1e-15)
    tail = special.zeta(1.75, 2001) / special.zeta(1.75)
    assert sum(hb.symbol_prob(s) for s in range(-2000, 2001)) + tail == pytest.approx(1, abs=1e-12)


def test_heavy_bernoulli_symbol_tail(rng):
    hb = HeavyBernoulliShift(1.2)
    s = np.abs(hb.sample_symbols(rng, 400_000))
    tm = hb.tail_model
    emp = np.mean(s > 200)
    assert emp == pytest.approx(float(tm.abs_tail(200)), rel=0.15)


def test_orbit_from_symbols_is_consistent(rng):
    hb = HeavyBernoulliShift(0.75)
    orb = hb.sample_orbit(rng, 6, points=True)
    assert [hb.cylinder(p) for p in orb.points] == list(orb.symbols)


def test_markov_modulated_stationary_law():
    mm = MarkovModulatedShift(0.8, 0.7, truncation=1000)
    plus, minus, tails = mm.stationary_law()
    assert plus.sum() + minus.sum() + tails.sum() == pytest.approx(1.0, abs=1e-12)
    assert mm.tail_model.c_plus == pytest.approx(mm.tail_model.c_minus)


def test_markov_modulated_signs_persist(rng):
    s = np.sign(MarkovModulatedShift(0.8, 0.9).sample_symbols(rng, 100_000))
    assert np.mean(s[1:] == s[:-1]) == pytest.approx(0.9, abs=0.01)


def test_observable_constructors():
    hb = HeavyBernoulliShift(1.5)
    f2 = symbol_observable(hb, 2)
    assert f2.integer and f2.mean == 0.0
    assert f2.tail.c_plus == pytest.approx(hb.tail_model.c_plus * 2 ** 1.5)
    with pytest.raises(ValueError):
        symbol_observable(hb, 0)
    assert f_alpha(1.5).mean == pytest.approx(3.0)
    assert f_alpha(0.8).mean is None

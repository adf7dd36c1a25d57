import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablelab.cadlag import CadlagPath, occupation_fraction
from stablelab.gibbs_markov import HeavyBernoulliShift, constant_observable, ergodic_sum, f_alpha, symbol_observable
from stablelab.gibbs_markov import DyadicRenewalMap
from stablelab.stats import ks_distance
from stablelab.zextension import (
    LevelOverflowError,
    SkewProductState,
    levels_from_steps,
    occupation_counts,
    occupation_fraction_experiment,
    skew_orbit,
    validate_integer_observable,
)

HB = HeavyBernoulliShift(0.75)


def test_trivial_level_walks(rng):
    assert np.all(skew_orbit(HB, constant_observable(0), SkewProductState(None, 3), 10, rng) == 3)
    assert np.array_equal(skew_orbit(HB, constant_observable(1), SkewProductState(None, 0), 10, rng),
                          np.arange(11))


def test_level_identity_against_ergodic_sums():
    f = symbol_observable(HB)
    x0 = 0.3141
    lev = skew_orbit(HB, f, SkewProductState(x0, 5), 8)
    for k in range(9):
        assert lev[k] - 5 == ergodic_sum(HB, f, x0, k)


@given(st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=50), st.integers(-100, 100))
def test_levels_are_cumulative(steps, m0):
    lev = levels_from_steps(np.array(steps), m0)
    assert lev[0] == m0 and np.array_equal(np.diff(lev), steps)


def test_overflow_rejected():
    with pytest.raises(LevelOverflowError):
        levels_from_steps(np.array([2**61, 2**61]), 0)
    with pytest.raises(ValueError):
        levels_from_steps(np.array([0.5]), 0)


def test_non_integer_observable_rejected(rng):
    with pytest.raises(ValueError):
        validate_integer_observable(f_alpha(0.8))
    with pytest.raises(ValueError):
        skew_orbit(DyadicRenewalMap(), f_alpha(0.8), SkewProductState(None, 0), 5, rng)
    uncentered = HeavyBernoulliShift(1.5, symmetric=False)
    with pytest.raises(ValueError):
        validate_integer_observable(symbol_observable(uncentered))


def test_deterministic_fractions(rng):
    n = 1000
    gens = [np.random.default_rng(i) for i in range(3)]
    up = occupation_fraction_experiment(HB, constant_observable(1), n, 3, gens, scales=(1,), m0s=(0,))
    assert np.allclose(up.variant(1, 0, "m>=1"), (n - 1) / n)
    assert np.allclose(up.variant(1, 0, "m>=0"), 1.0)
    down = occupation_fraction_experiment(HB, constant_observable(-1), n, 3, gens, scales=(1,), m0s=(0,))
    assert np.allclose(down.variant(1, 0, "m>=1"), 0.0)
    two = occupation_fraction_experiment(HB, constant_observable(2), n, 1, gens, scales=(1,), m0s=(0,))
    assert two.variant(1, 0, "m>=1")[0] == pytest.approx(1 - 1 / n)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(-2, 2))
def test_variant_thresholds_match_direct_count(seed, scale, m0):
    rng = np.random.default_rng(seed)
    steps = HB.sample_symbols(rng, 200)
    sample = occupation_fraction_experiment(HB, symbol_observable(HB), 200, 1,
                                            [np.random.default_rng(seed)], scales=(scale,), m0s=(m0,))
    lev = m0 + scale * np.concatenate([[0], np.cumsum(steps)])[:-1]
    assert sample.variant(scale, m0, "m>=1")[0] == np.mean(lev >= 1)
    assert sample.variant(scale, m0, "m>=0")[0] == np.mean(lev >= 0)


@given(st.integers(0, 2**32 - 1))
def test_counts_agree_with_path_functional(seed):
    # the occupation fraction of the rescaled level path on [0, 1] is the same count over n
    rng = np.random.default_rng(seed)
    steps = HB.sample_symbols(rng, 60)
    lev = levels_from_steps(steps, 0)[:-1]
    path = CadlagPath(np.arange(60) / 60, (lev - 0.5)[:, None], 1.0)
    frac = occupation_counts(steps, [1])[0] / 60
    assert abs(occupation_fraction(path) - frac) <= 1 / 60


def test_fraction_in_unit_interval_and_symmetric(rng):
    gens = [np.random.default_rng(i) for i in range(400)]
    s = occupation_fraction_experiment(HB, symbol_observable(HB), 2000, 400, gens, scales=(1,), m0s=(0,))
    fr = s.variant(1, 0, "m>=0")
    assert np.all((fr >= 0) & (fr <= 1))
    assert ks_distance(fr, 1 - s.variant(1, 0, "m>=1")) < 0.1


def test_symmetric_endpoint_mean(rng):
    ends = np.array([skew_orbit(HB, symbol_observable(HB), SkewProductState(None, 0), 500, rng)[-1]
                     for _ in range(2000)], dtype=float)
    B = 500 ** (1 / 0.75)
    # infinite variance: compare against a robust spread instead of a standard error
    assert abs(np.median(ends / B)) < 3 * np.subtract(*np.percentile(ends / B, [75, 25])) / math.sqrt(2000)

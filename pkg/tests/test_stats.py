import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sst

from stablelab.stats import (
    distance_correlation,
    factorization_error,
    hill_estimate,
    ks_distance,
    ks_one_sample,
    ks_two_sample,
    rank_transform,
    standard_error,
)


def test_hill_on_exact_pareto(rng):
    x = rng.pareto(0.8, 200_000) + 1.0
    h = hill_estimate(x, 0.05)
    assert 0.78 <= h.alpha <= 0.82
    assert h.ci_low < 0.8 < h.ci_high


def test_hill_needs_data():
    with pytest.raises(ValueError):
        hill_estimate(np.arange(1, 50), 0.05)
    with pytest.raises(ValueError):
        hill_estimate(np.ones(10_000), 0.05)


def test_ks_extremes(rng):
    a = rng.normal(size=500)
    assert ks_distance(a, a) == 0.0
    assert ks_distance(a, a + 100) == 1.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy's asymptotic p-value at tiny n
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40),
       st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_ks_matches_scipy(a, b):
    assert ks_distance(a, b) == pytest.approx(sst.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


def test_ks_one_sample_matches_scipy(rng):
    x = rng.normal(size=1000)
    assert ks_one_sample(x, sst.norm.cdf) == pytest.approx(sst.kstest(x, "norm").statistic, abs=1e-12)


def test_permutation_pvalue_null_calibration():
    rng = np.random.default_rng(7)
    pv = [ks_two_sample(rng.normal(size=100), rng.normal(size=100), 200, rng)[1] for _ in range(200)]
    assert 0.02 < np.mean(np.array(pv) < 0.1) < 0.2
    _, p = ks_two_sample(rng.normal(size=100), rng.normal(size=100) + 2, 200, rng)
    assert p < 0.01


def test_distance_correlation(rng):
    x = rng.normal(size=2000)
    assert distance_correlation(x, rng.normal(size=2000)) < 0.05
    assert distance_correlation(x, x ** 2) > 0.2
    assert distance_correlation(x, 3 * x + 1) == pytest.approx(1.0, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_dcor_rank_invariance(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_cauchy(200), rng.standard_cauchy(200)
    assert distance_correlation(x, y) == pytest.approx(distance_correlation(np.arctan(x), y ** 3), abs=1e-12)
    assert np.array_equal(np.argsort(rank_transform(x)), np.argsort(x))


def test_factorization(rng):
    x, y = rng.normal(size=20_000), rng.normal(size=20_000)
    assert factorization_error(x, y) < 0.01
    assert factorization_error(x, x) > 0.1


def test_standard_error():
    assert standard_error(0.5, 100) == pytest.approx(0.05)
    assert standard_error(0.0, 100) == 0


def test_same_sampler_two_seeds_null_calibration():
    from stablelab.stable_laws import StableParams, sample_stable

    p = StableParams(1.5, 1, 1)
    ok = 0
    for r in range(60):
        a = sample_stable(p, np.random.default_rng([r, 0]), 10_000)
        b = sample_stable(p, np.random.default_rng([r, 1]), 10_000)
        ok += ks_two_sample(a, b, 100, np.random.default_rng([r, 2]))[1] > 0.01
    assert ok >= 0.95 * 60

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sst

from stablelab.stable_laws import (
    ArcsineParams,
    StableParams,
    TailModel,
    UnsupportedCaseError,
    arcsine_cdf,
    c_alpha,
    canonical_An,
    canonical_Bn,
    char_fn,
    positivity_rho,
    positivity_rho_exact,
    reference_levy_path,
    sample_stable,
)
from stablelab.stats import ks_distance, ks_one_sample

alphas = st.floats(0.3, 1.9).filter(lambda a: abs(a - 1) > 0.05)


def test_params_validation():
    with pytest.raises(ValueError):
        StableParams(2.0, 1, 0)
    with pytest.raises(ValueError):
        StableParams(0.5, 0, 0)
    with pytest.raises(ValueError):
        StableParams(0.5, -1, 2)


def test_char_fn_at_zero():
    assert char_fn(StableParams(0.9, 1, 1), 0.0) == 1


@given(alphas, st.floats(0.1, 3), st.floats(-20, 20))
def test_symmetric_char_fn_is_real(a, c, t):
    assert abs(char_fn(StableParams(a, c, c), t).imag) < 1e-14


@given(alphas, st.floats(0, 2), st.floats(0.1, 2), st.floats(-20, 20))
def test_char_fn_hermitian_and_bounded(a, cp, cm, t):
    p = StableParams(a, cp, cm)
    v = char_fn(p, t)
    assert abs(v) <= 1 + 1e-15
    assert abs(char_fn(p, -t) - np.conj(v)) < 1e-14


def test_char_fn_levy_case():
    # c_{1/2} = Gamma(1/2) cos(pi/4) = sqrt(pi/2)
    got = char_fn(StableParams(0.5, 1, 0), 1.0)
    want = np.exp(-math.sqrt(math.pi / 2) * (1 - 1j))
    assert abs(got - want) < 1e-13
    assert c_alpha(0.5) == pytest.approx(math.sqrt(math.pi / 2))


def test_levy_sampler_positive_and_matches_scipy(rng):
    p = StableParams(0.5, 1, 0)
    x = sample_stable(p, rng, 100_000)
    assert np.all(x > 0)
    # the one-sided 1/2-stable law with this char. function is Levy with scale pi/2
    assert p.scale == pytest.approx(math.pi / 2)
    assert ks_one_sample(x, sst.levy(scale=math.pi / 2).cdf) < 0.01


def test_symmetric_15_mean(rng):
    x = sample_stable(StableParams(1.5, 1, 1), rng, 100_000)
    se = x.std() / math.sqrt(len(x))
    assert abs(x.mean()) < 5 * se


@pytest.mark.parametrize("a,cp,cm", [(0.5, 1, 0), (0.8, 1, 1), (1.5, 2, 1), (1.2, 0.3, 1.0)])
def test_empirical_char_fn(rng, a, cp, cm):
    p = StableParams(a, cp, cm)
    x = sample_stable(p, rng, 100_000)
    t = np.linspace(-2, 2, 9)
    emp = np.exp(1j * np.outer(t, x)).mean(axis=1)
    assert np.max(np.abs(emp - char_fn(p, t))) < 4 / math.sqrt(len(x))


def test_canonical_scaling_examples():
    assert canonical_Bn(TailModel.pure_power(0.5), 100) == pytest.approx(10_000)
    assert canonical_Bn(TailModel.pure_power(1.3), 1) == pytest.approx(1.0)
    m = TailModel.with_ell(1.2, lambda t: np.log(np.e + t))
    B = canonical_Bn(m, 10_000)
    assert abs(10_000 * math.log(math.e + B) - B ** 1.2) < 1e-6 * B ** 1.2
    with pytest.raises(ValueError):
        canonical_Bn(TailModel.pure_power(1.2), 0)


@given(st.floats(0.2, 1.9), st.integers(1, 10**6))
def test_canonical_Bn_root_property(a, n):
    m = TailModel.with_ell(a, lambda t: 1.0 + 0.5 * np.sin(np.log1p(t)) ** 2)
    B = canonical_Bn(m, n)
    assert n * float(m.ell(B)) == pytest.approx(B ** a, rel=1e-7)


def test_canonical_centering():
    assert canonical_An(TailModel.pure_power(0.7), None, 10) == 0
    assert canonical_An(TailModel.pure_power(1.5), 2.0, 10) == 20
    assert canonical_An(TailModel.pure_power(1.0, 1, 1), None, 10) == 0
    with pytest.raises(UnsupportedCaseError):
        canonical_An(TailModel.pure_power(1.0, 1, 0), None, 10)
    with pytest.raises(ValueError):
        canonical_An(TailModel.pure_power(1.5), None, 10)


def test_asymmetric_alpha_one_unsupported(rng):
    with pytest.raises(UnsupportedCaseError):
        sample_stable(StableParams(1.0, 1, 0), rng, 10)


def test_arcsine_examples():
    assert arcsine_cdf(0.5, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert arcsine_cdf(0.5, 0.25) == pytest.approx(1 / 3, abs=1e-12)
    assert arcsine_cdf(0.5, 1.0) == 1.0
    assert arcsine_cdf(0.5, 0.0) == 0.0
    with pytest.raises(ValueError):
        ArcsineParams(1.0)
    with pytest.raises(ValueError):
        arcsine_cdf(0.5, 1.2)


@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0))
def test_arcsine_matches_beta(rho, t):
    # the generalized arcsine law is Beta(rho, 1 - rho)
    assert arcsine_cdf(rho, t) == pytest.approx(sst.beta(rho, 1 - rho).cdf(t), abs=1e-8)


@given(st.floats(0.05, 0.95))
def test_arcsine_monotone(rho):
    v = arcsine_cdf(rho, np.linspace(0, 1, 41))
    assert np.all(np.diff(v) >= -1e-12)


def test_positivity_rho(rng):
    assert positivity_rho(StableParams(1.2, 1, 1), 10, rng) == 0.5
    assert positivity_rho(StableParams(0.6, 1, 0), 10, rng) == 1.0
    p = StableParams(1.5, 2, 1)
    mc = positivity_rho(p, 200_000, rng)
    assert abs(mc - positivity_rho_exact(p)) < 5 * math.sqrt(0.25 / 200_000)


def test_reference_path_matches_sampler(rng):
    p = StableParams(1.5, 1, 1)
    ends = np.array([reference_levy_path(p, [0.0, 1.0], rng)(1.0)[0] for _ in range(3000)])
    assert ks_distance(ends, sample_stable(p, rng, 3000)) < 0.05
    with pytest.raises(ValueError):
        reference_levy_path(p, [0.1, 1.0], rng)


@given(st.floats(0.2, 1.9), st.floats(0.1, 3), st.floats(0, 3), st.integers(1, 10**8))
def test_normalization_identity_pure_power(a, cp, cm, n):
    # n tau(B_n) = c_+ + c_- exactly when ell is constant
    m = TailModel.pure_power(a, cp, cm)
    assert n * float(m.abs_tail(canonical_Bn(m, n))) == pytest.approx(cp + cm, rel=1e-9)


def test_centering_negligible():
    m = TailModel.pure_power(1.5)
    r = [canonical_An(m, 3.0, n) / (n * canonical_Bn(m, n)) for n in (10, 10**3, 10**5)]
    assert r[0] > r[1] > r[2]

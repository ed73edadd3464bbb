import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from swarm_sop.fading import (
    ExpPolyMix,
    ShadowedRicianParams,
    rayleigh_gain_cdf,
    rayleigh_gain_pdf,
    sample_rayleigh_gain,
    sample_sr_gain,
    sr_ccdf_coefficients,
    sr_cdf_mixture,
    sr_pdf_mixture,
)

sys.path.insert(0, str(Path(__file__).parent))
from oracles import sr_pdf  # noqa: E402

params = st.builds(ShadowedRicianParams, m_S=st.integers(1, 8), b=st.floats(0.05, 2.0), Omega=st.floats(0.0, 3.0))
terms = st.lists(st.tuples(st.floats(-3, 3), st.integers(0, 4), st.floats(0.1, 4)), min_size=1, max_size=4)


def test_baseline_constants():
    # hand evaluation of the closed forms for (m_S, b, Omega) = (5, 0.251, 0.279)
    p = ShadowedRicianParams()
    assert p.A == pytest.approx((2.51 / 2.789) ** 5 / 0.502, rel=1e-14)
    assert p.A == pytest.approx(1.17604, abs=5e-6)
    assert p.B == pytest.approx(1.99203, abs=5e-6)
    assert p.vartheta == pytest.approx(0.199275, abs=5e-7)
    assert p.eta == pytest.approx(1.792757, abs=5e-7)
    assert p.mean == pytest.approx(0.781)


@settings(max_examples=40, deadline=None)
@given(params, st.floats(0.0, 12.0))
def test_pdf_matches_hypergeometric_form(p, x):
    assert sr_pdf_mixture(p)(x) == pytest.approx(float(sr_pdf(p, x)), rel=1e-10, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(params)
def test_pdf_normalised_and_mean(p):
    f = sr_pdf_mixture(p)
    assert abs(f.integrate_0_to_inf() - 1.0) <= 1e-10
    assert f.moment(1) == pytest.approx(p.mean, rel=1e-10)
    assert p.component_weights.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(params, st.floats(0.0, 10.0))
def test_cdf_is_integral_of_pdf(p, x):
    F = sr_cdf_mixture(p)
    ref = integrate.quad(sr_pdf_mixture(p), 0, x, epsabs=1e-14, epsrel=1e-12)[0]
    assert F(x) == pytest.approx(ref, abs=1e-11)
    K = sr_ccdf_coefficients(p)
    ccdf = sum(K[q] * x**q for q in range(p.m_S)) * math.exp(-p.eta * x)
    assert 1.0 - F(x) == pytest.approx(ccdf, abs=1e-12)


def test_cdf_limits():
    F = sr_cdf_mixture(ShadowedRicianParams())
    assert F(0.0) == pytest.approx(0.0, abs=1e-14)
    assert F(200.0) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("kw", [dict(m_S=0), dict(m_S=31), dict(m_S=2.5), dict(b=0), dict(Omega=-1)])
def test_param_invariants(kw):
    with pytest.raises(ValueError):
        ShadowedRicianParams(**kw)


def test_rayleigh():
    assert rayleigh_gain_pdf().integrate_0_to_inf() == pytest.approx(1.0)
    assert rayleigh_gain_cdf()(1.0) == pytest.approx(1 - math.exp(-1))


@settings(max_examples=40, deadline=None)
@given(terms, terms, st.floats(0, 6))
def test_mix_product_and_sum(t1, t2, x):
    a, b = ExpPolyMix.from_terms(t1), ExpPolyMix.from_terms(t2)
    assert (a * b)(x) == pytest.approx(a(x) * b(x), rel=1e-9, abs=1e-12)
    assert (a + b)(x) == pytest.approx(a(x) + b(x), rel=1e-9, abs=1e-12)
    assert (a - b)(x) == pytest.approx(a(x) - b(x), rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(terms, st.integers(0, 4), st.floats(0, 4))
def test_mix_integer_power(t, n, x):
    a = ExpPolyMix.from_terms(t)
    assert a.integer_power(n)(x) == pytest.approx(a(x) ** n, rel=1e-8, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(terms, st.floats(0.1, 5))
def test_mix_derivative_and_integral(t, x):
    a = ExpPolyMix.from_terms(t)
    h = 1e-5
    fd = (a(x + h) - a(x - h)) / (2 * h)
    assert a.derivative()(x) == pytest.approx(fd, rel=1e-5, abs=1e-6)
    ref = integrate.quad(a, 0, x, epsabs=1e-13, epsrel=1e-12)[0]
    assert a.integrate_0_to(x) == pytest.approx(ref, rel=1e-9, abs=1e-11)


def test_mix_growing_exponential_integral():
    a = ExpPolyMix.from_terms([(1.0, 2, -0.5)])
    ref = integrate.quad(lambda t: t**2 * math.exp(0.5 * t), 0, 3)[0]
    assert a.integrate_0_to(3.0) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        a.integrate_0_to_inf()


def test_mix_merges_like_terms():
    a = ExpPolyMix.from_terms([(1.0, 1, 2.0), (2.0, 1, 2.0 + 1e-15), (3.0, 0, 0.0)])
    assert a.terms == ((3.0, 1, 2.0),)
    assert a.constant_offset == 3.0


def test_sampler_ks_and_moments():
    p = ShadowedRicianParams()
    x = sample_sr_gain(p, np.random.default_rng(5), 200_000)
    F = sr_cdf_mixture(p)
    assert stats.kstest(x, F).pvalue > 1e-3
    assert x.mean() == pytest.approx(p.mean, rel=0.01)
    assert isinstance(sample_sr_gain(p, np.random.default_rng(0)), float)
    r = sample_rayleigh_gain(np.random.default_rng(1), 100_000)
    assert stats.kstest(r, "expon").pvalue > 1e-3


def test_sampler_single_component():
    p = ShadowedRicianParams(m_S=1, b=0.3, Omega=0.5)
    x = sample_sr_gain(p, np.random.default_rng(2), 100_000)
    assert stats.kstest(x, sr_cdf_mixture(p)).pvalue > 1e-3

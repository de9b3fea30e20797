import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from setcov import _quad
from setcov.errors import QuadratureError
from setcov.special import bessel_j0, bessel_j1

# frozen from tests/oracles/derive.py
J0_FIRST_ZERO = 2.4048255576957724


def test_gauss_legendre_exact_for_polynomials():
    x, w = _quad.gauss_legendre(16)
    for k in range(32):
        assert np.dot(w, x ** k) == pytest.approx((1 - (-1) ** (k + 1)) / (k + 1), abs=1e-14)


@pytest.mark.parametrize("power", [-0.9, -0.4, 0.5, 1.7])
def test_jacobi_absorbs_power(power):
    val, err = _quad.integrate(lambda x: np.cos(x), 0.0, 2.0, power=power)
    ref, _ = integrate.quad(np.cos, 0.0, 2.0, weight="alg", wvar=(power, 0.0))
    assert val == pytest.approx(ref, rel=1e-12)


def test_tagged_panels_match_separate_integrals():
    freqs = np.array([1.0, 3.0, 7.0])
    a = np.array([0.0, 0.0, 0.0, 1.0])
    b = np.array([1.0, 2.0, 3.0, 2.5])
    tags = np.array([0, 1, 2, 0])
    vals, errs = _quad.integrate_tagged(lambda x, k: np.cos(freqs[k] * x), a, b, tags,
                                        power=0.5)
    for i in range(4):
        ref, _ = integrate.quad(lambda x: np.cos(freqs[tags[i]] * x) * x ** 0.5, a[i], b[i],
                                epsabs=1e-14)
        assert vals[i] == pytest.approx(ref, rel=1e-10)
    assert np.all(errs >= 0)


def test_oscillatory_integral():
    val, _ = _quad.integrate(lambda r: r * special.j0(r), 0.0, 500.0, period=2 * math.pi)
    assert val == pytest.approx(500 * special.j1(500.0), rel=1e-11)


def test_cumulative_integral_matches_pointwise():
    nodes = np.array([0.3, 1.0, 2.5, 7.0])
    vals = _quad.cumulative_integral(np.exp, nodes)
    np.testing.assert_allclose(vals, np.exp(nodes) - 1, rtol=1e-13)


def test_nonconvergence_carries_estimates():
    with pytest.raises(QuadratureError) as exc:
        _quad.integrate_panels(lambda x: np.sin(1 / x) / x ** 2, [1e-8, 1.0], max_level=2)
    assert len(exc.value.estimates) == 2


def test_pairwise_sum():
    x = np.random.default_rng(0).normal(size=10_001)
    assert _quad.pairwise_sum(x) == pytest.approx(math.fsum(x), abs=1e-12)


def test_bessel_basics():
    assert bessel_j0(0.0) == 1.0
    assert bessel_j1(0.0) == 0.0
    assert bessel_j0(-3.0) == bessel_j0(3.0)


def test_j0_first_zero():
    from scipy.optimize import brentq
    z = brentq(lambda x: float(bessel_j0(x)), 2.0, 3.0, xtol=1e-15)
    assert z == pytest.approx(J0_FIRST_ZERO, abs=1e-9)


def test_j0_large_argument_asymptote():
    x = 1000.0
    asym = math.sqrt(2 / (math.pi * x)) * math.cos(x - math.pi / 4)
    assert abs(bessel_j0(x) - asym) <= 2e-4


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1e5))
def test_bessel_against_scipy(x):
    assert abs(bessel_j0(x) - special.j0(x)) <= 1e-10
    assert abs(bessel_j1(x) - special.j1(x)) <= 1e-10


def test_bessel_vectorised():
    x = np.linspace(0, 60, 1001)
    np.testing.assert_allclose(bessel_j0(x), special.j0(x), atol=1e-12)
    np.testing.assert_allclose(bessel_j1(x), special.j1(x), atol=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tricrit.quadrature import QuadratureError, integrate_decaying


@pytest.mark.parametrize("k,expected", [(0, 1.0), (1, 1.0), (3, 6.0)])
def test_gamma_examples(k, expected):
    r = integrate_decaying(lambda s: s ** k * np.exp(-s), rel_tol=1e-12)
    assert r.value == pytest.approx(expected, rel=1e-12)
    assert r.abs_error >= 0 and r.evaluations >= 1
    assert r.truncation_point > 0


@settings(max_examples=40, deadline=None)
@given(k=st.integers(0, 8), rate=st.floats(0.05, 20.0))
def test_gamma_family(k, rate):
    tol = 1e-10
    r = integrate_decaying(lambda s: s ** k * np.exp(-rate * s), rate=rate, rel_tol=tol)
    exact = math.gamma(k + 1) / rate ** (k + 1)
    assert abs(r.value / exact - 1) < 10 * tol


@settings(max_examples=30, deadline=None)
@given(k=st.integers(0, 6), rate=st.floats(0.1, 10.0), shift=st.floats(-700, 700))
def test_log_mode_gamma_family(k, rate, shift):
    def f(s):
        with np.errstate(divide="ignore"):
            la = shift + (k * np.log(s) if k else 0.0) - rate * s
        return la, np.ones_like(s)

    r = integrate_decaying(f, rate=rate, rel_tol=1e-11, log_mode=True)
    log_exact = shift + math.lgamma(k + 1) - (k + 1) * math.log(rate)
    assert abs(r.log_abs_value - log_exact) < 1e-10


def test_truncation_contract():
    tol = 1e-10
    r = integrate_decaying(lambda s: np.exp(-s), rel_tol=tol)
    assert math.exp(-r.truncation_point) <= tol * max(r.value, 1.0)


def test_vector_integrand():
    r = integrate_decaying(lambda s: np.stack([np.exp(-s), s * s * np.exp(-2 * s)]), rel_tol=1e-12)
    assert np.allclose(r.value, [1.0, 0.25], rtol=1e-12)


def test_signed_integrand_cancels():
    # int (1 - s) e^{-s} ds = 0
    r = integrate_decaying(lambda s: (1 - s) * np.exp(-s), rel_tol=1e-10, abs_tol=1e-14)
    assert abs(r.value) < 1e-12


def test_finite_upper_and_points():
    r = integrate_decaying(lambda s: np.abs(s - 1.0), upper=2.0, points=[1.0], rel_tol=1e-12)
    assert r.value == pytest.approx(1.0, rel=1e-13)


def test_nan_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_decaying(lambda s: np.full_like(s, np.nan))

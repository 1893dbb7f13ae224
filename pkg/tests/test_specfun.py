import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tricrit import _accel
from tricrit.specfun import bessel_i_scaled, bessel_ihat_scaled

mpmath.mp.dps = 40

Z_GRID = np.concatenate([[0.0, 1e-12, 1e-6, 0.3], np.linspace(0.5, 40, 80),
                         np.geomspace(40, 1e6, 30)])


def _ive_mp(n, z):
    return float(mpmath.besseli(n, z) * mpmath.exp(-z))


def test_orders_at_zero():
    assert bessel_i_scaled(0, 0.0) == 1.0
    assert bessel_i_scaled(1, 0.0) == 0.0
    for n in range(4):
        assert bessel_ihat_scaled(n, 0.0) == pytest.approx(1.0 / math.factorial(n), rel=1e-15)


def test_power_series_oracle_at_two():
    z = mpmath.mpf(2)
    series = mpmath.fsum((z / 2) ** (2 * k + 1) / (mpmath.factorial(k) * mpmath.factorial(k + 1))
                         for k in range(40))
    assert bessel_i_scaled(1, 2.0) == pytest.approx(float(series * mpmath.exp(-z)), rel=1e-14)


@pytest.mark.parametrize("backend", ["numba", "numpy"])
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_against_mpmath(backend, n):
    with _accel.backend(backend):
        got = bessel_i_scaled(n, Z_GRID)
    ref = np.array([_ive_mp(n, z) for z in Z_GRID])
    nz = ref > 0
    assert np.max(np.abs(got[nz] / ref[nz] - 1)) < 1e-13
    assert np.all(got[~nz] == 0)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_ihat_against_mpmath(n):
    z = np.array([1e-8, 0.7, 5.0, 16.9, 17.1, 30.0, 500.0])
    got = bessel_ihat_scaled(n, z)
    ref = np.array([float(mpmath.besseli(n, x) * mpmath.exp(-x) / (mpmath.mpf(x) / 2) ** n)
                    for x in z])
    assert np.max(np.abs(got / ref - 1)) < 1e-13


def test_branch_crossover_continuity():
    z = np.linspace(15, 20, 501)
    for n in range(4):
        ref = np.array([_ive_mp(n, x) for x in z])
        assert np.max(np.abs(bessel_i_scaled(n, z) / ref - 1)) < 1e-13


def test_backends_agree():
    z = np.geomspace(1e-10, 1e4, 400)
    for n in range(4):
        with _accel.backend("numba"):
            a = bessel_ihat_scaled(n, z)
        with _accel.backend("numpy"):
            b = bessel_ihat_scaled(n, z)
        assert np.max(np.abs(a / b - 1)) < 1e-14


@pytest.mark.parametrize("bad", [(4, 1.0), (-1, 1.0), (0, -1.0), (0, math.inf), (0, math.nan)])
def test_bad_arguments(bad):
    with pytest.raises(ValueError):
        bessel_i_scaled(*bad)


def test_scalar_and_shape():
    assert np.ndim(bessel_i_scaled(0, 1.0)) == 0
    assert bessel_i_scaled(2, np.ones((3, 2))).shape == (3, 2)


@given(st.floats(1e-3, 1e5))
def test_recurrence(z):
    # I_{n-1} - I_{n+1} = (2n/z) I_n
    i = [bessel_i_scaled(n, z) for n in range(4)]
    for n in (1, 2):
        lhs = i[n - 1] - i[n + 1]
        rhs = 2 * n / z * i[n]
        assert abs(lhs - rhs) <= 1e-11 * max(abs(i[n - 1]), 1e-300)


@settings(max_examples=200)
@given(st.floats(0, 1e6))
def test_bounds_and_ordering(z):
    i = [bessel_i_scaled(n, z) for n in range(4)]
    assert all(0 <= x <= 1 for x in i)
    assert i[0] >= i[1] >= i[2] >= i[3]

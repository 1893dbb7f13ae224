import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tricrit.finite_n import (KernelPair, all_kernels, finite_n_observables, length_kernels,
                              reduce_integral, two_point_kernels)
from tricrit.model import ModelParams
from tricrit.phase import interior_minima
from tricrit.potential import Potential
from tricrit.quadrature import integrate_decaying

DILUTE = ModelParams(1.0, -2.7, 1.5)


@pytest.mark.parametrize("nu", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("N", [2.0, 5.0, 100.0])
def test_free_f01_closed_form(nu, N):
    c = nu / (1 + nu)
    got = reduce_integral(ModelParams(0.0, 0.0, nu), two_point_kernels()["F01"], N)
    assert got == pytest.approx((1 - c) ** 2 / (N * c), rel=1e-10)


@pytest.mark.parametrize("N", [3, 5, 10, 100])
def test_free_walk_observables(N):
    r = finite_n_observables(ModelParams(0.0, 0.0, 1.0), N)
    assert r.G01 == pytest.approx(1 / (2 * N), rel=1e-10)
    assert r.G00 == pytest.approx(0.5 + 1 / (2 * N), rel=1e-10)
    assert r.chi == pytest.approx(1.0, abs=1e-8)
    assert r.EL == pytest.approx(1.0, abs=1e-8)


def test_zero_kernel():
    z = KernelPair("zero", F=lambda e: 0 * e.V, d1F=lambda e: 0 * e.V, d2F=lambda e: 0 * e.V)
    assert reduce_integral(DILUTE, z, 10.0) == 0.0


def test_signed_cancellation():
    # V = ct, F = t, d1F = 1: int e^{-Nct} (Nct - 1) dt = 0
    k = KernelPair("t", F=lambda e: e.t, d1F=lambda e: 1 + 0 * e.V, d2F=lambda e: 0 * e.V)
    for N in (2.0, 10.0, 1e3):
        assert abs(reduce_integral(ModelParams(0.0, 0.0, 1.0), k, N)) < 1e-12 / N


@pytest.mark.parametrize("params,N", [(DILUTE, 10.0), (DILUTE, 300.0),
                                      (ModelParams(1.0, -2.7, 1.2), 20.0),
                                      (ModelParams(1.0, -4.4, 4.26), 50.0)])
def test_integration_by_parts_oracle(params, N):
    # int e^{-NV}(NV' F - d1F) = F(0,0) + int e^{-NV} d2F on the diagonal
    pot = Potential(params)
    for name, k in all_kernels().items():
        lhs = reduce_integral(pot, k, N)

        def f(t):
            e = pot(t)
            return np.exp(-N * e.V) * k.d2F(e)

        mins = [m.t for m in interior_minima(pot)]
        rhs = float(k.F(pot(0.0))) + integrate_decaying(f, rate=0.5, rel_tol=1e-12,
                                                        points=mins or None).value
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12), name


def test_g01_printed_form():
    pot = Potential(DILUTE)
    k = two_point_kernels()["F01"]
    N = 37.0
    rng = np.random.default_rng(3)
    e = pot(rng.uniform(0.0, 8.0, 20))
    integrand = N * e.Vp * k.F(e) - k.d1F(e)
    printed = (N * e.Vp * (1 - e.Vp) + 2 * e.Vpp) * (1 - e.Vp) * e.t
    assert np.allclose(integrand, printed, rtol=1e-13, atol=1e-15)


def test_length_kernel_small_t_orders():
    pot = Potential(DILUTE)
    e0 = pot(0.0)
    ks = length_kernels()
    t = 1e-5
    e = pot(t)
    assert ks["K012"].F(e) / t ** 2 == pytest.approx((1 - e0.Vp) ** 2 * e0.Vdotp, rel=1e-3)
    assert ks["K000"].F(e0) == pytest.approx(e0.Vdotp, rel=1e-14)


def test_dilute_limits():
    pot = Potential(DILUTE)
    e0 = pot(0.0)
    r = finite_n_observables(pot, 1e5)
    assert r.N * r.G01 == pytest.approx((1 - e0.Vp) ** 2 / e0.Vp, rel=1e-2)
    assert r.EL == pytest.approx(e0.Vdotp / (e0.Vp * (1 - e0.Vp)), rel=1e-2)
    r4 = finite_n_observables(pot, 1e4)
    assert r4.chi == pytest.approx((1 - e0.Vp) / e0.Vp, rel=1e-2)


def test_second_order_law():
    from tricrit.curves import second_order_nu
    p = ModelParams(1.0, -2.7, second_order_nu(-2.7).nu)
    pot = Potential(p)
    vpp0 = pot(0.0).Vpp
    N = 1e6
    r = finite_n_observables(pot, N)
    assert r.chi / (N ** 0.5 * math.gamma(1.5) / math.sqrt(vpp0 / 2)) == pytest.approx(1, abs=0.05)


def test_dense_log_space():
    r = finite_n_observables(ModelParams(1.0, -4.4, 4.21), 1e5)
    assert r.log_space and np.isfinite(r.log_chi) and r.log_chi > 10
    assert r.rho_N > 0


@settings(max_examples=15, deadline=None)
@given(g=st.floats(-4.5, -2.0), nu=st.floats(1.0, 5.0), N=st.sampled_from([2, 3, 10, 100, 1000]))
def test_chi_identity_and_positivity(g, nu, N):
    r = finite_n_observables(ModelParams(1.0, g, nu), N)
    assert r.converged
    assert r.G00 > 0 and r.G01 > 0 and r.chi > 0 and r.EL > 0
    ident = math.exp(r.log_G00) + (N - 1) * math.exp(r.log_G01) if r.log_chi < 700 else None
    if ident is not None:
        assert r.chi == pytest.approx(ident, rel=10 * (r.rel_err["G00"] + r.rel_err["G01"]) + 1e-13)


def test_invalid_n():
    with pytest.raises(ValueError):
        finite_n_observables(DILUTE, 0.5)

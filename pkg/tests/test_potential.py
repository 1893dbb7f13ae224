import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tricrit import _accel
from tricrit.model import ModelParams
from tricrit.quadrature import QuadratureError
from tricrit.potential import (Potential, moments, potential_eval, v_and_derivs,
                               vdot_and_derivs)

FREE = ModelParams(0.0, 0.0, 1.0)
POINTS = [ModelParams(1.0, -2.7, 1.5), ModelParams(1.0, -2.7, 1.2), ModelParams(1.0, -4.4, 4.21),
          ModelParams(1.0, -3.2103, 2.0772), ModelParams(0.5, 1.0, -0.3)]


def test_free_moments_closed_form():
    M = moments(FREE, kmax=6).M
    ref = [math.factorial(k) / 2 ** (k + 1) for k in range(7)]
    assert np.allclose(M, ref, rtol=1e-11, atol=0)


def test_tricritical_moments(tc):
    M = moments(tc.params).M
    assert abs(M[0] - 1) < 1e-10 and abs(M[1] - 1) < 1e-10
    for k, want in ((2, 1.4478), (3, 2.4062), (4, 4.3315)):
        assert abs(M[k] - want) < 1e-3


@settings(max_examples=30, deadline=None)
@given(u=st.floats(0.0, 3.0), g=st.floats(0.0, 3.0), nu=st.floats(0.0, 3.0))
def test_moment_bound_for_repulsive(u, g, nu):
    assert moments(ModelParams(u, g, nu), kmax=0).M[0] <= 1 + 1e-12


@settings(max_examples=30, deadline=None)
@given(u=st.floats(0.2, 3.0), g=st.floats(-5.0, 3.0), nu=st.floats(-1.0, 6.0))
def test_moments_positive_and_log_convex(u, g, nu):
    M = moments(ModelParams(u, g, nu), kmax=6).M
    assert np.all(M > 0)
    lm = np.log(M)
    for k in range(1, 6):
        assert 2 * lm[k] <= lm[k - 1] + lm[k + 1] + 1e-10


def test_moment_overflow_reported():
    with pytest.raises(QuadratureError):
        moments(ModelParams(0.05, -3.0, 0.0))


@pytest.mark.parametrize("t", [0.0, 0.3, 2.0, 10.0])
def test_free_v_closed_form(t):
    v, vp, vpp, vppp = v_and_derivs(FREE, t)
    e = math.exp(t / 2)
    assert v == pytest.approx(e - 1, rel=1e-11, abs=1e-15)
    assert vp == pytest.approx(e / 2, rel=1e-11)
    assert vpp == pytest.approx(e / 4, rel=1e-11)
    assert vppp == pytest.approx(e / 8, rel=1e-11)


def test_free_potential_linear():
    for t in np.linspace(0, 10, 11):
        e = potential_eval(FREE, t)
        assert e.V == pytest.approx(t / 2, abs=1e-12)
        assert e.Vp == pytest.approx(0.5, abs=1e-12)
        assert abs(e.Vpp) < 1e-11 and abs(e.Vppp) < 1e-11


def test_free_vdot_at_zero():
    vd = vdot_and_derivs(FREE, 0.0)
    assert vd[0] == 0.0
    assert vd[1] == pytest.approx(-0.25, rel=1e-12)


@pytest.mark.parametrize("params", POINTS)
def test_values_at_origin(params):
    e = potential_eval(params, 0.0)
    assert e.V == 0.0 and e.Vdot == 0.0 and e.v == 0.0


def test_tricritical_derivatives_at_origin(tc):
    e = potential_eval(tc.params, 0.0)
    M = moments(tc.params).M
    assert abs(e.vp - 1) < 1e-3
    assert abs(e.vdotp + 1) < 1e-3
    assert abs(e.Vppp - (1 - M[2] / 2)) < 1e-9
    assert abs(e.Vppp - 0.2762) < 1e-3


@pytest.mark.parametrize("params", POINTS)
def test_assembly_identities(params):
    for t in (0.0, 0.5, 3.0, 20.0):
        e = potential_eval(params, t)
        assert 1 + e.v > 0
        w = 1 + e.v
        assert e.V == pytest.approx(t - math.log(w), rel=1e-12, abs=1e-12)
        assert e.Vp == pytest.approx(1 - e.vp / w, rel=1e-10, abs=1e-12)
        assert e.Vpp == pytest.approx(-e.vpp / w + (e.vp / w) ** 2, rel=1e-9, abs=1e-12)
        assert e.Vdot == pytest.approx(-e.vdot / w, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("params", POINTS)
def test_rule_route_matches_adaptive(params):
    pot = Potential(params)
    ts = np.array([0.0, 1e-3, 0.4, 1.7, 6.0, 25.0, 60.0])
    batch = pot(ts)
    for i, t in enumerate(ts):
        ref = potential_eval(params, t, rel_tol=1e-12)
        for name in ("V", "Vp", "Vpp", "Vppp", "Vdot", "Vdotp", "Vdotpp"):
            a, b = getattr(batch, name)[i], getattr(ref, name)
            assert abs(a - b) <= 1e-10 * (1 + abs(b)), (name, t)


def test_rule_moments_match(tc):
    pot = Potential(tc.params)
    assert np.allclose(pot.moments(4), moments(tc.params).M, rtol=1e-12)


def test_rule_backends_agree():
    pot = Potential(POINTS[0])
    ts = np.linspace(0, 60, 97)
    with _accel.backend("numba"):
        a = pot(ts)
    with _accel.backend("numpy"):
        b = pot(ts)
    for name in ("V", "Vp", "Vpp", "Vppp", "Vdot", "Vdotp", "Vdotpp", "Vdotppp"):
        x, y = getattr(a, name), getattr(b, name)
        assert np.max(np.abs(x - y) / (1 + np.abs(y))) < 1e-13, name


def test_rule_extends_beyond_t_max():
    pot = Potential(POINTS[2], t_max=8.0)
    e = pot(30.0)
    ref = potential_eval(POINTS[2], 30.0, rel_tol=1e-12)
    assert e.V == pytest.approx(ref.V, rel=1e-10)


def test_negative_t_rejected():
    with pytest.raises(ValueError):
        Potential(POINTS[0])(-1.0)


@settings(max_examples=25, deadline=None)
@given(idx=st.integers(0, len(POINTS) - 1), t=st.floats(0.05, 30.0))
def test_t_derivatives_finite_difference(idx, t):
    pot = Potential(POINTS[idx])
    h = 1e-4 * max(1.0, t)
    lo, mid, hi = pot(np.array([t - h, t, t + h]))[0], pot(t), pot(np.array([t + h]))[0]
    for f, d in (("V", "Vp"), ("Vp", "Vpp"), ("Vpp", "Vppp"), ("Vdot", "Vdotp"),
                 ("Vdotp", "Vdotpp"), ("Vdotpp", "Vdotppp")):
        fd = (getattr(hi, f) - getattr(lo, f)) / (2 * h)
        ref = getattr(mid, d)
        assert abs(fd - ref) <= 1e-6 * (1 + abs(ref)), (f, t)


@settings(max_examples=25, deadline=None)
@given(idx=st.integers(0, len(POINTS) - 1), t=st.floats(0.0, 30.0))
def test_nu_derivatives_finite_difference(idx, t):
    p = POINTS[idx]
    h = 1e-5
    pot = Potential(p)
    up = pot.with_params(p.replace(nu=p.nu + h))(t)
    dn = pot.with_params(p.replace(nu=p.nu - h))(t)
    mid = pot(t)
    for f, d in (("V", "Vdot"), ("Vp", "Vdotp"), ("Vpp", "Vdotpp"), ("Vppp", "Vdotppp")):
        fd = (getattr(up, f) - getattr(dn, f)) / (2 * h)
        ref = getattr(mid, d)
        assert abs(fd - ref) <= 1e-6 * (1 + abs(ref)), (f, t)

import math

import mpmath
import numpy as np
import pytest

from tricrit import _accel, _rng
from tricrit.finite_n import finite_n_observables
from tricrit.mc_walk import (NonDecayingWeight, estimate_all, estimate_chi, estimate_two_point,
                             sample_weight_curve, simulate)
from tricrit.model import ModelParams

from path_sum import expected_weight

FREE = ModelParams(0.0, 0.0, 1.0)
CUBIC = ModelParams(1.0, 0.0, 1.0)


def test_uniform_backends_agree_bitwise():
    key = _rng.stream_key(12345, 7)
    assert key == _rng.stream_key_np(12345, 7)
    a = np.array([_rng.uniform(key, k) for k in range(1000)])
    b = _rng.uniform_np(key, np.arange(1000))
    assert np.array_equal(a, b)
    assert np.all((a > 0) & (a <= 1))


def test_uniform_moments():
    u = _rng.uniform_np(_rng.stream_key_np(1, 0), np.arange(200000))
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)
    assert abs(np.mean(u * u) - 1 / 3) < 4 * math.sqrt(4 / 45 / u.size)


def test_free_walk_weight_exact():
    T = np.linspace(0.0, 3.0, 31)
    c = sample_weight_curve(FREE, 4, T, 500, seed=3)
    assert np.allclose(c.mean, np.exp(-T), rtol=1e-13)
    # path-independent weight: the spread is rounding in the sum-of-squares variance
    assert np.all(c.std_error <= 1e-7 * c.mean)


def test_path_sum_oracle():
    T = np.linspace(0.0, 1.0, 11)
    c = sample_weight_curve(CUBIC, 3, T, 100_000, seed=99)
    want = expected_weight(1.0, 0.0, 1.0, 3, 1.0)
    assert abs(c.mean[-1] - want) < 3 * c.std_error[-1]


def test_small_time_limit():
    T = np.array([1e-7, 0.5, 1.0])
    c = sample_weight_curve(CUBIC, 3, T, 5000, seed=5)
    assert c.mean_at_origin[0] == pytest.approx(1.0, abs=1e-6)
    assert c.mean[0] - c.mean_at_origin[0] == pytest.approx(0.0, abs=1e-6)


def test_conservation_every_trajectory():
    T = np.linspace(0.0, 20.0, 201)
    run = simulate(ModelParams(1.0, -2.0, 1.5), 5, T, 4000, seed=8)
    assert np.max(run.conservation) <= 1e-12 * T[-1]


def test_jump_count_poisson():
    N, t_end, n = 5, 3.0, 100_000
    run = simulate(FREE, N, np.array([0.0, t_end]), n, seed=2024)
    lam = (1 - 1 / N) * t_end
    kmax = 8
    counts = np.bincount(np.minimum(run.jumps, kmax), minlength=kmax + 1)
    p = np.array([math.exp(-lam) * lam ** k / math.factorial(k) for k in range(kmax)])
    p = np.append(p, 1 - p.sum())
    stat = float(np.sum((counts - n * p) ** 2 / (n * p)))
    pval = float(mpmath.gammainc(kmax / 2, stat / 2, mpmath.inf, regularized=True))
    assert pval > 0.01


def test_seeded_determinism():
    a = estimate_all(CUBIC, 3, 3000, seed=11)
    b = estimate_all(CUBIC, 3, 3000, seed=11)
    c = estimate_all(CUBIC, 3, 3000, seed=12)
    for k in a:
        assert a[k].value == b[k].value and a[k].std_error == b[k].std_error
    assert a["chi"].value != c["chi"].value


def test_streams_are_order_independent():
    T = np.linspace(0.0, 5.0, 51)
    whole = simulate(CUBIC, 4, T, 3000, seed=4)
    head = simulate(CUBIC, 4, T, 1000, seed=4)
    tail = simulate(CUBIC, 4, T, 2000, seed=4, first=1000)
    assert np.array_equal(whole.I, np.vstack([head.I, tail.I]))
    assert np.array_equal(whole.jumps, np.concatenate([head.jumps, tail.jumps]))


def test_backends_agree():
    T = np.linspace(0.0, 6.0, 61)
    with _accel.backend("numba"):
        a = simulate(ModelParams(1.0, -1.0, 1.0), 4, T, 2500, seed=6)
    with _accel.backend("numpy"):
        b = simulate(ModelParams(1.0, -1.0, 1.0), 4, T, 2500, seed=6)
    assert np.array_equal(a.jumps, b.jumps)
    assert np.allclose(a.I, b.I, rtol=1e-12, atol=1e-300)
    assert np.allclose(a.curve().mean, b.curve().mean, rtol=1e-12)


def test_pooled_targets_consistent():
    T = np.linspace(0.0, 15.0, 301)
    run = simulate(ModelParams(1.0, -1.0, 1.0), 4, T, 20_000, seed=31)
    I = run.I[:, 1:]
    for a in range(3):
        for b in range(a + 1, 3):
            d = I[:, a] - I[:, b]
            z = d.mean() / (d.std(ddof=1) / math.sqrt(d.size))
            assert abs(z) < 3.5


def test_free_walk_chi():
    for N in (2, 5):
        est = estimate_chi(FREE, N, 2000, seed=N)
        assert abs(est.value - 1.0) <= 3 * est.std_error
        assert est.std_error >= 0


def test_free_walk_partition_of_unity():
    r = estimate_all(FREE, 4, 2000, seed=1)
    total = r["G00"].value + 3 * r["G01"].value
    assert abs(total - r["chi"].value) <= r["chi"].std_error + 1e-12


def test_cubic_against_finite_n():
    fn = finite_n_observables(CUBIC, 3)
    r = estimate_all(CUBIC, 3, 20_000, seed=7)
    for k in ("chi", "G00", "G01", "EL"):
        assert abs(r[k].value - getattr(fn, k)) <= 3 * r[k].std_error, k


def test_tricritical_shift_against_finite_n(tc):
    p = ModelParams(1.0, tc.g_c, tc.nu_c + 1.0)
    fn = finite_n_observables(p, 4)
    r = estimate_chi(p, 4, 20_000, seed=17)
    assert abs(r.value - fn.chi) <= 3 * r.std_error


def test_two_point_estimates():
    fn = finite_n_observables(CUBIC, 3)
    g00 = estimate_two_point(CUBIC, 3, True, 20_000, seed=21)
    g01 = estimate_two_point(CUBIC, 3, False, 20_000, seed=21)
    assert abs(g00.value - fn.G00) <= 3 * g00.std_error
    assert abs(g01.value - fn.G01) <= 3 * g01.std_error


def test_invalid_arguments():
    with pytest.raises(ValueError):
        estimate_chi(CUBIC, 1, 100, seed=0)
    with pytest.raises(ValueError):
        estimate_chi(CUBIC, 3, 1, seed=0)
    with pytest.raises(ValueError):
        simulate(CUBIC, 3, np.array([1.0, 0.5]), 10, seed=0)
    with pytest.raises(TypeError):
        simulate((1.0, 0.0, 1.0), 3, np.array([0.0, 1.0]), 10, seed=0)


def test_non_decaying_weight_aborts():
    grow = ModelParams(0.0, 0.0, -0.5)
    with pytest.raises(NonDecayingWeight):
        sample_weight_curve(grow, 3, np.linspace(0.0, 10.0, 101), 100, seed=0)
    with pytest.raises(NonDecayingWeight):
        estimate_chi(grow, 3, 100, seed=0)


def test_estimate_to_dict():
    d = estimate_chi(CUBIC, 3, 500, seed=1).to_dict()
    assert {"value", "std_error", "n_samples", "seed"} <= set(d)

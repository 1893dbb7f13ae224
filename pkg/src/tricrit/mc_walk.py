"""Monte Carlo for the weighted walk on the complete graph.

The walk starts at vertex 0, holds for an Exp(1 - 1/N) time and jumps to a
uniform vertex among the other N - 1. A trajectory carries the weight
``prod_x p(L_{T,x}) = exp(-sum_x (u L^3 + g L^2) - nu T)`` evaluated on a
time grid, and the T-integrals of the weight give chi and the two-point
function. This is plain sampling with no importance weights, so it is only
useful where the weight decays in T (small N, dilute parameters). Its role is
an independent check on the analytic pipeline.

Every trajectory reads its own counter-based stream, so results do not depend
on the thread count or on the backend's traversal order.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _accel
from ._rng import stream_key, stream_key_np, uniform, uniform_np
from .model import ModelParams, make_polynomial_interaction

CHUNK = 1024
DT_TARGET = 0.01
T_CAP = 640.0
DECAY_FLOOR = 1e-9


class NonDecayingWeight(RuntimeError):
    """Raised when the sampled weight curve does not decay in T."""


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int
    mc_std_error: float = 0.0
    discretization_error: float = 0.0
    tail_bound: float = 0.0
    t_max: float = 0.0

    def to_dict(self):
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "mc_std_error": self.mc_std_error,
            "discretization_error": self.discretization_error,
            "tail_bound": self.tail_bound,
            "t_max": self.t_max,
        }


@dataclass
class WeightCurve:
    """Per-T mean of the weight, and of the weight restricted to X(T) = 0."""

    T: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    mean_at_origin: np.ndarray
    std_error_at_origin: np.ndarray
    n_samples: int
    seed: int

    def estimate(self, k, at_origin=False):
        m = self.mean_at_origin if at_origin else self.mean
        s = self.std_error_at_origin if at_origin else self.std_error
        return McEstimate(float(m[k]), float(s[k]), self.n_samples, self.seed)


@dataclass
class SimResult:
    """Raw per-trajectory output of one simulation run.

    ``I[i, y]`` is the trapezoid integral of the weight times 1{X(T) = y}
    for trajectory ``i``; ``I_coarse`` is the same on every other grid point.
    ``IT`` and ``IT_coarse`` integrate T times the weight. ``jumps`` counts
    jumps up to the last grid time and ``conservation`` is |sum_y L_y - T|
    at that time.
    """

    T: np.ndarray
    I: np.ndarray
    I_coarse: np.ndarray
    IT: np.ndarray
    IT_coarse: np.ndarray
    jumps: np.ndarray
    conservation: np.ndarray
    curve_sum: np.ndarray
    curve_sq: np.ndarray
    n_samples: int
    seed: int
    extra: dict = field(default_factory=dict)

    def curve(self):
        n = self.n_samples
        s = self.curve_sum.sum(axis=0)
        q = self.curve_sq.sum(axis=0)
        mean = s / n
        var = np.maximum(q / n - mean * mean, 0.0) * n / max(n - 1, 1)
        se = np.sqrt(var / n)
        return WeightCurve(self.T, mean[0], se[0], mean[1], se[1], n, self.seed)


def _phi_step_np(u, g, lo, hi):
    return u * (hi * hi * hi - lo * lo * lo) + g * (hi * hi - lo * lo)


_phi_step = _accel.njit(_phi_step_np)


@_accel.njit(parallel=True)
def _simulate_nb(seed, first, n, N, u, g, nu, T, wq, wq2,
                 I, I2, IT, IT2, jumps, cons, csum, csq):
    lam = 1.0 - 1.0 / N
    ng = T.shape[0]
    T_end = T[ng - 1]
    nchunks = csum.shape[0]
    for c in _accel.prange(nchunks):
        L = np.zeros(N)
        hi_i = min(n, (c + 1) * CHUNK)
        for i in range(c * CHUNK, hi_i):
            key = stream_key(seed, first + i)
            ctr = 0
            for y in range(N):
                L[y] = 0.0
            S = 0.0
            x = 0
            tau = 0.0
            t_next = -math.log(uniform(key, ctr)) / lam
            ctr += 1
            nj = 0
            for k in range(ng):
                Tk = T[k]
                while t_next <= Tk:
                    lx = L[x]
                    ln = lx + (t_next - tau)
                    S += _phi_step(u, g, lx, ln)
                    L[x] = ln
                    tau = t_next
                    r = int(uniform(key, ctr) * (N - 1))
                    ctr += 1
                    if r > N - 2:
                        r = N - 2
                    x = r if r < x else r + 1
                    nj += 1
                    t_next = tau - math.log(uniform(key, ctr)) / lam
                    ctr += 1
                lx = L[x]
                lc = lx + (Tk - tau)
                w = math.exp(-(S + _phi_step(u, g, lx, lc) + nu * Tk))
                I[i, x] += wq[k] * w
                I2[i, x] += wq2[k] * w
                IT[i] += wq[k] * Tk * w
                IT2[i] += wq2[k] * Tk * w
                csum[c, 0, k] += w
                csq[c, 0, k] += w * w
                if x == 0:
                    csum[c, 1, k] += w
                    csq[c, 1, k] += w * w
            jumps[i] = nj
            tot = 0.0
            for y in range(N):
                tot += L[y]
            cons[i] = abs(tot + (T_end - tau) - T_end)


def _simulate_np(seed, first, n, N, u, g, nu, T, wq, wq2,
                 I, I2, IT, IT2, jumps, cons, csum, csq, block=16 * CHUNK):
    lam = 1.0 - 1.0 / N
    T_end = T[-1]
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        m = hi - lo
        rows = np.arange(m)
        key = stream_key_np(seed, first + np.arange(lo, hi, dtype=np.uint64))
        ctr = np.zeros(m, dtype=np.uint64)
        L = np.zeros((m, N))
        S = np.zeros(m)
        x = np.zeros(m, dtype=np.int64)
        tau = np.zeros(m)
        t_next = -np.log(uniform_np(key, ctr)) / lam
        ctr += 1
        nj = np.zeros(m, dtype=np.int64)
        # sub-chunk boundaries, so the curve partials match the numba layout
        starts = np.arange(0, m, CHUNK)
        c0 = lo // CHUNK
        c1 = c0 + starts.size
        Iv, I2v = I[lo:hi], I2[lo:hi]
        for k, Tk in enumerate(T):
            act = np.flatnonzero(t_next <= Tk)
            while act.size:
                xa = x[act]
                lx = L[act, xa]
                ln = lx + (t_next[act] - tau[act])
                S[act] += _phi_step_np(u, g, lx, ln)
                L[act, xa] = ln
                tau[act] = t_next[act]
                r = (uniform_np(key[act], ctr[act]) * (N - 1)).astype(np.int64)
                ctr[act] += 1
                r = np.minimum(r, N - 2)
                x[act] = np.where(r < xa, r, r + 1)
                nj[act] += 1
                t_next[act] = tau[act] - np.log(uniform_np(key[act], ctr[act])) / lam
                ctr[act] += 1
                act = act[t_next[act] <= Tk]
            lx = L[rows, x]
            lc = lx + (Tk - tau)
            w = np.exp(-(S + _phi_step_np(u, g, lx, lc) + nu * Tk))
            Iv[rows, x] += wq[k] * w
            I2v[rows, x] += wq2[k] * w
            IT[lo:hi] += wq[k] * Tk * w
            IT2[lo:hi] += wq2[k] * Tk * w
            w0 = np.where(x == 0, w, 0.0)
            csum[c0:c1, 0, k] += np.add.reduceat(w, starts)
            csq[c0:c1, 0, k] += np.add.reduceat(w * w, starts)
            csum[c0:c1, 1, k] += np.add.reduceat(w0, starts)
            csq[c0:c1, 1, k] += np.add.reduceat(w0 * w0, starts)
        jumps[lo:hi] = nj
        cons[lo:hi] = np.abs(L.sum(axis=1) + (T_end - tau) - T_end)


def _check_args(params, N, n_samples):
    if not isinstance(params, ModelParams):
        raise TypeError("params must be a ModelParams")
    make_polynomial_interaction(params)
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2 (N = 1 has no jumps), got {N}")
    if int(n_samples) != n_samples or n_samples < 2:
        raise ValueError(f"n_samples must be an integer >= 2, got {n_samples}")


def _trapezoid_weights(T):
    d = np.diff(T)
    wq = np.zeros_like(T)
    wq[:-1] += 0.5 * d
    wq[1:] += 0.5 * d
    wq2 = np.zeros_like(T)
    if T.size >= 3 and T.size % 2 == 1:
        Tc = T[::2]
        dc = np.diff(Tc)
        wc = np.zeros_like(Tc)
        wc[:-1] += 0.5 * dc
        wc[1:] += 0.5 * dc
        wq2[::2] = wc
    return wq, wq2


def simulate(params, N, T_grid, n_samples, seed, *, first=0):
    """Simulate ``n_samples`` trajectories to ``max(T_grid)``.

    Returns the raw per-trajectory integrals and the per-chunk weight-curve
    sums. Trajectory ``i`` uses stream ``first + i`` of ``seed``.
    """
    _check_args(params, N, n_samples)
    T = np.ascontiguousarray(T_grid, dtype=np.float64)
    if T.ndim != 1 or T.size < 1 or T[0] < 0 or np.any(np.diff(T) <= 0):
        raise ValueError("T_grid must be a non-empty increasing array of times >= 0")
    N, n = int(N), int(n_samples)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    wq, wq2 = _trapezoid_weights(T)
    nchunks = -(-n // CHUNK)
    I = np.zeros((n, N))
    I2 = np.zeros((n, N))
    IT = np.zeros(n)
    IT2 = np.zeros(n)
    jumps = np.zeros(n, dtype=np.int64)
    cons = np.zeros(n)
    csum = np.zeros((nchunks, 2, T.size))
    csq = np.zeros((nchunks, 2, T.size))
    kern = _simulate_nb if _accel.use_numba() else _simulate_np
    kern(np.uint64(seed), int(first), n, N, float(params.u), float(params.g),
         float(params.nu), T, wq, wq2, I, I2, IT, IT2, jumps, cons, csum, csq)
    return SimResult(T, I, I2, IT, IT2, jumps, cons, csum, csq, n, seed)


def _check_decay(T, mean):
    """Abort when the mean weight does not decrease over the last tenth of T."""
    if T.size < 10:
        return
    j0 = int(np.searchsorted(T, 0.9 * T[-1]))
    j0 = min(j0, T.size - 2)
    if mean[-1] > 0.0 and not mean[-1] < mean[j0]:
        raise NonDecayingWeight(
            f"mean weight does not decay: E p_N(L_T) = {mean[j0]:.6g} at T = {T[j0]:.4g} "
            f"and {mean[-1]:.6g} at T = {T[-1]:.4g}; these parameters are not dilute "
            "enough for plain Monte Carlo")


def _phi_max(params):
    """max over l >= 0 of -(u l^3 + g l^2), or None when unbounded."""
    u, g = params.u, params.g
    if u > 0:
        if g >= 0:
            return 0.0
        l = -2.0 * g / (3.0 * u)
        return -(u * l ** 3 + g * l * l)
    if g >= 0:
        return 0.0
    return None


def _uniform_grid(t_end):
    n = 2 * int(math.ceil(t_end / (2 * DT_TARGET))) + 1
    return np.linspace(0.0, t_end, n)


def choose_horizon(params, N, n_samples, seed, rel_floor=DECAY_FLOOR):
    """Pick the simulation horizon and a tail bound factory.

    With nu > 0 and a bounded single-site factor, every path satisfies
    ``w(T) <= exp(N phi_max - nu T)``, which gives a rigorous horizon and tail.
    Otherwise a pilot run doubles the horizon until the mean weight drops
    below ``rel_floor``; the tail then comes from the observed decay rate.
    """
    pm = _phi_max(params)
    nu = params.nu
    if pm is not None and nu > 0:
        t_end = (N * pm + math.log(1.0 / (rel_floor * nu))) / nu
        if t_end <= T_CAP:
            return max(t_end, 1.0), (N * pm, nu)
    t_end = 10.0
    n_pilot = min(int(n_samples), 2048)
    while True:
        T = np.linspace(0.0, t_end, int(t_end / 0.05) + 1)
        c = simulate(params, N, T, n_pilot, seed, first=2 ** 40).curve()
        _check_decay(T, c.mean)
        if c.mean[-1] <= rel_floor * c.mean[0]:
            return t_end, None
        if t_end >= T_CAP:
            raise NonDecayingWeight(
                f"mean weight still {c.mean[-1]:.3g} at T = {t_end:g}; horizon cap reached")
        t_end *= 2.0


def _tail(bound, T, mean):
    if bound is not None:
        log_c, nu = bound
        return math.exp(log_c - nu * T[-1]) / nu
    if mean[-1] <= 0.0:
        return 0.0
    j0 = int(np.searchsorted(T, 0.9 * T[-1]))
    j0 = min(j0, T.size - 2)
    rate = (math.log(mean[j0]) - math.log(mean[-1])) / (T[-1] - T[j0])
    return mean[-1] / rate


def sample_weight_curve(params, N, T_grid, n_samples, seed):
    """Mean and standard error of E_0 p_N(L_T) on ``T_grid``.

    Raises
    ------
    NonDecayingWeight
        If the mean does not decrease over the last tenth of the grid.
    """
    run = simulate(params, N, T_grid, n_samples, seed)
    c = run.curve()
    _check_decay(c.T, c.mean)
    return c


def _combine(per_traj, coarse, tail, run, t_end):
    n = run.n_samples
    value = float(np.mean(per_traj))
    se = float(np.std(per_traj, ddof=1) / math.sqrt(n))
    disc = abs(value - float(np.mean(coarse))) / 3.0
    return McEstimate(value, se + disc + tail, n, run.seed, se, disc, tail, t_end)


def _run(params, N, n_samples, seed):
    _check_args(params, N, n_samples)
    t_end, bound = choose_horizon(params, N, n_samples, seed)
    run = simulate(params, N, _uniform_grid(t_end), n_samples, seed)
    c = run.curve()
    _check_decay(c.T, c.mean)
    run.extra["tail"] = _tail(bound, c.T, c.mean)
    run.extra["t_end"] = t_end
    return run


def estimate_chi(params, N, n_samples, seed, *, run=None):
    """chi = int_0^inf E_0 p_N(L_T) dT by trapezoid rule plus tail bound.

    ``std_error`` adds the Monte Carlo standard error, the Richardson estimate
    of the trapezoid error and the tail bound.
    """
    run = run or _run(params, N, n_samples, seed)
    chi = run.I.sum(axis=1)
    chi2 = run.I_coarse.sum(axis=1)
    return _combine(chi, chi2, run.extra["tail"], run, run.extra["t_end"])


def estimate_two_point(params, N, x_equals_y, n_samples, seed, *, run=None):
    """G_00 (``x_equals_y``) or G_01 pooled over the N - 1 off-diagonal targets."""
    run = run or _run(params, N, n_samples, seed)
    if x_equals_y:
        a, b = run.I[:, 0], run.I_coarse[:, 0]
    else:
        a, b = run.I[:, 1:].mean(axis=1), run.I_coarse[:, 1:].mean(axis=1)
    return _combine(a, b, run.extra["tail"], run, run.extra["t_end"])


def estimate_expected_length(params, N, n_samples, seed, *, run=None):
    """E L = int T E p_N dT / chi as a ratio estimator (delta-method error)."""
    run = run or _run(params, N, n_samples, seed)
    chi = run.I.sum(axis=1)
    n = run.n_samples
    mc, mt = chi.mean(), run.IT.mean()
    r = mt / mc
    resid = run.IT - r * chi
    se = float(np.std(resid, ddof=1) / math.sqrt(n) / mc)
    disc = abs(r - run.IT_coarse.mean() / run.I_coarse.sum(axis=1).mean()) / 3.0
    return McEstimate(float(r), se + disc, n, run.seed, se, disc, 0.0, run.extra["t_end"])


def estimate_all(params, N, n_samples, seed):
    """chi, G_00, G_01 and E L from one shared set of trajectories."""
    run = _run(params, N, n_samples, seed)
    return {
        "chi": estimate_chi(params, N, n_samples, seed, run=run),
        "G00": estimate_two_point(params, N, True, n_samples, seed, run=run),
        "G01": estimate_two_point(params, N, False, n_samples, seed, run=run),
        "EL": estimate_expected_length(params, N, n_samples, seed, run=run),
    }

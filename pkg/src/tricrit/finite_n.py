r"""Exact finite-N observables from one-dimensional integrals over ``t``.

Every kernel used here is affine in its second slot,
``F(x, y) = A(x) + B(x) y``, so the diagonal data are
``F(t,t) = A + B t``, ``d1F(t,t) = A' + B' t`` and ``d2F = B``.  With
``Q' = 1 - V'``:

=========  =====================  =========================================
kernel     A                      B
=========  =====================  =========================================
``F01``    0                      ``Q'^2``
``Fc``     0                      ``V''``
``K012``   0                      ``Q'^2 Vdot``
``K001``   ``Q' Vdot``            ``(Q'^2 - V'') Vdot``
``K011``   0                      ``Q' (Q' Vdot + Vdot')``
``K000``   ``Q' Vdot + Vdot'``    ``(Q'^2 - V'') Vdot + 2 Q' Vdot' + Vdot''``
=========  =====================  =========================================

and each enters through ``I[F] = int_0^inf exp(-N V) (N V' F(t,t) - d1F(t,t)) dt``:

* ``G01 = I[F01]``, ``G00 = 1 - V'(0) + G01 - I[Fc]``;
* ``chi * EL = (N-1)(N-2) I[K012] + (N-1) I[K001 + 2 K011] + I[K000]``;
* ``chi = G00 + (N-1) G01``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .phase import interior_minima
from .potential import Potential
from .quadrature import integrate_decaying, QuadratureError

KERNEL_NAMES = ("F01", "Fc", "K012", "K001", "K011", "K000")


@dataclass
class KernelPair:
    """Diagonal restrictions ``F(t,t)`` and ``d1F(t,t)`` of one kernel.

    ``F`` and ``d1F`` map a :class:`PotentialEval` (scalar or batch) to the
    diagonal values; ``d2F`` gives the second-slot derivative used by the
    interior Laplace formula.
    """

    name: str
    F: object
    d1F: object
    d2F: object


def _affine(name, A, B, Ap, Bp):
    return KernelPair(
        name,
        F=lambda e: A(e) + B(e) * e.t,
        d1F=lambda e: Ap(e) + Bp(e) * e.t,
        d2F=B,
    )


def _zero(e):
    return 0.0 * e.V


def two_point_kernels():
    """Kernels for ``G01`` and the ``G00`` correction."""
    F01 = _affine(
        "F01", _zero,
        lambda e: (1 - e.Vp) ** 2,
        _zero,
        lambda e: -2 * (1 - e.Vp) * e.Vpp,
    )
    Fc = _affine("Fc", _zero, lambda e: e.Vpp, _zero, lambda e: e.Vppp)
    return {"F01": F01, "Fc": Fc}


def length_kernels():
    """Kernels ``K012, K001, K011, K000`` of the expected-length formula."""

    def q(e):
        return 1 - e.Vp

    K012 = _affine(
        "K012", _zero,
        lambda e: q(e) ** 2 * e.Vdot,
        _zero,
        lambda e: -2 * q(e) * e.Vpp * e.Vdot + q(e) ** 2 * e.Vdotp,
    )
    K001 = _affine(
        "K001",
        lambda e: q(e) * e.Vdot,
        lambda e: (q(e) ** 2 - e.Vpp) * e.Vdot,
        lambda e: -e.Vpp * e.Vdot + q(e) * e.Vdotp,
        lambda e: (-2 * q(e) * e.Vpp - e.Vppp) * e.Vdot + (q(e) ** 2 - e.Vpp) * e.Vdotp,
    )
    K011 = _affine(
        "K011", _zero,
        lambda e: q(e) * (q(e) * e.Vdot + e.Vdotp),
        _zero,
        lambda e: (-e.Vpp * (q(e) * e.Vdot + e.Vdotp)
                   + q(e) * (-e.Vpp * e.Vdot + q(e) * e.Vdotp + e.Vdotpp)),
    )
    K000 = _affine(
        "K000",
        lambda e: q(e) * e.Vdot + e.Vdotp,
        lambda e: (q(e) ** 2 - e.Vpp) * e.Vdot + 2 * q(e) * e.Vdotp + e.Vdotpp,
        lambda e: -e.Vpp * e.Vdot + q(e) * e.Vdotp + e.Vdotpp,
        lambda e: ((-2 * q(e) * e.Vpp - e.Vppp) * e.Vdot + (q(e) ** 2 - e.Vpp) * e.Vdotp
                   - 2 * e.Vpp * e.Vdotp + 2 * q(e) * e.Vdotpp + e.Vdotppp),
    )
    return {"K012": K012, "K001": K001, "K011": K011, "K000": K000}


def all_kernels():
    out = two_point_kernels()
    out.update(length_kernels())
    return out


# ---------------------------------------------------------------------------
# integration window
# ---------------------------------------------------------------------------

_LEVELS = (0.25, 1.0, 4.0, 16.0, 36.0, 64.0)
_CUTOFF = 90.0


@dataclass
class Window:
    """Where ``exp(-N (V - Vmin))`` lives: minimum, upper limit, break points."""

    v_min: float
    t_min: float
    upper: float
    points: np.ndarray
    mass: float


def integration_window(pot, N, minima=None):
    """Locate the region that carries ``exp(-N V)`` for the quadrature."""
    if minima is None:
        minima = interior_minima(pot)
    cands = [(0.0, 0.0)] + [(m.t, m.V) for m in minima]
    t_min, v_min = min(cands, key=lambda c: c[1])
    v_min = min(v_min, 0.0)
    # grow the range on single probes, then one coarse scan, then a dense
    # profile only where the weight matters
    t_hi = 50.0
    while True:
        e = pot(t_hi)
        if N * (e.V - v_min) > _CUTOFF and e.Vp > 0:
            break
        t_hi *= 1.5
        if t_hi > 1e5:
            raise QuadratureError("exp(-N V) does not decay on the scanned range")
    tc_ = np.unique(np.concatenate([np.linspace(0.0, t_hi, 257), np.geomspace(1e-12, t_hi, 128)]))
    xc = N * (pot(tc_).V - v_min)
    alive = np.nonzero(xc <= _CUTOFF)[0]
    t_hi = tc_[min(alive[-1] + 1, tc_.size - 1)]
    ts = np.unique(np.concatenate([
        np.linspace(0.0, t_hi, 1001),
        np.geomspace(1e-12, t_hi, 400),
        *[np.clip(c + np.concatenate([-np.geomspace(1e-9, 1.0, 150), np.geomspace(1e-9, 1.0, 150)]),
                  0.0, t_hi) for c, _ in cands],
    ]))
    ev = pot(ts)
    x = N * (ev.V - v_min)
    # upper limit: last point where the weight is still above exp(-CUTOFF)
    alive = np.nonzero(x <= _CUTOFF)[0]
    upper = ts[min(alive[-1] + 1, ts.size - 1)]
    # break points where N (V - Vmin) crosses the level set
    pts = [c for c, _ in cands if 0 < c < upper]
    for lev in _LEVELS:
        above = x > lev
        idx = np.nonzero(above[1:] != above[:-1])[0]
        for i in idx:
            x0, x1 = x[i], x[i + 1]
            w = (lev - x0) / (x1 - x0) if x1 != x0 else 0.5
            tc = ts[i] + w * (ts[i + 1] - ts[i])
            if 0 < tc < upper:
                pts.append(tc)
    pts = np.unique(np.array(pts, dtype=float))
    with np.errstate(under="ignore"):
        wgt = np.exp(-x)
    mass = float(np.sum(0.5 * (wgt[1:] + wgt[:-1]) * np.diff(ts)))
    return Window(v_min=float(v_min), t_min=float(t_min), upper=float(upper), points=pts, mass=mass)


# ---------------------------------------------------------------------------
# reduced integrals
# ---------------------------------------------------------------------------


@dataclass
class ReducedIntegrals:
    """``I[F] = value * exp(log_scale)`` for each kernel name."""

    value: dict
    err: dict
    log_scale: float
    converged: bool


def reduce_integrals(pot, kernels, N, rel_tol=1e-10, window=None):
    """Evaluate ``I[F]`` for several kernels in one log-mode quadrature.

    Parameters
    ----------
    pot : Potential
    kernels : dict of str -> KernelPair
    N : float
        Number of vertices (any ``N >= 1``).
    rel_tol : float
    window : Window, optional

    Returns
    -------
    ReducedIntegrals
    """
    names = list(kernels)
    if window is None:
        window = integration_window(pot, N)

    def f(t):
        e = pot(t)
        vals = np.stack([N * e.Vp * kernels[k].F(e) - kernels[k].d1F(e) for k in names])
        with np.errstate(divide="ignore"):
            la = -N * e.V + np.log(np.abs(vals))
        return la, np.sign(vals)

    res = integrate_decaying(f, rel_tol=rel_tol, log_mode=True, log_shift=-N * window.v_min,
                             upper=window.upper, points=window.points,
                             abs_tol=1e-4 * rel_tol * window.mass)
    val = np.atleast_1d(res.value)
    err = np.atleast_1d(res.abs_error)
    return ReducedIntegrals(dict(zip(names, val)), dict(zip(names, err)), res.log_scale, res.converged)


def reduce_integral(inter, kernel, N, rel_tol=1e-10):
    """``int_0^inf exp(-N V) (N V' F(t,t) - d1F(t,t)) dt`` for one kernel."""
    pot = inter if isinstance(inter, Potential) else Potential(inter)
    r = reduce_integrals(pot, {kernel.name: kernel}, N, rel_tol)
    return float(r.value[kernel.name] * math.exp(r.log_scale))


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


@dataclass
class FiniteNObservables:
    """Observables at one ``N``.

    Plain values overflow to ``inf`` deep in the dense phase; the ``log_*``
    fields are always finite.  ``err`` holds absolute error estimates for
    the plain values (relative ones in ``rel_err``).
    """

    N: float
    G00: float
    G01: float
    chi: float
    EL: float
    rho_N: float
    log_G00: float
    log_G01: float
    log_chi: float
    err: dict
    rel_err: dict
    converged: bool = True
    log_space: bool = False

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("N", "G00", "G01", "chi", "EL", "rho_N",
                                           "log_G00", "log_G01", "log_chi")}
        d.update({f"err_{k}": v for k, v in self.err.items()})
        return d


def finite_n_observables(inter, N, rel_tol=1e-10, pot=None):
    """``G00, G01, chi, EL`` and ``EL/N`` at finite ``N``.

    Parameters
    ----------
    inter : Interaction, ModelParams or Potential
    N : float
        Number of vertices, ``N >= 1``.
    rel_tol : float
        Quadrature tolerance.

    Returns
    -------
    FiniteNObservables
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if pot is None:
        pot = inter if isinstance(inter, Potential) else Potential(inter)
    window = integration_window(pot, N)
    r = reduce_integrals(pot, all_kernels(), N, rel_tol, window)
    I, E, sig = r.value, r.err, r.log_scale
    vp0 = pot(0.0).Vp
    with np.errstate(under="ignore"):
        c0 = (1.0 - vp0) * math.exp(-sig) if sig < 700 else 0.0
    g01 = I["F01"]
    g00 = c0 + g01 - I["Fc"]
    chi = g00 + (N - 1) * g01
    chiel = (N - 1) * (N - 2) * I["K012"] + (N - 1) * (I["K001"] + 2 * I["K011"]) + I["K000"]
    el = chiel / chi
    rel = {
        "G01": E["F01"] / abs(g01),
        "G00": (E["F01"] + E["Fc"]) / abs(g00),
        "chi": (N * E["F01"] + E["Fc"]) / abs(chi),
    }
    el_abs = (N * N * E["K012"] + N * (E["K001"] + 2 * E["K011"]) + E["K000"]) / abs(chi)
    rel["EL"] = el_abs / abs(el) + rel["chi"]
    rel["rho_N"] = rel["EL"]
    logs = {k: sig + math.log(abs(v)) for k, v in (("G00", g00), ("G01", g01), ("chi", chi))}
    dense = sig > 1.0
    with np.errstate(over="ignore"):
        plain = {k: math.copysign(math.exp(min(v, 709.7)) if v < 709.7 else math.inf, s)
                 for (k, v), s in zip(logs.items(), (g00, g01, chi))}
    err = {k: rel[k] * abs(plain[k]) for k in ("G00", "G01", "chi")}
    err["EL"] = rel["EL"] * abs(el)
    err["rho_N"] = err["EL"] / N
    return FiniteNObservables(
        N=float(N), G00=plain["G00"], G01=plain["G01"], chi=plain["chi"], EL=float(el),
        rho_N=float(el / N), log_G00=logs["G00"], log_G01=logs["G01"], log_chi=logs["chi"],
        err=err, rel_err=rel, converged=r.converged, log_space=dense,
    )

r"""Moments, the Bessel integrals ``v(t)``, and the effective potential ``V(t)``.

With :math:`\hat I_n(z) = I_n(z)/(z/2)^n` and :math:`z = 2\sqrt{st}`, every
``t``- and ``nu``-derivative of

.. math:: v(t) = t \int_0^\infty p(s) e^{-s} \hat I_1(2\sqrt{st})\, ds

is again a positive integral against :math:`p(s)e^{-s}`:

==========  =========================  ==========  ===========================
quantity    weight                     quantity    weight
==========  =========================  ==========  ===========================
``v'``      :math:`\hat I_0`           ``vdot``    :math:`-t s \hat I_1`
``v''``     :math:`s \hat I_1`         ``vdot'``   :math:`-s \hat I_0`
``v'''``    :math:`s^2 \hat I_2`       ``vdot''``  :math:`-s^2 \hat I_1`
                                       ``vdot'''`` :math:`-s^3 \hat I_2`
==========  =========================  ==========  ===========================

(term-by-term differentiation of ``v = sum_k M_k t^(k+1) / (k!(k+1)!)``, where
the ``nu``-derivative maps ``M_k`` to ``-M_(k+1)``).  None of these has a
``0/0`` at ``t = 0``, where they reduce to moments.

Two evaluation routes are provided:

* :func:`potential_eval` and friends integrate adaptively at every ``t``;
* :class:`Potential` integrates with a fixed composite rule in ``s`` built once
  per parameter point and reused for all ``t`` (and for nearby parameters).
  This is the fast batched path used by the phase, curve and finite-N code,
  with a numba kernel and a vectorised numpy kernel.
"""

from dataclasses import dataclass, fields
import math

import numpy as np

from . import _accel
from .model import Interaction, make_polynomial_interaction, ModelParams
from .quadrature import integrate_decaying, panel_rule, QuadratureError
from .specfun import ihat012_nb, ihat012_np

# order of the seven integrals handled by the kernels
#   0: I1        -> v = t * S0
#   1: I0        -> v'
#   2: s I1      -> v''     (and vdot = -t v'')
#   3: s^2 I2    -> v'''
#   4: s I0      -> -vdot'
#   5: s^2 I1    -> -vdot''
#   6: s^3 I2    -> -vdot'''
_N_SUMS = 7
_NEGLIGIBLE = 60.0
_SHIFT_START = 500.0


def as_interaction(obj):
    if isinstance(obj, Interaction):
        return obj
    if isinstance(obj, Potential):
        return obj.inter
    return make_polynomial_interaction(obj if isinstance(obj, ModelParams) else ModelParams(*obj))


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Moments:
    """``M_k = int p(s) e^{-s} s^k ds`` for ``k = 0..kmax`` with error estimates."""

    M: np.ndarray
    err: np.ndarray
    params: object = None

    def __getitem__(self, k):
        return self.M[k]

    def __len__(self):
        return len(self.M)


def moments(inter, kmax=4, rel_tol=1e-11):
    """Moments of ``p(s) e^{-s}`` by adaptive quadrature.

    Parameters
    ----------
    inter : Interaction or ModelParams
    kmax : int
        Highest moment, at most 8.
    rel_tol : float
        Relative tolerance handed to :func:`integrate_decaying`.

    Raises
    ------
    QuadratureError
        If the quadrature does not converge.
    """
    if not 0 <= kmax <= 8:
        raise ValueError("kmax must be in 0..8")
    inter = as_interaction(inter)
    ks = np.arange(kmax + 1)[:, None]

    def f(s):
        lw = inter.log_p(s) - s
        with np.errstate(divide="ignore", invalid="ignore"):
            ls = np.log(s)
            la = lw[None, :] + np.where(ks == 0, 0.0, ks * ls[None, :])
        return la, np.ones_like(la)

    res = integrate_decaying(f, rate=inter.weight_rate, rel_tol=rel_tol, log_mode=True,
                             log_shift=0.0, scale=_length_scale(inter))
    if not res.converged:
        raise QuadratureError(f"moment quadrature did not converge for {inter!r}")
    if res.log_scale + math.log(max(float(np.max(res.value)), 1e-300)) > 709.0:
        raise QuadratureError(f"moments exceed the double range for {inter!r} "
                              f"(log M_max = {res.log_scale:.4g})")
    with np.errstate(divide="ignore"):
        M = np.exp(np.log(res.value) + res.log_scale)
        err = np.exp(np.log(res.abs_error) + res.log_scale)
    return Moments(M=M, err=err, params=inter.params)


def _length_scale(inter):
    p = inter.params
    if p is not None and p.u == 0 and p.g == 0:
        return 1.0 / (1.0 + p.nu)
    return 1.0


# ---------------------------------------------------------------------------
# assembling V from the seven integrals
# ---------------------------------------------------------------------------


@dataclass
class PotentialEval:
    """``V`` and its derivatives at ``t`` (scalars, or arrays for a batch).

    ``Vdot`` denotes the derivative with respect to ``nu``; primes are
    ``t``-derivatives.  ``log1pv`` is ``log(1 + v)``, kept because ``v`` itself
    overflows for very large ``t``.
    """

    t: object
    V: object
    Vp: object
    Vpp: object
    Vppp: object
    Vdot: object
    Vdotp: object
    Vdotpp: object
    Vdotppp: object
    v: object
    vp: object
    vpp: object
    vppp: object
    vdot: object
    vdotp: object
    vdotpp: object
    vdotppp: object
    log1pv: object
    err: object

    def __getitem__(self, idx):
        return PotentialEval(**{f.name: _take(getattr(self, f.name), idx) for f in fields(self)})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _take(x, idx):
    if np.ndim(x) == 0:
        return x
    y = np.asarray(x)[idx]
    return float(y) if np.ndim(y) == 0 else y


def assemble(t, shift, S, err=None):
    """Turn scaled integrals into a :class:`PotentialEval`.

    ``S`` has the seven integrals (listed at the top of this module) along its
    first axis, each multiplied by ``exp(-shift)``.
    """
    t = np.asarray(t, dtype=float)
    shift = np.asarray(shift, dtype=float)
    S = np.asarray(S, dtype=float)
    with np.errstate(over="ignore"):
        scale = np.exp(shift)
        den = np.exp(-shift) + t * S[0]
        log1pv = np.where(shift == 0.0, np.log1p(t * S[0]), shift + np.log(den))
        r1, r2, r3 = S[1] / den, S[2] / den, S[3] / den
        a0 = -t * S[2] / den
        a1, a2, a3 = -S[4] / den, -S[5] / den, -S[6] / den
        v = t * S[0] * scale
        vp, vpp, vppp = S[1] * scale, S[2] * scale, S[3] * scale
        vdot = -t * S[2] * scale
        vdotp, vdotpp, vdotppp = -S[4] * scale, -S[5] * scale, -S[6] * scale
    V = t - log1pv
    Vp = 1.0 - r1
    Vpp = -r2 + r1 * r1
    Vppp = -r3 + 3.0 * r1 * r2 - 2.0 * r1 ** 3
    Vdot = -a0
    Vdotp = -a1 + a0 * r1
    Vdotpp = -a2 + 2.0 * a1 * r1 + a0 * r2 - 2.0 * a0 * r1 * r1
    Vdotppp = (-a3 + 3.0 * a2 * r1 + 3.0 * a1 * r2 - 6.0 * a1 * r1 * r1
               + a0 * r3 - 6.0 * a0 * r1 * r2 + 6.0 * a0 * r1 ** 3)
    if err is None:
        err = np.zeros_like(V)
    out = PotentialEval(t, V, Vp, Vpp, Vppp, Vdot, Vdotp, Vdotpp, Vdotppp,
                        v, vp, vpp, vppp, vdot, vdotp, vdotpp, vdotppp, log1pv, err)
    if t.ndim == 0:
        out = PotentialEval(**{k: float(val) for k, val in out.as_dict().items()})
    return out


# ---------------------------------------------------------------------------
# adaptive route
# ---------------------------------------------------------------------------

_S_POWER = np.array([0, 0, 1, 2, 1, 2, 3])
_BESSEL_ORDER = np.array([1, 0, 1, 2, 0, 1, 2])


def _integrand_logs(inter, ts):
    """Log-mode integrand of the seven integrals at each ``t`` in ``ts``."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))

    def f(s):
        z = 2.0 * np.sqrt(np.multiply.outer(ts, s))
        ih = ihat012_np(z)
        base = inter.log_p(s) - s
        with np.errstate(divide="ignore", invalid="ignore"):
            ls = np.log(s)
            lih = np.log(ih)
            pw = np.where(_S_POWER[:, None] == 0, 0.0, _S_POWER[:, None] * ls[None, :])
        la = base[None, None, :] + z[:, None, :] + lih[_BESSEL_ORDER].transpose(1, 0, 2) + pw[None, :, :]
        la = la.reshape(-1, s.size)
        return la, np.ones_like(la)

    return f


def _adaptive_sums(inter, t, rel_tol):
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and non-negative, got {t!r}")
    res = integrate_decaying(_integrand_logs(inter, [t]), rate=inter.weight_rate, rel_tol=rel_tol,
                             log_mode=True, log_shift=0.0, scale=max(1.0, math.sqrt(t)) * _length_scale(inter))
    if not res.converged:
        raise QuadratureError(f"v-integrals did not converge at t={t} for {inter!r}")
    return res.log_scale, np.asarray(res.value), np.asarray(res.abs_error)


def v_and_derivs(inter, t, max_order=3, rel_tol=1e-10):
    """``(v, v', v'', v''')`` up to ``max_order`` at one ``t >= 0``."""
    inter = as_interaction(inter)
    shift, S, _ = _adaptive_sums(inter, float(t), rel_tol)
    sc = math.exp(shift)
    vals = (t * S[0] * sc, S[1] * sc, S[2] * sc, S[3] * sc)
    return vals[: max_order + 1]


def vdot_and_derivs(inter, t, max_order=2, rel_tol=1e-10):
    """``nu``-derivatives ``(vdot, vdot', vdot'', vdot''')`` up to ``max_order``."""
    inter = as_interaction(inter)
    shift, S, _ = _adaptive_sums(inter, float(t), rel_tol)
    sc = math.exp(shift)
    vals = (-t * S[2] * sc, -S[4] * sc, -S[5] * sc, -S[6] * sc)
    return vals[: max_order + 1]


def potential_eval(inter, t, rel_tol=1e-10):
    """Effective potential and its derivative stack at one ``t``.

    Parameters
    ----------
    inter : Interaction or ModelParams
    t : float
        Non-negative evaluation point.
    rel_tol : float
        Tolerance for the adaptive ``s``-quadrature.

    Returns
    -------
    PotentialEval
        ``err`` is the quadrature error propagated to ``V``.
    """
    inter = as_interaction(inter)
    t = float(t)
    shift, S, E = _adaptive_sums(inter, t, rel_tol)
    out = assemble(t, shift, S)
    den = math.exp(-shift) + t * S[0]
    out.err = float((t * E[0] + max(E[1:4].max(), 0.0)) / den)
    return out


# ---------------------------------------------------------------------------
# fixed-rule route
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SRule:
    """Composite Kronrod rule in ``s`` shared by all ``t`` up to ``t_max``."""

    nodes: np.ndarray
    weights: np.ndarray
    t_max: float
    rel_tol: float
    edges: np.ndarray


def build_rule(inter, t_max=64.0, rel_tol=1e-13):
    """Panels that integrate all seven integrands to ``rel_tol`` on ``[0, t_max]``.

    The adaptive integrator is run once on the stacked integrands for a
    handful of ``t`` values spread over ``[0, t_max]``; the resulting panels
    (15 Kronrod nodes each) form the rule.
    """
    inter = as_interaction(inter)
    ts = t_max * np.array([0.0, 1 / 64, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 3 / 4, 1.0])
    res = integrate_decaying(_integrand_logs(inter, ts), rate=inter.weight_rate, rel_tol=rel_tol,
                             log_mode=True, scale=_length_scale(inter), max_panels=20000)
    nodes, weights = panel_rule(res.panels)
    return SRule(nodes=nodes, weights=weights, t_max=float(t_max), rel_tol=rel_tol, edges=res.panels)


@_accel.njit(parallel=True)
def _rule_sums_nb(ts, s, base, out, shifts):
    n = s.size
    for i in _accel.prange(ts.size):
        t = ts[i]
        emax = -np.inf
        for j in range(n):
            e = base[j] + 2.0 * math.sqrt(s[j] * t)
            if e > emax:
                emax = e
        shift = emax if emax > _SHIFT_START else 0.0
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        a3 = 0.0
        a4 = 0.0
        a5 = 0.0
        a6 = 0.0
        cut = emax - _NEGLIGIBLE
        for j in range(n):
            z = 2.0 * math.sqrt(s[j] * t)
            e = base[j] + z
            # terms below e^-60 of the largest cannot reach 1e-17 of the sum
            if e < cut:
                continue
            c = math.exp(e - shift)
            i0, i1, i2 = ihat012_nb(z)
            sj = s[j]
            a0 += c * i1
            a1 += c * i0
            a2 += c * sj * i1
            a3 += c * sj * sj * i2
            a4 += c * sj * i0
            a5 += c * sj * sj * i1
            a6 += c * sj * sj * sj * i2
        out[0, i] = a0
        out[1, i] = a1
        out[2, i] = a2
        out[3, i] = a3
        out[4, i] = a4
        out[5, i] = a5
        out[6, i] = a6
        shifts[i] = shift


def _rule_sums_np(ts, s, base, chunk=128):
    out = np.empty((_N_SUMS, ts.size))
    shifts = np.empty(ts.size)
    for lo in range(0, ts.size, chunk):
        tt = ts[lo:lo + chunk]
        z = 2.0 * np.sqrt(np.multiply.outer(tt, s))
        e = base[None, :] + z
        emax = e.max(axis=1)
        sh = np.where(emax > _SHIFT_START, emax, 0.0)
        with np.errstate(under="ignore"):
            c = np.exp(e - sh[:, None])
        i0, i1, i2 = ihat012_np(z)
        out[0, lo:lo + chunk] = (c * i1).sum(axis=1)
        out[1, lo:lo + chunk] = (c * i0).sum(axis=1)
        out[2, lo:lo + chunk] = (c * i1) @ s
        out[3, lo:lo + chunk] = (c * i2) @ (s * s)
        out[4, lo:lo + chunk] = (c * i0) @ s
        out[5, lo:lo + chunk] = (c * i1) @ (s * s)
        out[6, lo:lo + chunk] = (c * i2) @ (s * s * s)
        shifts[lo:lo + chunk] = sh
    return shifts, out


def rule_sums(ts, nodes, base):
    """Seven scaled integrals at every ``t``; dispatches to numba or numpy."""
    ts = np.ascontiguousarray(np.atleast_1d(ts), dtype=float)
    if _accel.use_numba():
        out = np.empty((_N_SUMS, ts.size))
        shifts = np.empty(ts.size)
        _rule_sums_nb(ts, nodes, base, out, shifts)
        return shifts, out
    return _rule_sums_np(ts, nodes, base)


class Potential:
    """Batched evaluator of ``V`` for one interaction on a fixed ``s``-rule.

    Parameters
    ----------
    inter : Interaction or ModelParams
    rule : SRule, optional
        Reuse a rule built for nearby parameters; otherwise one is built.
    t_max : float
        Largest ``t`` the rule is built for; evaluating beyond it rebuilds
        the rule for a larger range.
    """

    def __init__(self, inter, rule=None, t_max=64.0, rel_tol=1e-13):
        self.inter = as_interaction(inter)
        self.rel_tol = rel_tol
        self.rule = rule if rule is not None else build_rule(self.inter, t_max, rel_tol)
        # per-instance results of derived scans (e.g. interior minima); a rule
        # rebuild for a longer t-range leaves them valid
        self.memo = {}
        self._set_base()

    def _set_base(self):
        s = self.rule.nodes
        self.base = np.ascontiguousarray(self.inter.log_p(s) - s + np.log(self.rule.weights))

    @property
    def params(self):
        return self.inter.params

    def with_params(self, params):
        """Same rule, different parameters (for small parameter moves)."""
        return Potential(params, rule=self.rule, rel_tol=self.rel_tol)

    def _ensure_range(self, ts):
        top = float(np.max(ts)) if np.size(ts) else 0.0
        if top > self.rule.t_max:
            self.rule = build_rule(self.inter, max(2.0 * self.rule.t_max, 1.25 * top), self.rel_tol)
            self._set_base()

    def __call__(self, t):
        """:class:`PotentialEval` at scalar or array ``t``."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0):
            raise ValueError("t must be finite and non-negative")
        flat = t_arr.ravel()
        self._ensure_range(flat)
        shift, S = rule_sums(flat, self.rule.nodes, self.base)
        out = assemble(flat, shift, S)
        out.err = self.rule.rel_tol * (1.0 + np.abs(out.V))
        if t_arr.ndim == 0:
            return out[0]
        return out

    def V(self, t):
        return self(t).V

    def moments(self, kmax=4):
        """Moments from the same rule (consistent with ``V`` to rounding)."""
        s = self.rule.nodes
        c = np.exp(self.base)
        return np.array([np.sum(c * s ** k) for k in range(kmax + 1)])

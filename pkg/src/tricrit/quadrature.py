"""Adaptive Gauss-Kronrod integration on ``[s0, inf)`` for decaying integrands.

The integrand is called on whole arrays of abscissae at once (all panels of one
refinement sweep are evaluated in a single call), may be vector valued, and may
be supplied either directly or as ``(log|f|, sign)`` for integrands such as
``exp(-N V(t))`` whose magnitude over- or underflows.

Truncation: the integrand is probed outward from ``s0`` until
``|f(s)| / rate`` drops below ``rel_tol`` times the running magnitude estimate;
the integration range then ends at twice that distance, and ``|f(s*)| / rate``
is added to the reported error as the tail bound.
"""

from dataclasses import dataclass, field

import numpy as np

# 7-point Gauss / 15-point Kronrod pair on [-1, 1] (nodes listed from the
# outside in; the last node is the centre).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point layout on [-1, 1]
KRONROD_X = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_GAUSS_W = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5 from the outside)
for _j, _w in zip((1, 3, 5), _WG[:3]):
    _GAUSS_W[_j] = _w
    _GAUSS_W[14 - _j] = _w
_GAUSS_W[7] = _WG[3]

_EPS = np.finfo(float).eps
_TINY = 1e-300


class QuadratureError(ArithmeticError):
    """Raised when the integrand returns NaN or cannot be bounded."""


@dataclass(frozen=True)
class QuadResult:
    """Outcome of :func:`integrate_decaying`.

    In log mode the integral equals ``value * exp(log_scale)``; otherwise
    ``log_scale`` is 0.  ``value`` and ``abs_error`` are arrays for vector
    valued integrands.
    """

    value: object
    abs_error: object
    evaluations: int
    truncation_point: float
    converged: bool = True
    log_scale: float = 0.0
    panels: np.ndarray = field(default=None, repr=False)

    @property
    def log_abs_value(self):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.value)) + self.log_scale


def panel_rule(edges):
    """Composite 15-point Kronrod nodes and weights on consecutive panels.

    Parameters
    ----------
    edges : array_like
        Increasing panel boundaries.

    Returns
    -------
    nodes, weights : ndarray
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * KRONROD_X[None, :]).ravel()
    weights = (half[:, None] * KRONROD_W[None, :]).ravel()
    return nodes, weights


class _Evaluator:
    """Wraps the user integrand: shape normalisation, NaN checks, log shift."""

    def __init__(self, f, log_mode, log_shift):
        self.f = f
        self.log_mode = log_mode
        self.shift = log_shift
        self.count = 0
        self.scalar = None

    def __call__(self, s):
        self.count += s.size
        if self.log_mode:
            la, sg = self.f(s)
            la = np.asarray(la, dtype=float)
            sg = np.asarray(sg, dtype=float)
            la, sg = np.broadcast_arrays(la, sg)
            self._note_shape(la)
            la = la.reshape(-1, s.size)
            sg = sg.reshape(-1, s.size)
            bad = np.isnan(la) | np.isnan(sg)
            self._check(bad, s)
            top = np.max(la)
            if self.shift is None:
                if not np.isfinite(top):
                    # all zero so far (e.g. s^k at s = 0): fix the shift later
                    return np.zeros_like(la)
                self.shift = float(top)
            elif top - self.shift > 600.0:
                raise _Rescale(float(top), float(s.ravel()[np.argmax(np.max(la, axis=0))]))
            with np.errstate(under="ignore"):
                return sg * np.exp(la - self.shift)
        y = np.asarray(self.f(s), dtype=float)
        self._note_shape(y)
        y = np.broadcast_to(y, y.shape[:-1] + (s.size,)).reshape(-1, s.size)
        self._check(np.isnan(y), s)
        return y

    def _note_shape(self, y):
        if self.scalar is None:
            self.scalar = y.ndim <= 1

    @staticmethod
    def _check(bad, s):
        if bad.any():
            idx = np.nonzero(bad)[-1][0]
            raise QuadratureError(f"integrand returned NaN at s = {s[idx]!r}")


class _Rescale(Exception):
    def __init__(self, top, where):
        self.top = top
        self.where = where


def _gk_panels(ev, a, b):
    """Kronrod values, error estimates and |f| integrals for panels [a, b]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = (mid[:, None] + half[:, None] * KRONROD_X[None, :]).ravel()
    y = ev(x).reshape(-1, a.size, 15)
    rk = np.einsum("kpj,j->kp", y, KRONROD_W) * half
    rg = np.einsum("kpj,j->kp", y, _GAUSS_W) * half
    mean = rk / (2.0 * half)
    resabs = np.einsum("kpj,j->kp", np.abs(y), KRONROD_W) * np.abs(half)
    resasc = np.einsum("kpj,j->kp", np.abs(y - mean[..., None]), KRONROD_W) * np.abs(half)
    err = np.abs(rk - rg)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5), err)
    err = np.maximum(scaled, 50.0 * _EPS * resabs)
    return rk, err, resabs


def _find_truncation(ev, rate, rel_tol, s0, scale, abs_floor, s_min=-np.inf):
    """Walk outward from s0 until the integrand is negligible beyond ``s_min``."""
    step = 0.25 * scale
    s_prev = s0
    y_prev = np.abs(ev(np.array([s0])))[:, 0]
    est = np.zeros_like(y_prev)
    n = 0
    quiet = 0
    while True:
        n += 1
        s = s_prev + step
        y = np.abs(ev(np.array([s])))[:, 0]
        est += 0.5 * (y + y_prev) * step
        target = rel_tol * np.maximum(est, abs_floor)
        # several quiet probes in a row, so a zero of a signed integrand is not taken for decay
        quiet = quiet + 1 if np.all(y / rate <= target) and np.all(y <= y_prev + 1e-300) else 0
        if quiet >= 3 and n >= 4 and s > s_min:
            return s
        if not np.all(np.isfinite(y)):
            raise QuadratureError(f"integrand is not finite at s = {s!r}")
        if s - s0 > 1e8 * scale:
            raise QuadratureError("integrand does not decay; check the decay rate hint")
        s_prev, y_prev = s, y
        if n % 8 == 0:
            step *= 2.0


def integrate_decaying(f, rate=1.0, rel_tol=1e-10, *, log_mode=False, log_shift=None,
                       s0=0.0, scale=1.0, points=None, abs_tol=0.0, upper=None,
                       max_panels=4000):
    """Integrate ``f`` over ``[s0, inf)`` assuming eventual exponential decay.

    Parameters
    ----------
    f : callable
        Vectorised integrand ``f(s)`` returning an array of shape ``s.shape``
        or ``(k,) + s.shape`` for ``k`` simultaneous integrands.  In log mode
        it returns ``(log|f|, sign)``.
    rate : float
        Decay rate ``eps`` with ``|f(s)| <= C exp(-eps s)`` for large ``s``.
    rel_tol : float
        Relative tolerance, in ``[1e-13, 1e-3]``.
    log_mode : bool
        Integrand supplied in log-magnitude form; the result carries a
        ``log_scale``.
    log_shift : float, optional
        Initial log shift in log mode (defaults to the largest sampled value).
    s0, scale : float
        Lower limit and the length scale for the truncation probe.
    points : array_like, optional
        Interior break points (e.g. known peaks or kinks).
    abs_tol : float
        Absolute tolerance floor (in shifted units for log mode).
    upper : float, optional
        Explicit finite upper limit; skips the truncation search.
    max_panels : int
        Panel budget; when exhausted the best estimate is returned with
        ``converged=False``.

    Returns
    -------
    QuadResult

    Raises
    ------
    QuadratureError
        If the integrand returns NaN (the message carries the abscissa).
    """
    if not 1e-13 <= rel_tol <= 1e-3:
        raise ValueError(f"rel_tol must lie in [1e-13, 1e-3], got {rel_tol}")
    if rate <= 0:
        raise ValueError("decay rate must be positive")
    shift = log_shift
    # a rescale means the bulk sits where the integrand peaked; the restarted
    # truncation search must not stop short of it
    s_min = -np.inf
    for _ in range(8):
        ev = _Evaluator(f, log_mode, shift)
        try:
            return _integrate(ev, rate, rel_tol, s0, scale, points, abs_tol, upper, max_panels,
                              s_min)
        except _Rescale as exc:
            shift = exc.top
            s_min = max(s_min, exc.where)
    raise QuadratureError("log-mode rescaling did not settle")


def _integrate(ev, rate, rel_tol, s0, scale, points, abs_tol, upper, max_panels, s_min=-np.inf):
    floor = max(abs_tol, _TINY)
    if upper is None:
        s_stop = _find_truncation(ev, rate, rel_tol, s0, scale, floor, s_min)
        upper = s0 + 2.0 * (s_stop - s0)
    upper = float(upper)
    if not upper > s0:
        raise ValueError("upper limit must exceed the lower limit")
    tail = np.abs(ev(np.array([upper])))[:, 0] / rate

    edges = [s0]
    if points is not None:
        edges += sorted(float(p) for p in points if s0 < p < upper)
    edges.append(upper)
    # a few geometric panels so the first sweep resolves the bulk near s0
    edges = np.unique(np.concatenate([edges, s0 + (upper - s0) * np.array([1 / 64, 1 / 16, 1 / 4])]))
    a, b = edges[:-1], edges[1:]
    vals, errs, _ = _gk_panels(ev, a, b)
    converged = False
    while True:
        total = vals.sum(axis=1)
        err_tot = errs.sum(axis=1) + tail
        target = np.maximum(rel_tol * np.abs(total), floor)
        if np.all(err_tot <= target):
            converged = True
            break
        if a.size >= max_panels:
            break
        ratio = np.max(errs / target[:, None], axis=0)
        width_ok = (b - a) > 64 * _EPS * np.maximum(np.abs(a), np.abs(b))
        share = 0.5 / a.size
        split = (ratio > share) & width_ok
        if not split.any():
            cand = np.where(width_ok, ratio, -1.0)
            j = int(np.argmax(cand))
            if cand[j] <= 0:
                break
            split[j] = True
        room = max_panels - a.size
        idx = np.nonzero(split)[0]
        if idx.size > room:
            idx = idx[np.argsort(-ratio[idx])[:room]]
        am, bm = a[idx], b[idx]
        mid = 0.5 * (am + bm)
        na = np.concatenate([am, mid])
        nb = np.concatenate([mid, bm])
        nv, ne, _ = _gk_panels(ev, na, nb)
        keep = np.ones(a.size, dtype=bool)
        keep[idx] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        vals = np.concatenate([vals[:, keep], nv], axis=1)
        errs = np.concatenate([errs[:, keep], ne], axis=1)
        order = np.argsort(a)
        a, b, vals, errs = a[order], b[order], vals[:, order], errs[:, order]

    total = vals.sum(axis=1)
    err_tot = errs.sum(axis=1) + tail
    if ev.scalar:
        total, err_tot = float(total[0]), float(err_tot[0])
    return QuadResult(
        value=total,
        abs_error=err_tot,
        evaluations=ev.count,
        truncation_point=upper,
        converged=converged,
        log_scale=float(ev.shift) if ev.log_mode and ev.shift is not None else 0.0,
        panels=np.append(a, b[-1]),
    )

"""Phase-boundary curves and the tricritical point.

The second-order curve is ``M_0 = 1``, the dotted curve is ``M_1 = M_0^2``
(``V''(0) = 0``), and the first-order curve is the set of ``(g, nu)`` where
``V`` has a second global minimum ``V(t0) = 0`` with ``t0 > 0``.  Parameter
derivatives of moments are exact: ``dM_k/dg = -M_(k+2)`` and
``dM_k/dnu = -M_(k+1)``.
"""

from dataclasses import dataclass, field
import enum
import functools
import math

import numpy as np

from .model import ModelParams, make_polynomial_interaction
from .phase import classify, interior_minima, Phase, AmbiguousClassification
from .potential import moments, Potential


class CurveKind(str, enum.Enum):
    SECOND_ORDER = "SecondOrder"
    FIRST_ORDER = "FirstOrder"
    VPP0_ZERO = "Vpp0Zero"
    M0_ONE_UNCHECKED = "M0OneUnchecked"
    TRICRITICAL = "Tricritical"


class ConvergenceError(ArithmeticError):
    """A Newton iteration failed to reach its residual tolerance."""


class VerificationError(RuntimeError):
    """A converged point does not satisfy the conditions of its curve kind."""


@dataclass
class BoundaryPoint:
    g: float
    nu: float
    kind: CurveKind
    t0: float = None
    residuals: tuple = ()
    u: float = 1.0

    def to_dict(self):
        return {"g": self.g, "nu": self.nu, "kind": self.kind.value, "t0": self.t0,
                "residuals": list(self.residuals)}


@dataclass
class TricriticalPoint:
    g_c: float
    nu_c: float
    M: np.ndarray
    alpha: float
    b: float
    a_coef: float
    residual: float
    iterations: int
    u: float = 1.0
    moment_err: np.ndarray = field(default=None, repr=False)

    @property
    def params(self):
        return ModelParams(self.u, self.g_c, self.nu_c)

    def to_dict(self):
        return {
            "g_c": self.g_c, "nu_c": self.nu_c,
            **{f"M{k}": float(m) for k, m in enumerate(self.M)},
            "alpha": self.alpha, "b": self.b, "a_coef": self.a_coef,
            "residual": self.residual, "iterations": self.iterations, "u": self.u,
        }


_MOMENT_TOL = 1e-13
_EPS = np.finfo(float).eps


def _M(u, g, nu, kmax=4):
    return moments(make_polynomial_interaction(ModelParams(u, g, nu)), kmax, rel_tol=_MOMENT_TOL)


def tricritical_solve(initial_guess=(-3.2, 2.1), u=1.0, tol=1e-11, max_iter=50):
    """Solve ``M_0 = M_1 = 1`` by Newton's method with the exact Jacobian.

    Parameters
    ----------
    initial_guess : (float, float)
        Starting ``(g, nu)``.
    u : float
        Cubic coefficient.
    tol : float
        Target for ``max(|M_0 - 1|, |M_1 - 1|)``.

    Returns
    -------
    TricriticalPoint

    Raises
    ------
    ConvergenceError
        Singular Jacobian (``|det| < 1e-14``) or no convergence in
        ``max_iter`` steps.
    """
    g, nu = map(float, initial_guess)
    for it in range(1, max_iter + 1):
        m = _M(u, g, nu, kmax=4)
        M = m.M
        F = np.array([M[0] - 1.0, M[1] - 1.0])
        res = float(np.max(np.abs(F)))
        if res < tol:
            alpha = -0.5 * M[2] + 3.0 * M[1] * M[0] - 2.0 * M[0] ** 3
            b = M[3] - M[2] ** 2
            a = 0.5 * (M[4] - 2.0 * M[2] * M[3] + M[2] ** 3)
            return TricriticalPoint(g, nu, M, float(alpha), float(b), float(a), res, it - 1, u, m.err)
        J = np.array([[-M[2], -M[1]], [-M[3], -M[2]]])
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if abs(det) < 1e-14:
            raise ConvergenceError(f"singular Jacobian at (g, nu) = ({g}, {nu})")
        dg, dnu = np.linalg.solve(J, -F)
        step = max(abs(dg), abs(dnu))
        if step > 1.0:
            dg, dnu = dg / step, dnu / step
        g, nu = g + dg, nu + dnu
    raise ConvergenceError(f"tricritical Newton did not converge from {initial_guess}")


@functools.lru_cache(maxsize=8)
def tricritical_point(u=1.0):
    """Cached :func:`tricritical_solve` for the default starting guess."""
    return tricritical_solve(u=u)


def _newton_1d(fun, x0, tol, max_iter=60, max_step=1.0, what="curve"):
    x = float(x0)
    for _ in range(max_iter):
        f, df = fun(x)
        if abs(f) < tol:
            return x, f
        if df == 0 or not np.isfinite(df):
            raise ConvergenceError(f"{what}: zero derivative at {x}")
        dx = -f / df
        if abs(dx) > max_step:
            dx = math.copysign(max_step, dx)
        x += dx
    raise ConvergenceError(f"{what}: Newton did not converge (last residual {f:.3g})")


def second_order_nu(g, u=1.0, nu0=None, tol=1e-11, verify=True):
    """``nu`` on the curve ``M_0(g, nu) = 1`` at fixed ``g``.

    The point is labelled ``SecondOrder`` when ``M_1 < M_0^2`` (the
    phase-boundary arc, ``g >= g_c``) and ``M0OneUnchecked`` otherwise.

    Parameters
    ----------
    g : float
    u : float
    nu0 : float, optional
        Newton seed (defaults to 1).
    tol : float
        Residual tolerance for ``|M_0 - 1|``.
    verify : bool
        Re-classify second-order points and raise on disagreement.
    """

    def fun(nu):
        M = _M(u, g, nu, kmax=1).M
        return M[0] - 1.0, -M[1]

    nu, res = _newton_1d(fun, 1.0 if nu0 is None else nu0, tol, what="second-order curve")
    M = _M(u, g, nu, kmax=2).M
    if M[1] < M[0] ** 2:
        kind = CurveKind.SECOND_ORDER
        if verify:
            try:
                rep = classify(make_polynomial_interaction(ModelParams(u, g, nu)))
            except AmbiguousClassification as exc:
                raise VerificationError(f"second-order point at g={g} is ambiguous: {exc}") from exc
            if rep.label is Phase.TRICRITICAL:
                # the M_0 = 1 curve ends at the tricritical point
                kind = CurveKind.TRICRITICAL
            elif rep.label is not Phase.SECOND_ORDER:
                raise VerificationError(
                    f"point ({g}, {nu}) classifies as {rep.label.value}; margins {rep.margins}")
    else:
        kind = CurveKind.M0_ONE_UNCHECKED
    return BoundaryPoint(g=float(g), nu=float(nu), kind=kind, residuals=(float(res),), u=u)


def vpp0_curve_nu(g, u=1.0, nu0=None, tol=1e-11):
    """``nu`` with ``M_1 = M_0^2`` (so ``V''(0) = 0``) at fixed ``g``."""
    if nu0 is None:
        nu0 = second_order_nu(g, u=u, verify=False).nu

    def fun(nu):
        M = _M(u, g, nu, kmax=2).M
        return M[1] - M[0] ** 2, -M[2] + 2.0 * M[0] * M[1]

    nu, res = _newton_1d(fun, nu0, tol, max_step=0.5, what="V''(0)=0 curve")
    return BoundaryPoint(g=float(g), nu=float(nu), kind=CurveKind.VPP0_ZERO, residuals=(float(res),), u=u)


# ---------------------------------------------------------------------------
# first-order curve
# ---------------------------------------------------------------------------


class _RuledFamily:
    """Potentials along a line of ``nu`` values sharing one ``s``-rule."""

    def __init__(self, u, g, nu):
        self.u, self.g = u, g
        self._rebuild(nu)

    def _rebuild(self, nu):
        self.nu_rule = nu
        self.base = Potential(ModelParams(self.u, self.g, nu))

    def __call__(self, nu):
        if abs(nu - self.nu_rule) > 0.02:
            self._rebuild(nu)
        return self.base.with_params(ModelParams(self.u, self.g, nu))


def _first_order_newton(fam, nu, t0, tol, max_iter=60):
    """Damped Newton on ``(V(t0)/t0, V'(t0)) = 0`` in the unknowns ``(nu, t0)``.

    Dividing the first equation by ``t0`` keeps the Jacobian well scaled as
    ``t0 -> 0`` near the tricritical point.  Near ``g_c`` the residuals are
    tiny in absolute terms (``V ~ t0^4``), so convergence is judged on the
    relative Newton step: it must drop below 1e-12, or stop shrinking once it
    is below ``max(1e-6, floor)`` where ``floor`` is the step that rounding in
    ``V'`` alone produces, ``1e3 eps / (V''(t0) t0)``.
    """
    prev = np.inf
    for _ in range(max_iter):
        e = fam(nu)(t0)
        F = np.array([e.V / t0, e.Vp])
        J = np.array([[e.Vdot / t0, e.Vp / t0 - e.V / t0 ** 2],
                      [e.Vdotp, e.Vpp]])
        det = np.linalg.det(J)
        if not np.isfinite(det) or abs(det) < 1e-300:
            raise ConvergenceError(f"degenerate first-order Jacobian at nu={nu}, t0={t0}")
        dnu, dt = np.linalg.solve(J, -F)
        rel = max(abs(dt) / t0, abs(dnu) / max(1.0, abs(nu)))
        small = abs(e.V) < tol and abs(e.Vp) < tol
        floor = max(1e-6, 1e3 * _EPS / abs(e.Vpp * t0)) if e.Vpp != 0 else 1e-6
        if small and (rel < 1e-12 or (rel < floor and rel > 0.5 * prev)):
            return nu, t0, e
        prev = rel
        lam = 1.0
        # keep t0 positive and the step moderate
        while t0 + lam * dt <= 0.1 * t0 or abs(lam * dnu) > 0.5:
            lam *= 0.5
        nu, t0 = nu + lam * dnu, t0 + lam * dt
    raise ConvergenceError(f"first-order Newton did not converge (|V|={abs(e.V):.3g}, "
                           f"|V'|={abs(e.Vp):.3g}, relative step {prev:.3g})")


def _bracket_first_order(u, g):
    """Coarse ``(nu, t0)`` by bisection on the sign of the lowest interior minimum."""
    lo = second_order_nu(g, u=u, verify=False).nu

    def lowest(nu):
        mins = interior_minima(Potential(ModelParams(u, g, nu)))
        return min(mins, key=lambda m: m.V) if mins else None

    step = 0.05
    hi = lo + step
    m_hi = lowest(hi)
    while m_hi is not None and m_hi.V < 0:
        lo = hi
        step *= 2.0
        hi = lo + step
        m_hi = lowest(hi)
    best = None
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        m = lowest(mid)
        if m is not None and m.V < 0:
            lo, best = mid, m
        else:
            hi = mid
        if hi - lo < 1e-4:
            break
    if best is None:
        best = lowest(lo)
    if best is None:
        raise ConvergenceError(f"no interior minimum found while bracketing the first-order curve at g={g}")
    return 0.5 * (lo + hi), best.t


def _tricritical_seed(u, g):
    from .asymptotics import tricritical_constants

    tc = tricritical_point(u)
    k = tricritical_constants(tc)
    s = tc.g_c - g
    return tc.nu_c + tc.M[2] * s + 0.5 * k.nu_gg_first * s * s, k.B3 * s


def first_order_point(g, continuation_hint=None, u=1.0, tol=1e-12, verify=True):
    """Point ``(g, nu)`` on the first-order curve and its second minimum ``t0``.

    Parameters
    ----------
    g : float
        Must lie below ``g_c - 1e-6``.
    continuation_hint : (float, float), optional
        Seed ``(nu, t0)``.  Without one, points near ``g_c`` are seeded from
        the tricritical expansion and points further away by bracketing.
    tol : float
        Residual tolerance on ``|V(t0)|`` and ``|V'(t0)|``.

    Raises
    ------
    ConvergenceError, VerificationError
    """
    tc = tricritical_point(u)
    if g > tc.g_c - 1e-6:
        raise ValueError(f"first_order_point needs g < g_c - 1e-6 = {tc.g_c - 1e-6:.8f}, got {g}")
    if continuation_hint is not None:
        nu, t0 = map(float, continuation_hint)
    elif tc.g_c - g < 0.15:
        nu, t0 = _tricritical_seed(u, g)
    else:
        nu, t0 = _bracket_first_order(u, g)
    fam = _RuledFamily(u, g, nu)
    try:
        nu, t0, e = _first_order_newton(fam, nu, t0, tol)
    except ConvergenceError:
        if continuation_hint is None and tc.g_c - g >= 0.15:
            raise
        nu, t0 = _bracket_first_order(u, g)
        nu, t0, e = _first_order_newton(fam, nu, t0, tol)
    # final polish on a rule built at the converged parameters
    fam._rebuild(nu)
    nu, t0, e = _first_order_newton(fam, nu, t0, tol)
    pot = fam(nu)
    vp0 = pot(0.0).Vp
    if verify:
        if not (t0 > 0 and e.Vpp > 0 and vp0 > 0):
            raise VerificationError(
                f"first-order point at g={g}: t0={t0:.4g}, V''(t0)={e.Vpp:.4g}, V'(0)={vp0:.4g}")
    return BoundaryPoint(g=float(g), nu=float(nu), kind=CurveKind.FIRST_ORDER, t0=float(t0),
                         residuals=(float(e.V), float(e.Vp)), u=u)


def trace_boundary(g_min, g_max, step, u=1.0, include_tricritical=True):
    """Trace the phase boundary on ``[g_min, g_max]`` with spacing ``step``.

    Second-order points (``g >= g_c``) are traced upward and first-order
    points downward from ``g_c``, each seeded by linear extrapolation from the
    previous two points.  The tricritical point is inserted as the kind
    switch when it lies inside the interval.

    Returns
    -------
    list of BoundaryPoint
        Sorted by ``g``.

    Raises
    ------
    RuntimeError
        Wrapping the member failure, with the ``g`` where tracing stopped.
    """
    if not g_max > g_min or step <= 0:
        raise ValueError("need g_min < g_max and step > 0")
    tc = tricritical_point(u)
    n = int(round((g_max - g_min) / step))
    grid = g_min + step * np.arange(n + 1)
    grid = grid[grid <= g_max + 1e-12]
    upper = sorted(g for g in grid if g > tc.g_c + 1e-9)
    lower = sorted((g for g in grid if g < tc.g_c - 1e-4), reverse=True)
    out = []

    prev = []
    if g_min <= tc.g_c:
        prev = [(tc.g_c, tc.nu_c)]
    for g in upper:
        seed = _extrapolate(prev, g, 1)
        try:
            pt = second_order_nu(g, u=u, nu0=seed[0] if seed else None)
        except (ConvergenceError, VerificationError) as exc:
            raise RuntimeError(f"tracing stopped at g={g}: {exc}") from exc
        out.append(pt)
        prev = (prev + [(g, pt.nu)])[-2:]

    prev = []
    for g in lower:
        hint = _extrapolate(prev, g, 2)
        try:
            pt = first_order_point(g, continuation_hint=hint, u=u)
        except (ConvergenceError, VerificationError) as exc:
            raise RuntimeError(f"tracing stopped at g={g}: {exc}") from exc
        out.append(pt)
        prev = (prev + [(g, pt.nu, pt.t0)])[-2:]

    if include_tricritical and g_min <= tc.g_c <= g_max:
        out.append(BoundaryPoint(g=tc.g_c, nu=tc.nu_c, kind=CurveKind.TRICRITICAL, t0=0.0,
                                 residuals=(tc.residual,), u=u))
    out.sort(key=lambda p: p.g)
    return out


def _extrapolate(prev, g, width):
    if not prev:
        return None
    if len(prev) == 1:
        return tuple(prev[-1][1:1 + width])
    (g1, *y1), (g2, *y2) = prev[-2], prev[-1]
    if g2 == g1:
        return tuple(y2[:width])
    w = (g - g2) / (g2 - g1)
    return tuple(b + w * (b - a) for a, b in zip(y1[:width], y2[:width]))


def boundary_derivatives(points, g_c, nu_c, window=0.1, degree=3):
    """One-sided slopes and second derivatives of ``nu(g)`` at ``g_c``.

    Fits ``nu - nu_c = c1 d + c2 d^2 + ...`` (``d = g - g_c``) separately to
    the traced points on each side within ``window``.

    Returns
    -------
    dict
        ``slope_left``, ``slope_right``, ``nu_gg_left`` (first-order side),
        ``nu_gg_right`` (second-order side).
    """
    out = {}
    for side, sel in (("left", lambda d: -window <= d < 0), ("right", lambda d: 0 < d <= window)):
        pts = [(p.g - g_c, p.nu - nu_c) for p in points if sel(p.g - g_c)]
        if len(pts) < degree + 1:
            raise ValueError(f"need at least {degree + 1} traced points on the {side} of g_c")
        d = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        A = np.stack([d ** k for k in range(1, degree + 1)], axis=1)
        coef = np.linalg.lstsq(A, y, rcond=None)[0]
        out[f"slope_{side}"] = float(coef[0])
        out[f"nu_gg_{side}"] = float(2.0 * coef[1])
    return out

"""Laplace-method asymptotics and the large-N laws for the observables."""

from dataclasses import dataclass, field
import math

import numpy as np

from .phase import Phase, classify, interior_minima
from .potential import Potential
from .model import ModelParams

SQRT_2PI = math.sqrt(2.0 * math.pi)


class WrongRegionError(RuntimeError):
    """An approach sample landed on the other side of the boundary."""


# ---------------------------------------------------------------------------
# Laplace method
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaplaceEndpointData:
    mu: int
    v0: float
    lam: float
    q0: float

    def __post_init__(self):
        if self.mu not in (1, 2, 3):
            raise ValueError("mu must be 1, 2 or 3")
        if not self.v0 > 0 or not self.lam > 0:
            raise ValueError("need v0 > 0 and lambda > 0")


def laplace_endpoint(mu, v0, lam, q0, N, V_a=0.0, log=False):
    """Leading term of ``int_a^b exp(-N V) q`` with the minimum at the endpoint.

    ``V(t) ~ V(a) + v0 (t-a)^mu`` and ``q(t) ~ q0 (t-a)^(lam-1)``; the result
    is ``exp(-N V(a)) q0 Gamma(lam/mu) / (mu (v0 N)^(lam/mu))``.  With
    ``log=True`` returns ``log`` of the magnitude (``q0 > 0`` assumed).
    """
    data = LaplaceEndpointData(int(mu), float(v0), float(lam), float(q0))
    r = data.lam / data.mu
    if log:
        if data.q0 <= 0:
            raise ValueError("log form needs q0 > 0")
        return (-N * V_a + math.log(data.q0) + math.lgamma(r) - math.log(data.mu)
                - r * math.log(data.v0 * N))
    return math.exp(-N * V_a) * data.q0 * math.gamma(r) / (data.mu * (data.v0 * N) ** r)


def laplace_interior(Vpp_t0, kernel, N, V_t0=0.0, log=False):
    """Leading term at an interior minimum.

    Returns ``exp(-N V(t0)) N^(-1/2) sqrt(2 pi) / sqrt(V''(t0)) * kernel``,
    where ``kernel`` is ``q(t0)`` for a plain integral or the second-slot
    derivative of ``F`` on the diagonal for the reduced two-variable form.
    """
    if not Vpp_t0 > 0:
        raise ValueError("need V''(t0) > 0 at an interior minimum")
    if log:
        if kernel <= 0:
            raise ValueError("log form needs a positive kernel")
        return -N * V_t0 - 0.5 * math.log(N) + math.log(SQRT_2PI * kernel / math.sqrt(Vpp_t0))
    return math.exp(-N * V_t0) * SQRT_2PI * kernel / math.sqrt(N * Vpp_t0)


def laplace_interior_coeffs(Vpp, Vppp, Vpppp, q, qp, qpp):
    """First two coefficients ``(b0, b1)`` of the interior expansion.

    The integral is ``2 exp(-N V(t0)) (Gamma(1/2) b0 N^(-1/2) +
    Gamma(3/2) b1 N^(-3/2) + ...)``; all arguments are evaluated at ``t0``.
    """
    b0 = q / math.sqrt(2.0 * Vpp)
    b1 = (2.0 * qpp - 2.0 * Vppp * qp / Vpp
          + (5.0 * Vppp ** 2 / (6.0 * Vpp ** 2) - Vpppp / (2.0 * Vpp)) * q) / (2.0 * Vpp) ** 1.5
    return b0, b1


def laplace_interior_two_term(Vpp, Vppp, Vpppp, q, qp, qpp, N, V_t0=0.0):
    b0, b1 = laplace_interior_coeffs(Vpp, Vppp, Vpppp, q, qp, qpp)
    return 2.0 * math.exp(-N * V_t0) * (math.gamma(0.5) * b0 / N ** 0.5 + math.gamma(1.5) * b1 / N ** 1.5)


def dense_chi_prefactor(Vpp):
    """``sqrt(2 pi / V'')``: N^(1/2) coefficient of chi at an interior minimum."""
    return SQRT_2PI / math.sqrt(Vpp)


def second_order_chi_prefactor(Vpp0):
    """``Gamma(3/2) / (V''(0)/2)^(1/2)``: N^(1/2) coefficient of chi on the curve."""
    return math.gamma(1.5) / math.sqrt(0.5 * Vpp0)


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticLaw:
    """``prefactor * N**n_power * exp(exp_rate * N)``."""

    exp_rate: float
    n_power: float
    prefactor: float
    region: Phase

    def value(self, N):
        return self.prefactor * N ** self.n_power * math.exp(self.exp_rate * N)

    def log_value(self, N):
        return self.exp_rate * N + self.n_power * math.log(N) + math.log(abs(self.prefactor))

    def to_dict(self):
        return {"exp_rate": self.exp_rate, "n_power": self.n_power,
                "prefactor": self.prefactor, "region": self.region.value}


def observable_laws(inter, report=None):
    """Large-N laws for ``G00, G01, chi, EL, rho`` in the region of ``report``.

    Parameters
    ----------
    inter : Interaction, ModelParams or Potential
    report : PhaseReport, optional
        Classified if omitted.

    Returns
    -------
    dict of str -> AsymptoticLaw
    """
    pot = inter if isinstance(inter, Potential) else Potential(inter)
    if report is None:
        report = classify(pot)
    lab = report.label
    e0 = pot(0.0)
    vp0, vpp0, vppp0, vdotp0 = e0.Vp, e0.Vpp, e0.Vppp, e0.Vdotp
    laws = {}

    def put(name, rate, power, pref):
        laws[name] = AsymptoticLaw(float(rate), float(power), float(pref), lab)

    if lab in (Phase.DENSE, Phase.FIRST_ORDER):
        if report.t0 is None:
            raise ValueError("dense/first-order laws need the interior minimum t0")
        et = pot(report.t0)
        rate = abs(et.V) if lab is Phase.DENSE else 0.0
        pref = dense_chi_prefactor(et.Vpp)
        if lab is Phase.DENSE:
            put("G00", rate, -0.5, pref * (1.0 - et.Vpp))
        else:
            put("G00", 0.0, 0.0, 1.0 - vp0)
        put("G01", rate, -0.5, pref)
        put("chi", rate, 0.5, pref)
        put("EL", 0.0, 1.0, et.Vdot)
        put("rho", 0.0, 0.0, et.Vdot)
    elif lab is Phase.DILUTE:
        put("G00", 0.0, 0.0, 1.0 - vp0)
        put("G01", 0.0, -1.0, (1.0 - vp0) ** 2 / vp0)
        put("chi", 0.0, 0.0, (1.0 - vp0) / vp0)
        put("EL", 0.0, 0.0, vdotp0 / (vp0 * (1.0 - vp0)))
        put("rho", 0.0, 0.0, 0.0)
    elif lab is Phase.SECOND_ORDER:
        c = math.sqrt(0.5 * vpp0)
        put("G00", 0.0, 0.0, 1.0)
        put("G01", 0.0, -0.5, math.gamma(1.5) / c)
        put("chi", 0.0, 0.5, math.gamma(1.5) / c)
        put("EL", 0.0, 0.5, vdotp0 / (math.gamma(0.5) * c))
        put("rho", 0.0, 0.0, 0.0)
    elif lab is Phase.TRICRITICAL:
        c = (vppp0 / 6.0) ** (1.0 / 3.0)
        put("G00", 0.0, 0.0, 1.0)
        put("G01", 0.0, -1.0 / 3.0, math.gamma(4.0 / 3.0) / c)
        put("chi", 0.0, 2.0 / 3.0, math.gamma(4.0 / 3.0) / c)
        put("EL", 0.0, 2.0 / 3.0, math.gamma(2.0 / 3.0) / math.gamma(1.0 / 3.0) / c)
        put("rho", 0.0, 0.0, 0.0)
    else:
        raise ValueError(f"no law for label {lab!r}")
    return laws


# ---------------------------------------------------------------------------
# constants at the tricritical point
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TricriticalConstants:
    alpha: float
    b: float
    a: float
    B0: float
    B1: float
    B2: float
    B3: float
    nu_gg_second: float
    nu_gg_first: float

    def to_dict(self):
        return dict(self.__dict__)


def tricritical_constants(tc):
    """Approach amplitudes and boundary curvatures from the moments at ``tc``.

    Raises
    ------
    ValueError
        If ``alpha <= 0`` or ``b <= 0``, which would signal a numerical
        failure upstream.
    """
    M = tc.M
    alpha = 1.0 - 0.5 * M[2]
    b = M[3] - M[2] ** 2
    nu_gg_second = M[4] - 2.0 * M[3] * M[2] + M[2] ** 3
    a = 0.5 * nu_gg_second
    if alpha <= 0 or b <= 0:
        raise ValueError(f"alpha={alpha:.4g} and b={b:.4g} must both be positive")
    root = math.sqrt(b * b + 2.0 * alpha * a)
    return TricriticalConstants(
        alpha=alpha, b=b, a=a,
        B0=math.sqrt(2.0 / alpha),
        B1=(-b + root) / alpha,
        B2=(b + root) / alpha,
        B3=1.5 * b / alpha,
        nu_gg_second=nu_gg_second,
        nu_gg_first=nu_gg_second + 0.75 * b * b / alpha,
    )


# ---------------------------------------------------------------------------
# approach exponents
# ---------------------------------------------------------------------------


@dataclass
class ApproachTable:
    s: np.ndarray
    g: np.ndarray
    nu: np.ndarray
    side: list
    t0: np.ndarray
    rho: np.ndarray
    chi: np.ndarray
    fits: dict = field(default_factory=dict)

    def rows(self):
        for i in range(len(self.s)):
            yield {"s": self.s[i], "g": self.g[i], "nu": self.nu[i], "side": self.side[i],
                   "t0": self.t0[i], "rho": self.rho[i], "chi": self.chi[i]}


def fit_power_law(s, y, decade=True):
    """Least-squares fit ``y = amplitude * s**exponent`` in log-log coordinates.

    With ``decade=True`` only samples within a factor 10 of the smallest
    ``s`` are used.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y) & (y > 0) & (s > 0)
    s, y = s[ok], y[ok]
    if decade:
        keep = s <= 10.0 * s.min() * (1 + 1e-12)
        s, y = s[keep], y[keep]
    if s.size < 2:
        raise ValueError("need at least two positive samples to fit")
    slope, icpt = np.polyfit(np.log(s), np.log(y), 1)
    return float(slope), float(math.exp(icpt))


def _point_at(pot_base, g, nu):
    return pot_base.with_params(ModelParams(pot_base.params.u, g, nu))


def approach_scaling(base, direction, s_values, u=1.0):
    """Sample ``t0``, ``rho`` and ``chi`` along ``base + s * direction``.

    Parameters
    ----------
    base : BoundaryPoint, TricriticalPoint or ``"first"``
        Point approached.  ``"first"`` walks along the first-order curve
        ``g = g_c - s`` instead (``direction`` is then ignored).
    direction : (float, float)
        ``(m1, m2)``, used as given (not normalised).
    s_values : sequence of float
        Positive distances, typically geometric and decreasing.

    Returns
    -------
    ApproachTable
        With ``fits`` holding ``(exponent, amplitude)`` pairs for ``chi``
        (dilute side) or ``t0`` and ``rho`` (dense side and first-order
        curve), fitted on the smallest decade of ``s``.

    Raises
    ------
    WrongRegionError
        When the samples do not all lie on one side of the boundary.
    """
    from .curves import first_order_point, tricritical_point

    s_values = np.asarray(sorted(s_values, reverse=True), dtype=float)
    n = s_values.size
    g = np.empty(n)
    nu = np.empty(n)
    t0 = np.full(n, np.nan)
    rho = np.full(n, np.nan)
    chi = np.full(n, np.nan)
    side = []
    if isinstance(base, str) and base == "first":
        tc = tricritical_point(u)
        prev = []
        for i, s in enumerate(s_values):
            hint = None
            if len(prev) == 2:
                (s1, n1, t1), (s2, n2, t2) = prev
                w = (s - s2) / (s2 - s1)
                hint = (n2 + w * (n2 - n1), t2 + w * (t2 - t1))
            pt = first_order_point(tc.g_c - s, continuation_hint=hint, u=u)
            g[i], nu[i], t0[i] = pt.g, pt.nu, pt.t0
            e = Potential(ModelParams(u, pt.g, pt.nu))(pt.t0)
            rho[i] = e.Vdot
            side.append("first-order")
            prev = (prev + [(s, pt.nu, pt.t0)])[-2:]
        table = ApproachTable(s_values, g, nu, side, t0, rho, chi)
        table.fits["t0"] = fit_power_law(s_values, t0)
        table.fits["rho"] = fit_power_law(s_values, rho)
        return table

    g_b = base.g_c if hasattr(base, "g_c") else base.g
    nu_b = base.nu_c if hasattr(base, "nu_c") else base.nu
    u = getattr(base, "u", u)
    m1, m2 = map(float, direction)
    pot_base = Potential(ModelParams(u, g_b, nu_b))
    for i, s in enumerate(s_values):
        g[i], nu[i] = g_b + s * m1, nu_b + s * m2
        pot = _point_at(pot_base, g[i], nu[i])
        vp0 = pot(0.0).Vp
        mins = interior_minima(pot)
        best = min(mins, key=lambda m: m.V) if mins else None
        if best is not None and best.V < 0:
            side.append("dense")
            t0[i] = best.t
            rho[i] = pot(best.t).Vdot
        elif vp0 > 0:
            side.append("dilute")
            chi[i] = (1.0 - vp0) / vp0
        else:
            side.append("boundary")
    if len(set(side)) != 1 or side[0] == "boundary":
        bad = [float(s) for s, sd in zip(s_values, side) if sd != side[0] or sd == "boundary"]
        raise WrongRegionError(f"approach samples change region; offending s: {bad or list(s_values)}")
    table = ApproachTable(s_values, g, nu, side, t0, rho, chi)
    if side[0] == "dilute":
        table.fits["chi"] = fit_power_law(s_values, chi)
    else:
        table.fits["t0"] = fit_power_law(s_values, t0)
        table.fits["rho"] = fit_power_law(s_values, rho)
    return table

"""Acceptance checks shared by ``tricrit verify`` and the acceptance tests.

Each check returns a :class:`CheckResult`; nothing here raises on a failed
comparison, so a run always produces the full table.
"""

from dataclasses import dataclass
import math
import time
import traceback

import numpy as np

from .model import ModelParams, make_polynomial_interaction


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.2f} s)"

    def to_dict(self):
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail, "seconds": self.seconds}


class _Acc:
    """Collects sub-comparisons of one check."""

    def __init__(self):
        self.ok = True
        self.parts = []

    def close(self, name, got, want, tol, rel=False):
        err = abs(got - want) / (abs(want) if rel else 1.0)
        good = bool(err <= tol)
        self.ok &= good
        kind = "rel" if rel else "abs"
        self.parts.append(f"{name}={got:.6g} (want {want:.6g}, {kind} err {err:.2g} <= {tol:g}: {good})")
        return good

    def within(self, name, got, lo, hi):
        good = bool(lo <= got <= hi)
        self.ok &= good
        self.parts.append(f"{name}={got:.6g} in [{lo:g}, {hi:g}]: {good}")
        return good

    def flag(self, name, good, info=""):
        good = bool(good)
        self.ok &= good
        self.parts.append(f"{name}{': ' + info if info else ''}: {good}")
        return good

    def detail(self):
        return "; ".join(self.parts)


def _timed(number, title, fn):
    t = time.perf_counter()
    try:
        acc = fn()
        ok, detail = acc.ok, acc.detail()
    except Exception as exc:  # a crash is a failed check, reported with its cause
        ok = False
        detail = f"error: {type(exc).__name__}: {exc}"
        tb = traceback.format_exc(limit=3).strip().splitlines()
        detail += " | " + " / ".join(tb[-3:])
    return CheckResult(number, title, ok, detail, time.perf_counter() - t)


# ---------------------------------------------------------------------------


def _c1():
    from .curves import tricritical_solve

    a = _Acc()
    t = time.perf_counter()
    tc = tricritical_solve()
    dt = time.perf_counter() - t
    a.close("g_c", tc.g_c, -3.2103, 2e-4)
    a.close("nu_c", tc.nu_c, 2.0772, 2e-4)
    a.within("runtime_s", dt, 0.0, 5.0)
    return a


def _c2():
    from .curves import tricritical_point
    from .potential import Potential

    a = _Acc()
    tc = tricritical_point(1.0)
    for k, want in ((2, 1.4478), (3, 2.4062), (4, 4.3315)):
        a.close(f"M{k}", tc.M[k], want, 1e-3)
    vppp0 = Potential(tc.params)(0.0).Vppp
    a.close("V'''(0) vs 1-M2/2", vppp0, 1.0 - 0.5 * tc.M[2], 1e-9)
    a.close("V'''(0)", vppp0, 0.2762, 1e-3)
    return a


def _c3():
    from .curves import first_order_point
    from .phase import Phase, classify

    a = _Acc()
    a.close("nu(g=-3.7)", first_order_point(-3.7).nu, 2.864, 2e-3)
    lab = classify(ModelParams(1.0, -3.7, 2.786)).label
    a.flag("classify(-3.7, 2.786)", lab is Phase.DENSE, lab.value)
    return a


def _c4():
    from .phase import Phase, classify

    a = _Acc()
    for g, nu, want in ((-4.4, 4.21, Phase.DENSE), (-4.4, 4.26, Phase.DILUTE),
                        (-2.7, 1.2, Phase.DENSE), (-2.7, 1.5, Phase.DILUTE)):
        lab = classify(ModelParams(1.0, g, nu)).label
        a.flag(f"({g}, {nu})", lab is want, lab.value)
    return a


def _c5():
    from .asymptotics import tricritical_constants
    from .curves import (boundary_derivatives, first_order_point, second_order_nu,
                         trace_boundary, tricritical_point)

    a = _Acc()
    tc = tricritical_point(1.0)
    k = tricritical_constants(tc)
    h = 0.01
    slope = (second_order_nu(tc.g_c + h).nu - first_order_point(tc.g_c - h).nu) / (2 * h)
    a.close("central slope", slope, -tc.M[2], 1e-2)
    pts = trace_boundary(tc.g_c - 0.1, tc.g_c + 0.1, 0.01)
    d = boundary_derivatives(pts, tc.g_c, tc.nu_c, window=0.1 + 1e-9, degree=3)
    a.close("slope_left", d["slope_left"], -tc.M[2], 1e-2)
    a.close("slope_right", d["slope_right"], -tc.M[2], 1e-2)
    a.close("nu_gg jump", d["nu_gg_left"] - d["nu_gg_right"], 0.75 * k.b ** 2 / k.alpha, 0.05, rel=True)
    return a


def _c6():
    from .asymptotics import observable_laws
    from .finite_n import finite_n_observables
    from .potential import Potential

    a = _Acc()
    t = time.perf_counter()
    pot = Potential(ModelParams(0.0, 0.0, 1.0))
    ts = np.linspace(0.0, 10.0, 101)
    dev = float(np.max(np.abs(pot(ts).V - ts / 2)))
    a.within("max |V - t/2|", dev, 0.0, 1e-12)
    for N in (3, 10, 100):
        f = finite_n_observables(pot, N)
        a.close(f"chi(N={N})", f.chi, 1.0, 1e-8)
        a.close(f"EL(N={N})", f.EL, 1.0, 1e-8)
    laws = observable_laws(pot)
    a.close("chi law", laws["chi"].value(10), 1.0, 1e-10)
    a.close("EL law", laws["EL"].value(10), 1.0, 1e-10)
    a.within("runtime_s", time.perf_counter() - t, 0.0, 1.0)
    return a


def _c7():
    from .finite_n import finite_n_observables
    from .potential import Potential

    a = _Acc()
    pot = Potential(ModelParams(1.0, -2.7, 1.5))
    vp0 = pot(0.0).Vp
    law = (1.0 - vp0) / vp0
    r3 = finite_n_observables(pot, 1e3).chi / law
    r4 = finite_n_observables(pot, 1e4).chi / law
    a.within("ratio N=1e4", r4, 0.99, 1.01)
    a.within("deviation shrink 1e3->1e4", abs(r3 - 1) / abs(r4 - 1), 8.0, 12.5)
    return a


def _c8():
    from .asymptotics import observable_laws
    from .curves import second_order_nu, tricritical_point
    from .finite_n import finite_n_observables
    from .phase import Phase, classify
    from .potential import Potential

    a = _Acc()
    N = 1e6
    bp = second_order_nu(-2.7)
    cases = (("second-order", ModelParams(1.0, bp.g, bp.nu), Phase.SECOND_ORDER),
             ("tricritical", tricritical_point(1.0).params, Phase.TRICRITICAL))
    for name, p, lab in cases:
        pot = Potential(p)
        rep = classify(pot)
        a.flag(f"{name} label", rep.label is lab, rep.label.value)
        laws = observable_laws(pot, rep)
        f = finite_n_observables(pot, N)
        a.close(f"{name} chi ratio", f.chi / laws["chi"].value(N), 1.0, 0.05)
        a.close(f"{name} EL ratio", f.EL / laws["EL"].value(N), 1.0, 0.05)
    return a


def _c9():
    from .finite_n import finite_n_observables
    from .phase import classify
    from .potential import Potential

    a = _Acc()
    N = 1e4
    pot = Potential(ModelParams(1.0, -2.7, 1.2))
    rep = classify(pot)
    e = pot(rep.t0)
    f = finite_n_observables(pot, N)
    pred = N * abs(e.V) + 0.5 * math.log(N) + math.log(math.sqrt(2 * math.pi) / math.sqrt(e.Vpp))
    a.within("|log chi - law|", abs(f.log_chi - pred), 0.0, 0.05)
    a.close("rho_N vs Vdot(t0)", f.rho_N, e.Vdot, 0.01, rel=True)
    return a


def _c10():
    from .asymptotics import approach_scaling, tricritical_constants
    from .curves import second_order_nu, tricritical_point
    from .potential import moments

    a = _Acc()
    s = np.geomspace(1e-5, 1e-4, 6)
    tc = tricritical_point(1.0)
    k = tricritical_constants(tc)
    M2 = tc.M[2]
    bp = second_order_nu(-2.7)
    M = moments(make_polynomial_interaction(ModelParams(1.0, bp.g, bp.nu)), 2, rel_tol=1e-12).M
    m = (0.0, 1.0)
    mn = abs(m[0] * M[2] + m[1] * M[1])
    cases = (
        ("dilute chi", bp, m, "chi", -1.0, 1.0 / mn),
        ("dense t0 (B0)", tc, (0.0, -1.0), "t0", 0.5, k.B0),
        ("tangential t0 (B1)", tc, (1.0, -M2), "t0", 1.0, k.B1),
        ("tangential t0 (B2)", tc, (-1.0, M2), "t0", 1.0, k.B2),
        ("first-order t0 (B3)", "first", None, "t0", 1.0, k.B3),
    )
    for name, base, direction, key, expo, amp in cases:
        e, A = approach_scaling(base, direction, s).fits[key]
        a.close(f"{name} exponent", e, expo, 0.02)
        a.close(f"{name} amplitude", A, amp, 0.02, rel=True)
    return a


def _c11():
    from . import mc_walk
    from .curves import tricritical_point
    from .finite_n import finite_n_observables

    a = _Acc()
    n, seed = 100_000, 20240611
    tc = tricritical_point(1.0)
    for name, p in (("(1,0,1)", ModelParams(1.0, 0.0, 1.0)),
                    ("(1,g_c,nu_c+1)", ModelParams(1.0, tc.g_c, tc.nu_c + 1.0))):
        est = mc_walk.estimate_all(p, 3, n, seed)
        f = finite_n_observables(make_polynomial_interaction(p), 3)
        for key in ("chi", "G00", "G01"):
            e = est[key]
            z = (e.value - getattr(f, key)) / e.std_error
            a.within(f"{name} {key} z", z, -3.0, 3.0)
    e = mc_walk.estimate_chi(ModelParams(0.0, 0.0, 1.0), 3, n, seed)
    a.within("free walk chi z", (e.value - 1.0) / e.std_error, -3.0, 3.0)
    return a


def _c12():
    from . import mc_walk
    from .asymptotics import dense_chi_prefactor, second_order_chi_prefactor
    from .finite_n import finite_n_observables
    from .potential import Potential, moments
    from .quadrature import integrate_decaying
    from .specfun import bessel_i_scaled

    a = _Acc()
    rng = np.random.default_rng(12)
    z = np.concatenate([rng.uniform(0.01, 40.0, 200), [16.99, 17.0, 17.01]])
    worst = 0.0
    for n in (1, 2):
        lhs = bessel_i_scaled(n - 1, z) - bessel_i_scaled(n + 1, z)
        rhs = 2 * n / z * bessel_i_scaled(n, z)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    a.within("Bessel recurrence rel err", worst, 0.0, 1e-11)

    worst = 0.0
    for kk in range(9):
        r = integrate_decaying(lambda s, kk=kk: s ** kk * np.exp(-s), rel_tol=1e-12)
        worst = max(worst, abs(r.value / math.factorial(kk) - 1.0))
    a.within("Gamma family rel err", worst, 0.0, 1e-12)

    M = moments(make_polynomial_interaction(ModelParams(1.0, -2.7, 1.5)), 8).M
    a.flag("moment log-convexity", all(M[k] ** 2 <= M[k - 1] * M[k + 1] for k in range(1, 8)))

    pot = Potential(ModelParams(1.0, -2.7, 1.5))
    worst = 0.0
    for t in (0.3, 1.1, 2.5):
        h = 1e-4
        e0, ep, em = pot(t), pot(t + h), pot(t - h)
        for f, d in (("V", "Vp"), ("Vp", "Vpp"), ("Vpp", "Vppp"), ("Vdot", "Vdotp"),
                     ("Vdotp", "Vdotpp"), ("Vdotpp", "Vdotppp")):
            fd = (getattr(ep, f) - getattr(em, f)) / (2 * h)
            worst = max(worst, abs(fd - getattr(e0, d)) / max(1.0, abs(getattr(e0, d))))
        hn = 1e-5
        pp = pot.with_params(ModelParams(1.0, -2.7, 1.5 + hn))(t)
        pm = pot.with_params(ModelParams(1.0, -2.7, 1.5 - hn))(t)
        for f, d in (("V", "Vdot"), ("Vp", "Vdotp"), ("Vpp", "Vdotpp"), ("Vppp", "Vdotppp")):
            fd = (getattr(pp, f) - getattr(pm, f)) / (2 * hn)
            worst = max(worst, abs(fd - getattr(e0, d)) / max(1.0, abs(getattr(e0, d))))
    a.within("finite-difference derivative err", worst, 0.0, 1e-6)

    f = finite_n_observables(pot, 50)
    resid = abs(f.chi - (f.G00 + 49 * f.G01))
    a.within("chi identity residual", resid, 0.0, max(f.err["chi"], 1e-14))

    x = 0.7
    a.close("prefactor factor 2", dense_chi_prefactor(x) / second_order_chi_prefactor(x), 2.0, 1e-14)

    run = mc_walk.simulate(ModelParams(1.0, 0.0, 1.0), 3, np.linspace(0.0, 10.0, 201), 20_000, 5)
    a.within("MC max |sum L - T|", float(run.conservation.max()), 0.0, 1e-12)
    return a


CHECKS = (
    (1, "tricritical point", _c1),
    (2, "tricritical moments", _c2),
    (3, "first-order anchor", _c3),
    (4, "phase-point classification", _c4),
    (5, "boundary slope and kink", _c5),
    (6, "free-walk exactness", _c6),
    (7, "Laplace convergence, dilute", _c7),
    (8, "Laplace convergence, second-order and tricritical", _c8),
    (9, "dense phase in log space", _c9),
    (10, "approach exponents", _c10),
    (11, "Monte Carlo cross-validation", _c11),
    (12, "property spot checks", _c12),
)


def run_check(number):
    for num, title, fn in CHECKS:
        if num == number:
            return _timed(num, title, fn)
    raise KeyError(f"no acceptance check {number}")


def run_all(numbers=None):
    """Run the selected checks (all by default) in order."""
    sel = set(numbers) if numbers else None
    return [_timed(n, t, f) for n, t, f in CHECKS if sel is None or n in sel]

"""``tricrit`` command-line entry point.

Every subcommand writes one dataset (CSV or JSON) to stdout or ``--output``.
Exit status: 0 success, 1 failed verification, 2 bad configuration,
3 numerical non-convergence.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import _accel
from .model import InadmissibleParameters, ModelParams

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# default phase-map window: encloses both marked pairs of phase points and the
# tricritical point
SCAN_G = (-5.0, -2.0)
SCAN_NU = (0.5, 6.0)
SCAN_RES = 25


class ConfigError(ValueError):
    """Invalid command-line or config-file input."""


class NonConvergence(RuntimeError):
    """A computation finished without meeting its tolerance."""


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


def write_csv(rows, columns, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    out.write(buf.getvalue())


def write_json(obj, out):
    out.write(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False))
    out.write("\n")


def _emit(args, rows=None, columns=None, obj=None):
    """Write rows as CSV or an object as JSON, honouring --format/--output."""
    fmt = args.format
    if fmt is None:
        fmt = "csv" if rows is not None else "json"
    if fmt == "csv" and rows is None:
        rows, columns = [obj], list(obj)
    if fmt == "json" and obj is None:
        obj = {"rows": rows}
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        if fmt == "csv":
            write_csv(rows, columns, out)
        else:
            write_json(obj, out)
    finally:
        if args.output:
            out.close()


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def _floats(text, name):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _range(text, name):
    """``a:b:n`` -> linspace, or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--{name}: expected a:b:n, got {text!r}")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"--{name}: expected a:b:n, got {text!r}") from None
        if n < 1:
            raise ConfigError(f"--{name}: n must be >= 1")
        return np.linspace(a, b, n)
    return np.array(_floats(text, name))


def _pair(text, name):
    v = _floats(text, name) if "," in text else _floats(text.replace(":", ","), name)
    if len(v) != 2:
        raise ConfigError(f"--{name}: expected two numbers, got {text!r}")
    return tuple(v)


def _params(args):
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        allowed = {"u", "g", "nu", "rel_tol", "seed"}
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("rel_tol", "seed"):
            if key in cfg and getattr(args, key, None) is None:
                setattr(args, key, cfg[key])
    vals = {k: cfg.get(k) for k in ("u", "g", "nu")}
    for k in ("u", "g", "nu"):
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    if vals["u"] is None:
        vals["u"] = 1.0
    missing = [k for k in ("g", "nu") if vals[k] is None]
    if missing:
        raise ConfigError(f"missing parameter(s): {', '.join('--' + m for m in missing)}")
    try:
        p = ModelParams(float(vals["u"]), float(vals["g"]), float(vals["nu"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if not p.admissible:
        raise ConfigError(f"inadmissible parameters {p}: need u > 0, or u = 0 and g > 0, "
                          "or u = g = 0 and nu > -1")
    return p


def _rel_tol(args, default):
    r = default if getattr(args, "rel_tol", None) is None else float(args.rel_tol)
    if not 1e-13 <= r <= 1e-3:
        raise ConfigError(f"--rel-tol must lie in [1e-13, 1e-3], got {r}")
    return r


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_POT_COLS = ["t", "V", "Vp", "Vpp", "Vppp", "Vdot", "Vdotp", "Vdotpp", "Vdotppp", "err"]


def cmd_potential(args):
    from .potential import Potential, potential_eval

    p = _params(args)
    ts = _range(args.t_grid, "t-grid")
    if ts.size == 0 or np.any(ts < 0) or not np.all(np.isfinite(ts)):
        raise ConfigError("--t-grid must hold finite t >= 0")
    if args.route == "adaptive":
        rows = []
        for t in ts:
            e = potential_eval(p, float(t), rel_tol=_rel_tol(args, 1e-10))
            rows.append({c: getattr(e, c) for c in _POT_COLS})
    else:
        ev = Potential(p)(ts)
        rows = [{c: float(np.atleast_1d(getattr(ev, c))[i]) for c in _POT_COLS}
                for i in range(ts.size)]
    _emit(args, rows, _POT_COLS)


def cmd_classify(args):
    from .phase import classify

    p = _params(args)
    rep = classify(p, tol=args.tol)
    _emit(args, obj={"u": p.u, "g": p.g, "nu": p.nu, **rep.to_dict()})


def _scan_point(job):
    from .phase import AmbiguousClassification, classify

    u, g, nu, tol = job
    try:
        rep = classify(ModelParams(u, g, nu), tol=tol)
        return {"g": g, "nu": nu, "label": rep.label.value, "Vp0": rep.Vp0,
                "t0": rep.t0, "Vt0": rep.Vt0}
    except AmbiguousClassification as exc:
        return {"g": g, "nu": nu, "label": "Ambiguous", "Vp0": exc.report.Vp0 if exc.report else None,
                "t0": None, "Vt0": None}


def cmd_scan(args):
    u = 1.0 if args.u is None else args.u
    g0, g1 = _pair(args.g_range, "g-range") if args.g_range else SCAN_G
    n0, n1 = _pair(args.nu_range, "nu-range") if args.nu_range else SCAN_NU
    res = args.resolution
    if res < 2:
        raise ConfigError("--resolution must be >= 2")
    jobs = [(u, float(g), float(nu), args.tol)
            for g in np.linspace(g0, g1, res) for nu in np.linspace(n0, n1, res)]
    workers = int(os.environ.get("TRICRIT_THREADS", "0") or 0)
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        import multiprocessing

        # fork is unsafe once the OpenMP runtime has started
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            rows = list(ex.map(_scan_point, jobs, chunksize=8))
    else:
        rows = [_scan_point(j) for j in jobs]
    _emit(args, rows, ["g", "nu", "label", "Vp0", "t0", "Vt0"])


def cmd_boundary(args):
    from .curves import trace_boundary

    u = 1.0 if args.u is None else args.u
    pts = trace_boundary(args.g_min, args.g_max, args.step, u=u)
    rows = [{"g": p.g, "nu": p.nu, "kind": p.kind.value, "t0": p.t0} for p in pts]
    _emit(args, rows, ["g", "nu", "kind", "t0"])


def cmd_tricritical(args):
    from .asymptotics import tricritical_constants
    from .curves import tricritical_solve

    u = 1.0 if args.u is None else args.u
    tc = tricritical_solve(u=u)
    obj = tc.to_dict()
    obj.update({f"const_{k}": v for k, v in tricritical_constants(tc).to_dict().items()})
    _emit(args, obj=obj)


def cmd_laws(args):
    from .asymptotics import observable_laws
    from .phase import classify
    from .potential import Potential

    p = _params(args)
    pot = Potential(p)
    rep = classify(pot, tol=args.tol)
    laws = observable_laws(pot, rep)
    rows = [{"observable": k, **v.to_dict()} for k, v in laws.items()]
    if args.format == "csv":
        _emit(args, rows, ["observable", "exp_rate", "n_power", "prefactor", "region"])
    else:
        _emit(args, obj={"u": p.u, "g": p.g, "nu": p.nu, "label": rep.label.value,
                         "laws": {k: v.to_dict() for k, v in laws.items()}})


def cmd_approach(args):
    from .asymptotics import approach_scaling
    from .curves import second_order_nu, tricritical_point

    u = 1.0 if args.u is None else args.u
    lo, hi = _pair(args.s_decades, "s-decades")
    if not 0 < lo < hi:
        raise ConfigError("--s-decades a:b needs 0 < a < b (s from 10^-a down to 10^-b)")
    n = max(2, int(round((hi - lo) * args.per_decade)) + 1)
    s = np.logspace(-lo, -hi, n)
    if args.base == "first":
        base, direction = "first", None
    else:
        if args.direction is None:
            raise ConfigError("--direction dx,dy is required unless --base first")
        direction = _pair(args.direction, "direction")
        base = tricritical_point(u) if args.base == "tricritical" else second_order_nu(args.g, u=u)
    tab = approach_scaling(base, direction, s, u=u)
    rows = list(tab.rows())
    if args.format == "json":
        _emit(args, obj={"rows": rows, "fits": {k: {"exponent": e, "amplitude": a}
                                                for k, (e, a) in tab.fits.items()}})
    else:
        _emit(args, rows, ["s", "g", "nu", "side", "t0", "rho", "chi"])


_FN_COLS = ["N", "G00", "G01", "chi", "EL", "rho_N", "log_G00", "log_G01", "log_chi", "converged"]


def cmd_finite_n(args):
    from .finite_n import finite_n_observables
    from .potential import Potential

    p = _params(args)
    Ns = _floats(args.N, "N")
    if not Ns or any(N < 1 for N in Ns):
        raise ConfigError("--N must list values >= 1")
    pot = Potential(p)
    rows = []
    ok = True
    for N in Ns:
        f = finite_n_observables(pot, N, rel_tol=_rel_tol(args, 1e-10))
        d = f.to_dict()
        d["converged"] = f.converged
        ok &= f.converged
        rows.append(d)
    _emit(args, rows, _FN_COLS)
    if not ok:
        raise NonConvergence("finite-N quadrature did not reach its tolerance for some N")


def cmd_mc(args):
    from . import mc_walk

    p = _params(args)
    seed = 0 if args.seed is None else int(args.seed)
    if args.N < 2:
        raise ConfigError("--N must be >= 2")
    if args.samples < 2:
        raise ConfigError("--samples must be >= 2")
    if args.two_point:
        est = mc_walk.estimate_two_point(p, args.N, args.diagonal, args.samples, seed)
        what = "G00" if args.diagonal else "G01"
    else:
        est = mc_walk.estimate_chi(p, args.N, args.samples, seed)
        what = "chi"
    _emit(args, obj={"observable": what, "u": p.u, "g": p.g, "nu": p.nu, "N": args.N,
                     **est.to_dict()})


def cmd_verify(args):
    from .verify import CHECKS, run_all

    sel = [int(v) for v in _floats(args.only, "only")] if args.only else None
    known = {n for n, _, _ in CHECKS}
    if sel is not None and not set(sel) <= known:
        raise ConfigError(f"--only: unknown check numbers {sorted(set(sel) - known)}; "
                          f"valid are {min(known)}..{max(known)}")
    results = run_all(sel)
    if args.format == "json":
        _emit(args, obj={"passed": all(r.passed for r in results),
                         "checks": [r.to_dict() for r in results]})
    else:
        out = open(args.output, "w") if args.output else sys.stdout
        try:
            for r in results:
                out.write(r.line() + "\n")
            npass = sum(r.passed for r in results)
            out.write(f"{npass}/{len(results)} checks passed\n")
        finally:
            if args.output:
                out.close()
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="tricrit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, params=True, fmt=("csv", "json")):
        if params:
            p.add_argument("--u", type=float, default=None, help="cubic coefficient (default 1)")
            p.add_argument("--g", type=float, default=None)
            p.add_argument("--nu", type=float, default=None)
            p.add_argument("--config", help="JSON file with keys u, g, nu, rel_tol, seed")
        p.add_argument("--format", choices=fmt, default=None)
        p.add_argument("--output", "-o", help="write here instead of stdout")
        return p

    p = common(sub.add_parser("potential", help="V and its derivatives on a t grid"))
    p.add_argument("--t-grid", default="0:10:11", help="a:b:n or comma list")
    p.add_argument("--route", choices=("rule", "adaptive"), default="rule")
    p.add_argument("--rel-tol", type=float, default=None)
    p.set_defaults(func=cmd_potential)

    p = common(sub.add_parser("classify", help="phase label and witnesses"))
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_classify)

    p = common(sub.add_parser("scan", help="phase map on a (g, nu) grid"), params=False)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--g-range", help="g0:g1")
    p.add_argument("--nu-range", help="nu0:nu1")
    p.add_argument("--resolution", type=int, default=SCAN_RES)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_scan)

    p = common(sub.add_parser("boundary", help="trace the phase boundary"), params=False)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--g-min", type=float, default=-4.5)
    p.add_argument("--g-max", type=float, default=-2.5)
    p.add_argument("--step", type=float, default=0.05)
    p.set_defaults(func=cmd_boundary)

    p = common(sub.add_parser("tricritical", help="tricritical point and constants"), params=False)
    p.add_argument("--u", type=float, default=None)
    p.set_defaults(func=cmd_tricritical)

    p = common(sub.add_parser("laws", help="large-N laws at one point"))
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_laws)

    p = common(sub.add_parser("approach", help="scaling along an approach path"), params=False)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--base", choices=("second", "tricritical", "first"), default="tricritical")
    p.add_argument("--g", type=float, default=-2.7, help="g of the second-order base point")
    p.add_argument("--direction", help="dx,dy")
    p.add_argument("--s-decades", default="4:5", help="a:b, s from 10^-a to 10^-b")
    p.add_argument("--per-decade", type=float, default=5.0)
    p.set_defaults(func=cmd_approach)

    p = common(sub.add_parser("finite-n", help="exact observables at finite N"))
    p.add_argument("--N", required=True, help="comma list")
    p.add_argument("--rel-tol", type=float, default=None)
    p.set_defaults(func=cmd_finite_n)

    p = common(sub.add_parser("mc", help="Monte Carlo estimate"), fmt=("json", "csv"))
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--two-point", action="store_true", help="estimate G_0y instead of chi")
    p.add_argument("--diagonal", action="store_true", help="with --two-point: y = x (G00)")
    p.set_defaults(func=cmd_mc)

    p = common(sub.add_parser("verify", help="run the acceptance checks"), params=False,
               fmt=("table", "json"))
    p.add_argument("--only", help="comma list of check numbers")
    p.set_defaults(func=cmd_verify)
    return ap


def _numeric_errors():
    from .curves import ConvergenceError, VerificationError
    from .mc_walk import NonDecayingWeight
    from .phase import AmbiguousClassification, RootIsolationError
    from .quadrature import QuadratureError

    return (ConvergenceError, VerificationError, NonDecayingWeight, AmbiguousClassification,
            RootIsolationError, QuadratureError, NonConvergence, ArithmeticError)


def main(argv=None):
    threads = os.environ.get("TRICRIT_THREADS")
    if threads:
        try:
            _accel.set_threads(int(threads))
        except ValueError:
            print(f"tricrit: TRICRIT_THREADS must be an integer, got {threads!r}", file=sys.stderr)
            return EXIT_CONFIG
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        status = args.func(args)
    except (ConfigError, InadmissibleParameters) as exc:
        print(f"tricrit {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _numeric_errors() as exc:
        print(f"tricrit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, RuntimeError) as exc:
        # remaining module-level precondition failures
        print(f"tricrit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc, RuntimeError) else EXIT_CONFIG
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())

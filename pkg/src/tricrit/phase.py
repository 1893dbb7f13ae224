"""Global-minimum structure of ``V`` on ``[0, inf)`` and the five-region labels."""

from dataclasses import dataclass, field
import enum

import numpy as np

from .potential import Potential


class Phase(str, enum.Enum):
    DILUTE = "Dilute"
    SECOND_ORDER = "SecondOrderCurve"
    TRICRITICAL = "Tricritical"
    FIRST_ORDER = "FirstOrderCurve"
    DENSE = "Dense"


class AmbiguousClassification(RuntimeError):
    """Conditions for more than one label hold at the requested tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class RootIsolationError(RuntimeError):
    """Grid refinement could not separate the critical points of ``V``."""


@dataclass(frozen=True)
class Minimum:
    t: float
    V: float
    Vpp: float


@dataclass
class PhaseReport:
    """Label plus the numbers that justify it.

    ``margins`` holds signed distances from each threshold, e.g.
    ``Vp0 = V'(0) - tol``; a small magnitude means the point is close to a
    boundary at this tolerance.
    """

    label: Phase
    Vp0: float
    Vpp0: float
    Vppp0: float
    t0: float = None
    Vt0: float = None
    Vppt0: float = None
    minima: list = field(default_factory=list)
    margins: dict = field(default_factory=dict)
    tol: float = 1e-8

    def to_dict(self):
        return {
            "label": self.label.value,
            "Vp0": self.Vp0,
            "Vpp0": self.Vpp0,
            "Vppp0": self.Vppp0,
            "t0": self.t0,
            "Vt0": self.Vt0,
            "Vppt0": self.Vppt0,
            "tol": self.tol,
            **{f"margin_{k}": v for k, v in self.margins.items()},
        }


def _potential(obj):
    return obj if isinstance(obj, Potential) else Potential(obj)


def _polish(pot, a, b, fa, fb, root_tol=1e-12, max_iter=100):
    """Safeguarded Newton for ``V'(t) = 0`` on a bracket with ``V'(a) < 0 < V'(b)``."""
    t = a - fa * (b - a) / (fb - fa)
    if not a < t < b:
        t = 0.5 * (a + b)
    e = pot(t)
    for _ in range(max_iter):
        f = e.Vp
        if abs(f) < root_tol:
            break
        if f < 0:
            a = t
        else:
            b = t
        tn = t - f / e.Vpp if e.Vpp > 0 else np.nan
        if not a < tn < b:
            tn = 0.5 * (a + b)
        if b - a <= 4e-16 * max(1.0, t):
            break
        t = tn
        e = pot(t)
    return Minimum(t=float(t), V=float(e.V), Vpp=float(e.Vpp))


def _sign_changes(vp):
    return np.nonzero((vp[:-1] < 0) & (vp[1:] >= 0))[0]


def interior_minima(inter, t_max=50.0, n_grid=2000, refine=4, max_t=3200.0):
    """Local minima of ``V`` in ``(0, t_max]``.

    Parameters
    ----------
    inter : Interaction, ModelParams or Potential
    t_max : float
        Initial scan range; doubled until ``V(t_max)`` exceeds every
        candidate minimum (and 0) by 10.
    n_grid : int
        Scan points on ``[0, t_max]``; a geometric grid near 0 is added so
        minima very close to the origin are not missed.
    refine : int
        Each bracketing cell is resampled ``refine`` times finer before
        polishing, so closely spaced roots separate.

    Returns
    -------
    list of Minimum
        Sorted by ``t``; each has ``|V'(t)| < 1e-12`` (or a bracket at
        rounding level) and ``V''(t) > 0``.
    """
    pot = _potential(inter)
    key = ("interior_minima", t_max, n_grid, refine, max_t)
    if key in pot.memo:
        return list(pot.memo[key])
    while True:
        lin = np.linspace(0.0, t_max, n_grid + 1)
        geo = np.geomspace(1e-9, lin[1], 48)[:-1]
        ts = np.concatenate([[0.0], geo, lin[1:]])
        ev = pot(ts)
        vp = ev.Vp
        found = []
        for i in _sign_changes(vp):
            a, b = ts[i], ts[i + 1]
            sub = np.linspace(a, b, refine + 1)
            sev = pot(sub)
            idx = _sign_changes(sev.Vp)
            if idx.size == 0:
                # the refined samples straddle the root differently; keep the
                # coarse bracket
                found.append(_polish(pot, a, b, vp[i], vp[i + 1]))
                continue
            for k in idx:
                found.append(_polish(pot, sub[k], sub[k + 1], sev.Vp[k], sev.Vp[k + 1]))
        top = max([0.0] + [m.V for m in found])
        if ev.V[-1] > top + 10.0 and vp[-1] > 0:
            break
        if t_max >= max_t:
            raise RootIsolationError(f"V does not rise above its minima by t = {t_max}")
        t_max *= 2.0
    found = [m for m in found if m.Vpp > 0 and m.t > 0]
    found.sort(key=lambda m: m.t)
    dedup = []
    for m in found:
        if not dedup or abs(m.t - dedup[-1].t) > 1e-9 * max(1.0, m.t):
            dedup.append(m)
    pot.memo[key] = tuple(dedup)
    return dedup


def classify(inter, tol=1e-8, t_max=50.0, minima=None):
    """Label the parameter point.

    Parameters
    ----------
    inter : Interaction, ModelParams or Potential
    tol : float
        Classification tolerance applied to ``V'(0)``, ``V''(0)``,
        ``V'''(0)`` and the interior minimum value.
    minima : list of Minimum, optional
        Precomputed interior minima.

    Raises
    ------
    AmbiguousClassification
        When two labels fit at this tolerance, or for degenerate points
        (``V'(0) = V''(0) = 0`` with ``V'''(0) <= 0`` and the like).
    """
    pot = _potential(inter)
    e0 = pot(0.0)
    vp0, vpp0, vppp0 = e0.Vp, e0.Vpp, e0.Vppp
    if minima is None:
        minima = interior_minima(pot, t_max=t_max)
    best = min(minima, key=lambda m: m.V) if minima else None
    margins = {
        "Vp0": abs(vp0) - tol,
        "Vpp0": abs(vpp0) - tol,
        "Vppp0": vppp0 - tol,
        "Vt0": (abs(best.V) - tol) if best else None,
    }
    rep = PhaseReport(label=None, Vp0=vp0, Vpp0=vpp0, Vppp0=vppp0, minima=minima,
                      margins=margins, tol=tol)

    def with_min(label, m):
        rep.label = label
        rep.t0, rep.Vt0, rep.Vppt0 = m.t, m.V, m.Vpp
        return rep

    if best is not None and (best.V < -tol or (vp0 < -tol and best.V < 0)):
        rivals = [m for m in minima if m is not best and m.V - best.V <= tol]
        if rivals:
            raise AmbiguousClassification(
                f"two interior minima within tol: t={best.t:.6g}, t={rivals[0].t:.6g}", rep)
        return with_min(Phase.DENSE, best)
    if vp0 < -tol:
        raise AmbiguousClassification("V'(0) < 0 but no interior minimum below 0 was found", rep)
    # a shallow minimum with no barrier between it and t = 0 is the endpoint
    # well itself (V'(0) a rounding-level negative number), not a rival
    level = [m for m in minima if abs(m.V) <= tol and _barrier(pot, m) > tol]
    if vp0 > tol:
        if level:
            return with_min(Phase.FIRST_ORDER, min(level, key=lambda m: abs(m.V)))
        return _label(rep, Phase.DILUTE)
    # |V'(0)| <= tol
    if level:
        raise AmbiguousClassification(
            "V'(0) vanishes and an interior minimum sits at level 0: both boundary labels fit", rep)
    if vpp0 > tol:
        return _label(rep, Phase.SECOND_ORDER)
    if abs(vpp0) <= tol and vppp0 > tol:
        return _label(rep, Phase.TRICRITICAL)
    raise AmbiguousClassification(
        f"degenerate point: V'(0)={vp0:.3g}, V''(0)={vpp0:.3g}, V'''(0)={vppp0:.3g}", rep)


def _barrier(pot, m, n=65):
    """Height of the highest point of V between 0 and the minimum ``m``."""
    ts = np.linspace(0.0, m.t, n)
    return float(np.max(pot(ts).V)) - max(0.0, m.V)


def _label(rep, label):
    rep.label = label
    return rep

"""Interaction weights ``p(s) = exp(-u s^3 - g s^2 - nu s)`` and the generic hook."""

from dataclasses import dataclass
import json

import numpy as np


class InadmissibleParameters(ValueError):
    """The interaction does not decay fast enough to define the model."""


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the polynomial interaction.

    Attributes
    ----------
    u : float
        Cubic coefficient, ``u >= 0``.
    g : float
        Quadratic coefficient.
    nu : float
        Chemical potential (linear coefficient).
    """

    u: float = 1.0
    g: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        for name in ("u", "g", "nu"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise InadmissibleParameters(f"{name} must be finite, got {val!r}")
            object.__setattr__(self, name, float(val))

    @property
    def admissible(self):
        return _admissible(self.u, self.g, self.nu)

    def replace(self, **changes):
        data = {"u": self.u, "g": self.g, "nu": self.nu}
        data.update(changes)
        return ModelParams(**data)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else dict(text)
        unknown = set(data) - {"u", "g", "nu"}
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**data)


def _admissible(u, g, nu):
    if u > 0:
        return True
    if u < 0:
        return False
    if g > 0:
        return True
    return g == 0 and nu > -1


class Interaction:
    """Interaction ``p`` exposed through ``log p`` and its derivative.

    Parameters
    ----------
    log_p : callable
        Vectorised ``s -> log p(s)``; must vanish at 0.
    dlog_p : callable
        Vectorised ``s -> d/ds log p(s)``.
    decay : float
        Rate ``eps`` such that ``log p(s) <= -eps s + C`` for large ``s``.
    params : ModelParams, optional
        Set for polynomial interactions; enables exact moment derivatives.
    """

    def __init__(self, log_p, dlog_p, decay, params=None):
        if not decay > -1:
            raise InadmissibleParameters("the decay bound must exceed -1 for p(s)e^{-s} to be integrable")
        self._log_p = log_p
        self._dlog_p = dlog_p
        self.decay = float(decay)
        self.params = params

    def log_p(self, s):
        return self._log_p(np.asarray(s, dtype=float))

    def dlog_p(self, s):
        return self._dlog_p(np.asarray(s, dtype=float))

    @property
    def weight_rate(self):
        """Decay rate of ``p(s) e^{-s}``."""
        return 1.0 + self.decay

    def check_decay(self, s_max=200.0, n=400):
        """Sample ``log p`` and confirm the reported bound holds eventually."""
        if self.log_p(np.zeros(1))[0] != 0.0:
            return False
        # the bound need only hold eventually, so widen the window until the tail settles
        for _ in range(16):
            s = np.linspace(0.0, s_max, n)
            excess = self.log_p(s) + self.decay * s
            tail = excess[n // 2:]
            if np.all(np.diff(tail) <= 1e-9 * (1 + np.abs(tail[1:]))):
                return True
            s_max *= 2.0
        return False

    def __repr__(self):
        if self.params is not None:
            p = self.params
            return f"Interaction(u={p.u}, g={p.g}, nu={p.nu})"
        return f"Interaction(decay={self.decay})"


def make_polynomial_interaction(params):
    """Build ``log p(s) = -u s^3 - g s^2 - nu s`` after checking decay.

    Parameters
    ----------
    params : ModelParams or tuple
        ``(u, g, nu)`` or a :class:`ModelParams`.

    Raises
    ------
    InadmissibleParameters
        Unless ``u > 0``, or ``u == 0, g > 0``, or ``u == g == 0, nu > -1``.
    """
    if not isinstance(params, ModelParams):
        params = ModelParams(*params)
    u, g, nu = params.u, params.g, params.nu
    if not _admissible(u, g, nu):
        raise InadmissibleParameters(
            f"p(s) e^(-s) is not integrable for u={u}, g={g}, nu={nu}: "
            "need u > 0, or u = 0 and g > 0, or u = g = 0 and nu > -1"
        )
    if u > 0 or g > 0:
        decay = 1.0
    else:
        decay = nu

    def log_p(s):
        return -((u * s + g) * s + nu) * s

    def dlog_p(s):
        return -((3.0 * u * s + 2.0 * g) * s + nu)

    return Interaction(log_p, dlog_p, decay, params=params)


def polynomial(u=1.0, g=0.0, nu=0.0):
    """Shorthand for ``make_polynomial_interaction(ModelParams(u, g, nu))``."""
    return make_polynomial_interaction(ModelParams(u, g, nu))

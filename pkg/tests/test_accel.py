import json
import os
import subprocess
import sys

import numpy as np
import pytest

from tricrit import _accel
from tricrit.model import ModelParams
from tricrit.potential import Potential

SNIPPET = """
import json
from tricrit import _accel
from tricrit.model import ModelParams
from tricrit.potential import Potential
from tricrit.mc_walk import estimate_chi
pot = Potential(ModelParams(1.0, -2.7, 1.2))
e = pot(1.3)
chi = estimate_chi(ModelParams(1.0, 0.0, 1.0), 3, 2000, 5)
print(json.dumps({"backend": _accel.backend_name(), "V": e.V, "Vdotpp": e.Vdotpp,
                  "chi": chi.value}))
"""


def _child(flag):
    env = {**os.environ, "TRICRIT_NO_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", SNIPPET], capture_output=True, text=True,
                         check=True, env=env)
    return json.loads(out.stdout)


def test_env_flag_selects_numpy_and_results_agree():
    fast, slow = _child("0"), _child("1")
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    for k in ("V", "Vdotpp", "chi"):
        assert slow[k] == pytest.approx(fast[k], rel=1e-12, abs=1e-15)


def test_backend_context_restores():
    before = _accel.backend_name()
    with _accel.backend("numpy"):
        assert _accel.backend_name() == "numpy"
    assert _accel.backend_name() == before
    with pytest.raises(ValueError):
        with _accel.backend("cuda"):
            pass


def test_dense_scan_backends_agree():
    pot = Potential(ModelParams(1.0, -4.4, 4.21))
    ts = np.linspace(0.0, 40.0, 2001)
    with _accel.backend("numba"):
        a = pot(ts).V
    with _accel.backend("numpy"):
        b = pot(ts).V
    assert np.max(np.abs(a - b)) < 1e-13

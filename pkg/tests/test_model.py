import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tricrit.model import (InadmissibleParameters, Interaction, ModelParams,
                           make_polynomial_interaction)


def test_cubic_log_weight_at_one():
    inter = make_polynomial_interaction(ModelParams(1.0, 0.0, 0.0))
    assert inter.log_p(1.0) == -1.0


def test_log_weight_vanishes_at_origin_tricritical():
    inter = make_polynomial_interaction(ModelParams(1.0, -3.2103, 2.0772))
    assert inter.log_p(0.0) == 0.0


@pytest.mark.parametrize("params", [(0.0, 0.0, -2.0), (0.0, -1.0, 5.0), (-1.0, 5.0, 5.0),
                                    (0.0, 0.0, -1.0)])
def test_inadmissible(params):
    with pytest.raises(InadmissibleParameters):
        make_polynomial_interaction(ModelParams(*params))


def test_non_finite_rejected():
    with pytest.raises(InadmissibleParameters):
        ModelParams(1.0, math.nan, 0.0)


def test_from_json_rejects_unknown_keys():
    assert ModelParams.from_json('{"u": 1, "g": -2, "nu": 3}') == ModelParams(1, -2, 3)
    with pytest.raises(ValueError):
        ModelParams.from_json('{"u": 1, "lam": 2}')


def test_tuple_params_accepted():
    inter = make_polynomial_interaction((1.0, -2.0, 0.5))
    assert inter.params == ModelParams(1.0, -2.0, 0.5)


def test_generic_interaction_needs_decay():
    with pytest.raises(InadmissibleParameters):
        Interaction(lambda s: -2 * s, lambda s: -2 + 0 * s, decay=-1.0)


@given(u=st.floats(0.01, 5), g=st.floats(-6, 6), nu=st.floats(-3, 8),
       s=st.floats(0, 20))
def test_derivative_matches_difference(u, g, nu, s):
    inter = make_polynomial_interaction(ModelParams(u, g, nu))
    h = 1e-6 * max(1.0, s)
    fd = (inter.log_p(s + h) - inter.log_p(max(s - h, 0.0))) / (s + h - max(s - h, 0.0))
    scale = 1 + abs(inter.dlog_p(s)) + 3 * u * s * s
    assert abs(fd - inter.dlog_p(s)) < 1e-5 * scale


@given(u=st.floats(0.01, 5), g=st.floats(-6, 6), nu=st.floats(-3, 8))
def test_decay_bound_honoured(u, g, nu):
    inter = make_polynomial_interaction(ModelParams(u, g, nu))
    assert inter.log_p(0.0) == 0.0
    assert inter.check_decay()
    assert np.all(np.isfinite(inter.log_p(np.linspace(0, 50, 11))))

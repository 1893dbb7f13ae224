import pytest

from tricrit.model import ModelParams
from tricrit.phase import Phase, classify, interior_minima
from tricrit.potential import Potential


def test_free_walk_has_no_interior_minimum():
    assert interior_minima(ModelParams(0.0, 0.0, 1.0)) == []


def test_dense_first_order_side_minimum():
    mins = interior_minima(ModelParams(1.0, -4.4, 4.21))
    assert len(mins) == 1 and mins[0].V < 0


def test_dilute_second_order_side_minima_positive():
    assert all(m.V > 0 for m in interior_minima(ModelParams(1.0, -2.7, 1.5)))


@pytest.mark.parametrize("g,nu,label", [(-4.4, 4.21, Phase.DENSE), (-4.4, 4.26, Phase.DILUTE),
                                        (-2.7, 1.2, Phase.DENSE), (-2.7, 1.5, Phase.DILUTE),
                                        (-3.7, 2.786, Phase.DENSE)])
def test_reference_points(g, nu, label):
    assert classify(ModelParams(1.0, g, nu)).label is label


@pytest.mark.parametrize("g,nu", [(-4.4, 4.21), (-2.7, 1.2), (-3.7, 2.786)])
def test_dense_witness(g, nu):
    r = classify(ModelParams(1.0, g, nu))
    assert r.t0 > 0 and r.Vppt0 > 0 and r.Vt0 < 0
    assert abs(Potential(ModelParams(1.0, g, nu))(r.t0).Vp) < 1e-10


def test_dilute_witness():
    r = classify(ModelParams(1.0, -2.7, 1.5))
    assert r.Vp0 > r.tol
    assert r.to_dict()["label"] == "Dilute"


def test_tricritical_label(tc):
    assert classify(tc.params).label is Phase.TRICRITICAL


def test_second_order_label():
    from tricrit.curves import second_order_nu
    pt = second_order_nu(-2.7)
    assert classify(ModelParams(1.0, -2.7, pt.nu)).label is Phase.SECOND_ORDER

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threshold_lab.errors import ConditionsViolated, DiscontinuousAtZero, NoEigenvalue, NotW12
from threshold_lab.potential import ScalingFamily, square_well
from threshold_lab.quadrature import integrate
from threshold_lab.resonance import detect_resonance
from threshold_lab.threshold import (
    PointInteraction, point_interaction_eigenvalue, predict, predict_order2, predict_T2, predict_T3,
    predict_T4, u2_minus_theta2,
)

from conftest import box, cos_v, linear_v, shifted_well, t2_family, t2_potential, well_01

FAMILIES = [ScalingFamily.const(1.0), ScalingFamily.power(1.0, -0.25), ScalingFamily.power(1.0, 0.25)]


def test_point_interaction_examples():
    assert PointInteraction(1.0, -2.0).eigenvalue() == pytest.approx(-1.0)
    for kappa, beta in ((1.0, 2.0), (-1.0, -2.0)):
        with pytest.raises(NoEigenvalue):
            point_interaction_eigenvalue(PointInteraction(kappa, beta))


@pytest.mark.parametrize("F", FAMILIES, ids=["const", "infinite", "zero"])
def test_free_background_constant(zero, F):
    pred = predict_order2(zero, box(), F)
    assert pred.k == pytest.approx(-0.5, rel=1e-12)
    assert pred.predicted_e(1e-3) == pytest.approx(-0.25e-6, rel=1e-12)


def test_order2_constants():
    U = well_01()
    p = predict_order2(U, box(), ScalingFamily.const(1.0))
    assert (p.case, p.k) == ("T1i", pytest.approx(-3 / 8, rel=1e-10))
    p = predict_order2(U, box(), ScalingFamily.power(1.0, -0.25))
    assert (p.case, p.k) == ("T1ii", pytest.approx(-0.5, rel=1e-10))
    p = predict_order2(U, box(), ScalingFamily.power(1.0, 0.25))
    assert (p.case, p.k) == ("T1iii", pytest.approx(-0.5, rel=1e-10))


def test_order2_violation():
    with pytest.raises(ConditionsViolated) as info:
        predict_order2(well_01(), box(1.0), ScalingFamily.const(1.0))
    assert info.value.failed == ["int_V_alpha_u2_negative"]


def test_t2_worked_family():
    p = predict_T2(well_01(), t2_potential(), t2_family())
    assert p.k == pytest.approx(1 / 48, rel=1e-10)
    assert p.details["int_V_alpha_u2"] == pytest.approx(0.0, abs=1e-14)
    assert p.details["int_x_dV_alpha_u2"] == pytest.approx(-1 / 24, rel=1e-10)


def test_t2_integrals_by_scipy():
    from scipy.integrate import quad

    u = lambda x: math.cos(math.pi * x)
    V = lambda x: 2 * math.sin(math.pi * x) ** 2 - math.sin(2 * math.pi * x) ** 2
    dV = lambda x: 2 * math.pi * math.sin(2 * math.pi * x) - 2 * math.pi * math.sin(4 * math.pi * x)
    assert quad(lambda x: V(x) * u(x) ** 2, 0, 1, epsabs=1e-14)[0] == pytest.approx(0.0, abs=1e-13)
    assert quad(lambda x: x * dV(x) * u(x) ** 2, 0, 1)[0] == pytest.approx(-1 / 24, rel=1e-12)


def test_t2_violations():
    with pytest.raises(ConditionsViolated):
        predict_T2(well_01(), t2_potential(-1.0), t2_family())
    with pytest.raises(NotW12):
        predict_T2(well_01(), box(), t2_family())


def test_t3_shifted_well():
    F = ScalingFamily.power(1.0, -0.25)
    p = predict_T3(shifted_well(), linear_v(), F)
    assert p.k == pytest.approx(math.pi / 3, rel=1e-9)
    assert p.predicted_e(1e-4) == pytest.approx(-((1e-4 / 10) * math.pi / 3) ** 2, rel=1e-9)
    with pytest.raises(ConditionsViolated):
        predict_T3(shifted_well(), linear_v(-1.0), F)
    # an even half-bound state has u'(0) = 0, so k vanishes
    with pytest.raises(ConditionsViolated) as info:
        predict_T3(box(-4 * math.pi**2), linear_v(), F)
    assert "u0_du0_int_xV_negative" in info.value.failed
    assert info.value.prediction.k == pytest.approx(0.0, abs=1e-9)


def test_t4_shifted_well():
    F = ScalingFamily.power(1.0, 0.2)
    p = predict_T4(shifted_well(), cos_v(), F)
    assert p.k == pytest.approx(0.25, rel=1e-9)
    assert p.details["int_u2_minus_Theta2"] == pytest.approx(-0.5, rel=1e-9)
    assert p.predicted_e(1e-5) == pytest.approx(-(1e-5 * 0.1) ** 2 / 16, rel=1e-9)
    with pytest.raises(ConditionsViolated):
        predict_T4(shifted_well(), cos_v(-1.0), F)
    with pytest.raises(DiscontinuousAtZero):
        predict_T4(shifted_well(), square_well(-1.0, 0.0, 1.0), F)


def test_t4_alpha_rate_flag():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = predict_T4(shifted_well(), cos_v(), ScalingFamily.power(1.0, 1 / 3), strict=False)
    assert p.failed == ["alpha_rate"]


def test_u2_minus_theta2_by_scipy():
    from scipy.integrate import quad

    h = detect_resonance(shifted_well())
    J, _ = u2_minus_theta2(h)
    ref = quad(lambda x: math.cos(math.pi * (x + 0.25)) ** 2 - 1.0, -0.25, 0.75)[0]
    assert J == pytest.approx(ref, rel=1e-12)


def test_trivial_u_obstruction(zero):
    # u = 1 and theta = 1: T3 and T4 force k = 0, and for T2 the vanishing of
    # int V forces int x V' = -int V = 0 as well, so the conditions contradict
    with pytest.raises(ConditionsViolated) as info:
        predict_T2(zero, t2_potential(), t2_family())
    assert "int_V_alpha_u2_zero" in info.value.failed
    with pytest.raises(ConditionsViolated) as info:
        predict_T3(zero, linear_v(), ScalingFamily.power(1.0, -0.25))
    assert info.value.prediction.k == 0.0
    with pytest.raises(ConditionsViolated) as info:
        predict_T4(zero, cos_v(), ScalingFamily.power(1.0, 0.2))
    assert info.value.prediction.k == pytest.approx(0.0, abs=1e-15)


def test_table_family_flagged():
    F = ScalingFamily.from_dict({"kind": "table", "rows": [[1e-2, 0.5], [1e-3, 0.2], [1e-4, 0.1]]})
    with pytest.warns(UserWarning, match="tabulated"):
        p = predict_T4(shifted_well(), cos_v(), F, strict=False)
    assert "alpha_rate" in p.failed


def test_auto_dispatch():
    assert predict(well_01(), box(), ScalingFamily.const(1.0)).case == "T1i"
    assert predict(well_01(), t2_potential(), t2_family()).case == "T2"
    assert predict(shifted_well(), linear_v(), ScalingFamily.power(1.0, -0.25)).case == "T3"
    assert predict(shifted_well(), cos_v(), ScalingFamily.power(1.0, 0.2)).case == "T4"


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3), st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3))
def test_point_interaction_sign_rule(kappa, beta):
    PI = PointInteraction(kappa, beta)
    if kappa * beta < 0:
        assert PI.eigenvalue() < 0
    else:
        with pytest.raises(NoEigenvalue):
            PI.eigenvalue()

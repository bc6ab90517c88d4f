import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threshold_lab.potential import PiecewisePotential
from threshold_lab.prop import (
    ExponentialTail, FundamentalPair, OdeState, l2_norm, propagate, solve_inhomogeneous, transfer,
)
from threshold_lab.quadrature import integrate

from conftest import PI2, cos_v, shifted_well, t2_potential, well_01


def test_propagate_examples(zero):
    s = propagate(zero, -1.0, OdeState(0.0, 1.0, 1.0), 1.0)
    assert (s.y, s.dy) == pytest.approx((math.e, math.e), rel=1e-13)
    s = propagate(well_01(), 0.0, OdeState(0.0, 1.0, 0.0), 1.0)
    assert s.y == pytest.approx(-1.0, abs=1e-13)
    assert s.dy == pytest.approx(0.0, abs=1e-12)
    s = propagate(zero, 0.0, OdeState(0.0, 1.0, 0.0), 5.0)
    assert (s.y, s.dy) == (1.0, 0.0)


@pytest.mark.parametrize("E", [-2.0, -0.3, 0.0, 0.7, 5.0])
def test_transfer_matrix_is_unimodular(E):
    Q = t2_potential() + shifted_well() + cos_v()
    m11, m12, m21, m22 = transfer(Q, E, -1.0, 1.0)
    assert float(m11[0] * m22[0] - m12[0] * m21[0]) == pytest.approx(1.0, abs=1e-10)


def test_non_constant_piece_against_scipy():
    from scipy.integrate import solve_ivp

    Q = t2_potential() + cos_v()
    E = -0.4
    ref = solve_ivp(lambda x, y: [y[1], (Q(x) - E) * y[0]], (-1, 1), [1.0, 0.3],
                    rtol=1e-12, atol=1e-14, method="DOP853", max_step=0.01)
    s = propagate(Q, E, OdeState(-1.0, 1.0, 0.3), 1.0)
    assert s.y == pytest.approx(ref.y[0, -1], rel=1e-9)
    assert s.dy == pytest.approx(ref.y[1, -1], rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(-2.0, 0.0))
def test_gauge_shift(c, E):
    # adding a constant c to Q on a piece is the same as lowering E there by c
    Q = PiecewisePotential.constant(-1.0 + c, -0.5, 0.5, 1.0)
    R = PiecewisePotential.constant(-1.0, -0.5, 0.5, 1.0)
    a = transfer(Q, E, -0.5, 0.5)
    b = transfer(R, E - c, -0.5, 0.5)
    assert np.allclose(np.ravel(a), np.ravel(b), rtol=1e-12, atol=1e-12)


def test_wronskian():
    pair = FundamentalPair(shifted_well() + cos_v())
    x = np.linspace(-1, 1, 51)
    assert np.allclose(pair.wronskian(x), 1.0, atol=1e-11)


def test_inhomogeneous_examples(zero):
    v = solve_inhomogeneous(zero, lambda x: np.ones_like(x), OdeState(-1.0, 0.0, 0.0))
    x = np.linspace(-1, 1, 21)
    assert np.allclose(v(x), -((x + 1) ** 2) / 2, atol=1e-13)
    v = solve_inhomogeneous(zero, lambda x: np.zeros_like(x), OdeState(-1.0, 0.0, 2.5))
    assert np.allclose(v(x), 2.5 * (x + 1), atol=1e-13)


def test_inhomogeneous_ode_residual():
    U = well_01()
    f = lambda x: np.cos(3 * x) + x
    v = solve_inhomogeneous(U, f, OdeState(-1.0, 0.2, -0.1), breakpoints=(0.0, 1.0))
    x = np.linspace(0.1, 0.9, 9)
    h = 1e-4
    d2 = (v(x + h) - 2 * v(x) + v(x - h)) / h**2
    assert np.allclose(-d2 + U(x) * v(x), f(x), atol=1e-4)
    assert v.derivative(-1.0) == pytest.approx(-0.1, abs=1e-13)


def test_l2_norm_examples():
    assert l2_norm(lambda x: np.ones_like(x), 0.0, 1.0) == pytest.approx(1.0)
    assert l2_norm(ExponentialTail(1.0, 2.0, 0.0, "left")) == pytest.approx(0.5)
    assert l2_norm(lambda x: np.sin(math.pi * x), 0.0, 1.0) == pytest.approx(math.sqrt(0.5), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5.0, 5.0))
def test_l2_norm_translation_invariance(s):
    g = lambda x: np.exp(-x * x)
    a = l2_norm(g, -8.0, 8.0)
    b = l2_norm(lambda x: g(x - s), -8.0 + s, 8.0 + s)
    assert a == pytest.approx(b, rel=1e-10)


def test_integrate_against_scipy_quad():
    from scipy.integrate import quad

    f = lambda x: np.abs(np.sin(7 * x)) * np.exp(x)
    bps = tuple(k * math.pi / 7 for k in range(1, 7))
    ref, _ = quad(f, 0.0, 3.0, points=bps, epsabs=0, epsrel=1e-13, limit=200)
    assert integrate(f, 0.0, 3.0, bps) == pytest.approx(ref, rel=1e-12)

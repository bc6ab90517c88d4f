import math

import pytest

from threshold_lab.potential import Harmonic, PiecewisePotential, PotentialPiece, ScalingFamily, square_well

PI2 = math.pi**2


def well_01(b=1.0):
    """Resonant well -pi^2 on (0, 1): u = cos(pi x) inside, theta = -1."""
    return square_well(-PI2, 0.0, 1.0, b)


def shifted_well():
    """Resonant well -pi^2 on (-1/4, 3/4): u(0) = sqrt(2)/2, theta = -1."""
    return square_well(-PI2, -0.25, 0.75, 1.0)


def box(depth=-1.0):
    return square_well(depth, -0.5, 0.5)


def t2_potential(sign=1.0):
    """2 sin^2(pi x) - sin^2(2 pi x) = 1/2 - cos(2 pi x) + cos(4 pi x)/2 on [0, 1]."""
    piece = PotentialPiece(0.0, 1.0, (sign * 0.5,), (
        Harmonic(-sign, 2 * math.pi, 0.0, "cos"),
        Harmonic(sign * 0.5, 4 * math.pi, 0.0, "cos"),
    ))
    return PiecewisePotential((piece,), 1.0)


def linear_v(sign=1.0):
    return PiecewisePotential((PotentialPiece(-1.0, 1.0, (0.0, sign)),), 1.0)


def cos_v(sign=1.0):
    return PiecewisePotential((PotentialPiece(-1.0, 1.0, (), (Harmonic(sign, math.pi, 0.0, "cos"),)),), 1.0)


def t2_family():
    return ScalingFamily.const(1.0, epsilon=ScalingFamily.power(1.0, 0.25))


@pytest.fixture
def zero():
    return PiecewisePotential.zero(1.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: (int(k.split("-")[0]), k)):
            terminalreporter.write_line(RESULTS[key])

"""Zero-energy resonances and normalized half-bound states of -d^2/dx^2 + U."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import NoBracket, NoResonance
from .potential import PiecewisePotential
from .prop import FundamentalPair

DEFAULT_TOL = 1e-9


def shoot_zero_energy(U: PiecewisePotential, x0: float | None = None, x1: float | None = None):
    """Propagate -h'' + U h = 0 from (x0, 1, 0) to x1 (defaults: -b, b).

    Returns ``(h(x1), h'(x1), pair)`` where ``pair.u`` is the shot solution
    and ``pair.u1`` the companion solution with u1(x0) = 0, u1'(x0) = 1.
    """
    pair = FundamentalPair(U, x0, x1)
    end = pair.trajectory.end_state(0)
    return end.y, end.dy, pair


@dataclass(frozen=True)
class HalfBoundState:
    """Normalized half-bound state u: u = 1 left of -b, u = theta right of b."""

    b: float
    theta: float
    u_at_0: float
    du_at_0: float
    mismatch: float
    pair: FundamentalPair

    def u(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= -self.b, 1.0, np.where(x >= self.b, self.theta, 0.0))
        inside = (x > -self.b) & (x < self.b)
        if np.any(inside):
            out = np.array(out, dtype=float, copy=True)
            out[inside] = self.pair.u(x[inside])
        return out if out.ndim else float(out)

    def du(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        inside = (x > -self.b) & (x < self.b)
        if np.any(inside):
            out[inside] = self.pair.du(x[inside])
        return out if out.ndim else float(out)

    def Theta(self, x):
        """Step function 1 for x < 0, theta for x > 0 (1 at the origin)."""
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self.theta, 1.0)

    @property
    def breakpoints(self):
        return (-self.b,) + tuple(self.pair.breakpoints) + (self.b,)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "u0": self.u_at_0, "du0": self.du_at_0, "mismatch": self.mismatch}


def detect_resonance(U: PiecewisePotential, tol: float = DEFAULT_TOL) -> HalfBoundState:
    """Half-bound state of U, or NoResonance when |h'(b)| > tol * max(1, |h(b)|)."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    hb, dhb, pair = shoot_zero_energy(U)
    mismatch = abs(dhb)
    if mismatch > tol * max(1.0, abs(hb)):
        raise NoResonance(mismatch)
    if hb == 0.0:
        raise NoResonance(mismatch, "bounded solution vanishes at +infinity")
    b = U.b
    if -b < 0 < b:
        u0, du0 = pair.u(0.0), pair.du(0.0)
    else:
        u0, du0 = (1.0, 0.0) if b <= 0 else (hb, 0.0)
    return HalfBoundState(b=b, theta=hb, u_at_0=u0, du_at_0=du0, mismatch=mismatch, pair=pair)


def resonance_slope(U: PiecewisePotential, gamma: float) -> float:
    return shoot_zero_energy(U.times(gamma))[1]


def tune_to_resonance(U: PiecewisePotential, gamma_lo: float, gamma_hi: float, tol: float = 1e-12) -> float:
    """Coupling gamma* at which gamma * U has a zero-energy resonance.

    Brent iteration on gamma -> h'(b; gamma U) inside the given bracket.
    """
    f_lo = resonance_slope(U, gamma_lo)
    f_hi = resonance_slope(U, gamma_hi)
    if f_lo == 0.0:
        return gamma_lo
    if f_hi == 0.0:
        return gamma_hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoBracket(f"h'(b) has the same sign at gamma={gamma_lo} and gamma={gamma_hi}")
    return float(optimize.brentq(lambda g: resonance_slope(U, g), gamma_lo, gamma_hi, xtol=tol, rtol=1e-15))

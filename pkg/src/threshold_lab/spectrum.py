"""Negative eigenvalues of -d^2/dx^2 + Q by shooting against decaying tails.

For E = -omega^2 the solution decaying at -infinity is exp(omega x) to the
left of the support.  Shooting it from (-B, 1, omega) to B, the function
F(omega) = y'(B) + omega y(B) vanishes exactly when the solution also decays
at +infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .errors import NotFound, StepFailure
from .potential import PiecewisePotential, ScalingFamily, alpha_at, scaled_potential
from .prop import segment_transfer

OMEGA_MIN = 1e-12
MAX_GROWTH = 200.0  # bound on omega * length per transfer, keeps entries below e^200
GRID_POINTS = 256
ROOT_RTOL = 1e-12
BASELINE_OMEGA_MIN = 1e-6


@dataclass(frozen=True)
class ScaledProblem:
    """H_lambda = -d^2/dx^2 + U + lambda alpha V(alpha x), alpha = alpha_lambda."""

    U: PiecewisePotential
    V: PiecewisePotential
    F: ScalingFamily
    lam: float
    alpha: float = field(init=False)
    Vs: PiecewisePotential = field(init=False)
    Q: PiecewisePotential = field(init=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        alpha = alpha_at(self.F, self.lam)
        Vs = scaled_potential(self.V, alpha, self.lam)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "Vs", Vs)
        object.__setattr__(self, "Q", self.U + Vs)

    @property
    def B(self) -> float:
        return max(self.U.b, self.V.b / self.alpha)


@dataclass(frozen=True)
class EigenSolveResult:
    eigenvalues: tuple[float, ...]
    omegas: tuple[float, ...]
    bracket_count: int
    residuals: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "omegas": list(self.omegas),
            "bracket_count": self.bracket_count,
            "residuals": list(self.residuals),
        }


def _shoot(Q: PiecewisePotential, omega, B: float):
    """(y, y', log scale) at B of the solution equal to exp(omega x) left of -B.

    The state is renormalized after every transfer and long segments are
    split, so the growth e^{2 omega B} never overflows.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    E = -omega * omega
    y, dy = np.ones_like(omega), omega.copy()
    logscale = np.zeros_like(omega)
    chunk = MAX_GROWTH / max(1.0, float(np.max(omega)))
    for a, b, piece in Q.segments(-B, B):
        n = max(1, math.ceil((b - a) / chunk))
        edges = np.linspace(a, b, n + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            m11, m12, m21, m22 = segment_transfer(piece, E, float(lo), float(hi))
            y, dy = m11 * y + m12 * dy, m21 * y + m22 * dy
            size = np.maximum(np.abs(y), np.abs(dy))
            y, dy = y / size, dy / size
            logscale += np.log(size)
    return y, dy, logscale


def mismatch(Q: PiecewisePotential, omega, B: float | None = None, normalized: bool = False):
    """F(omega) = y'(B) + omega y(B); ``normalized`` divides by |y'(B)| + omega |y(B)|.

    The raw value may overflow to inf for wide supports; the normalized form
    keeps the sign and stays finite, which is what the scan needs.
    """
    B = Q.b if B is None else B
    scalar = np.ndim(omega) == 0
    y, dy, logscale = _shoot(Q, omega, B)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    F = dy + w * y
    if normalized:
        F = F / (np.abs(dy) + w * np.abs(y))
    else:
        with np.errstate(over="ignore"):
            F = F * np.exp(logscale)
    if np.any(np.isnan(F)):
        raise StepFailure(f"undefined mismatch for omega in [{w.min():g}, {w.max():g}]")
    return float(F[0]) if scalar else F


def omega_grid(omega_min: float, omega_max: float, points: int = GRID_POINTS) -> np.ndarray:
    geo = np.geomspace(omega_min, omega_max, points)
    lin = np.linspace(omega_min, omega_max, points)
    return np.unique(np.concatenate([geo, lin]))


def default_omega_max(Q: PiecewisePotential) -> float:
    return math.sqrt(max(0.0, -Q.lower_bound())) + 1.0


def _brackets(Q: PiecewisePotential, omega_min: float, omega_max: float, B: float, points: int):
    """Sign changes of the normalized mismatch on the scan grid, smallest omega first.

    Returns exact grid zeros and (grid, index) pairs locating each sign change.
    """
    grid = omega_grid(omega_min, omega_max, points)
    s = np.sign(mismatch(Q, grid, B, normalized=True))
    exact = [float(grid[i]) for i in range(grid.size) if s[i] == 0]
    changes = [i for i in range(grid.size - 1) if s[i] * s[i + 1] < 0]
    return exact, [(grid, i) for i in changes]


WIDEN_STEPS = 3


def _refine(Q: PiecewisePotential, bracket, B: float) -> tuple[float, float]:
    """brentq on one scan bracket.

    Batched and scalar shots take different adaptive steps, so within a few
    ulps of a root very close to zero they can disagree on the sign; the
    bracket is then widened over neighbouring grid cells.
    """
    grid, i = bracket

    def f(w):
        return mismatch(Q, w, B, normalized=True)

    for d in range(WIDEN_STEPS + 1):
        lo, hi = float(grid[max(i - d, 0)]), float(grid[min(i + 1 + d, grid.size - 1)])
        if f(lo) * f(hi) < 0:
            w = optimize.brentq(f, lo, hi, xtol=ROOT_RTOL * lo, rtol=ROOT_RTOL)
            return float(w), abs(f(w))
    raise StepFailure(f"sign change near omega={grid[i]:.3g} is below the shooting resolution")


def _result(found: list[tuple[float, float]], brackets: int) -> EigenSolveResult:
    found = sorted(found, reverse=True)  # largest omega first -> eigenvalues increasing
    return EigenSolveResult(
        eigenvalues=tuple(-w * w for w, _ in found),
        omegas=tuple(w for w, _ in found),
        bracket_count=brackets,
        residuals=tuple(r for _, r in found),
    )


def find_negative_eigenvalues(Q: PiecewisePotential, omega_max: float | None = None,
                              omega_min: float = OMEGA_MIN, B: float | None = None,
                              points: int = GRID_POINTS) -> EigenSolveResult:
    """All eigenvalues -omega^2 with omega in (omega_min, omega_max)."""
    B = Q.b if B is None else B
    omega_max = default_omega_max(Q) if omega_max is None else omega_max
    if Q.is_zero or omega_max <= omega_min:
        return EigenSolveResult((), (), 0, ())
    exact, pairs = _brackets(Q, omega_min, omega_max, B, points)
    found = [(w, 0.0) for w in exact] + [_refine(Q, br, B) for br in pairs]
    return _result(found, len(pairs))


@lru_cache(maxsize=64)
def bound_state_count(U: PiecewisePotential) -> int:
    """Number of negative eigenvalues of the unperturbed operator."""
    # a resonant U has F(omega) -> 0 as omega -> 0; genuine bound states of H_0
    # are O(1) away from the threshold, so the scan stops well short of it
    return len(find_negative_eigenvalues(U, omega_min=BASELINE_OMEGA_MIN).eigenvalues)


def threshold_eigenvalue(P: ScaledProblem, omega_min: float = OMEGA_MIN) -> float:
    """Negative eigenvalue of H_lambda closest to zero.

    Bound states of H_0 persist under the perturbation, so the threshold
    eigenvalue exists only when H_lambda has more of them than H_0.
    """
    Q, B = P.Q, P.B
    exact, pairs = ([], []) if Q.is_zero else _brackets(Q, omega_min, default_omega_max(Q), B, GRID_POINTS)
    count, base = len(exact) + len(pairs), bound_state_count(P.U)
    if count <= base:
        raise NotFound(
            f"no threshold eigenvalue at lambda={P.lam:g}: {count} negative eigenvalue(s), "
            f"{base} inherited from U (omega scanned down to {omega_min:g})"
        )
    # only the root nearest the threshold is needed
    candidates = [(w, 0.0) for w in exact[:1]] + ([_refine(Q, pairs[0], B)] if pairs else [])
    w = min(candidates)[0]
    return -w * w


def eigenfunction(Q: PiecewisePotential, omega: float, B: float | None = None):
    """Trajectory of the left-normalized solution at E = -omega^2 (for diagnostics)."""
    from .prop import Trajectory

    B = Q.b if B is None else B
    return Trajectory(Q, -omega * omega, -B, B, np.array([[1.0], [omega]]))

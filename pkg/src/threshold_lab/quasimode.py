"""Explicit quasimodes (-omega^2, psi) for the higher-order threshold regimes.

Each trial function has the same skeleton around junctions at +-B:

    psi = exp(omega (x + B))                      x < -B
    psi = u + sum_j c_j f_j                       |x| < B
    psi = a0 exp(-omega (x - B)) + a1 rho(x - B)  x > B

The interior corrections f_j solve -f'' + U f = g with Cauchy data at -B, so
psi is C^1 at -B by construction, and k_lambda, a0, a1 make it C^1 at B.
The residual r = (H_lambda + omega^2) psi is known in closed form in terms
of the corrections, so its norm is computed without differentiating psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConditionsViolated
from .potential import PiecewisePotential, ScalingFamily, alpha_at
from .prop import FundamentalPair, OdeState, solve_inhomogeneous
from .quadrature import integrate
from .resonance import HalfBoundState, detect_resonance

NORM_RTOL = 1e-10
JUNCTION_TOL = 1e-9


class GlueFunction:
    """rho(t) = t (1 - t)^2 on [0, 1], zero beyond: rho(0) = 0, rho'(0) = 1."""

    _coef = np.array([0.0, 1.0, -2.0, 1.0])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0) & (t <= 1), np.polynomial.polynomial.polyval(t, self._coef), 0.0)

    def derivative(self, t, order: int = 1):
        t = np.asarray(t, dtype=float)
        c = np.polynomial.polynomial.polyder(self._coef, order)
        return np.where((t >= 0) & (t <= 1), np.polynomial.polynomial.polyval(t, c), 0.0)

    def strip_residual_sq(self, omega: float) -> float:
        """int_0^1 (rho'' - omega^2 rho)^2 dt, exact (polynomial integrand)."""
        P = np.polynomial.polynomial
        g = P.polysub(P.polyder(self._coef, 2), omega**2 * self._coef)
        sq = P.polyint(P.polymul(g, g))
        return float(P.polyval(1.0, sq) - P.polyval(0.0, sq))

    def tail_cross(self, omega: float) -> tuple[float, float]:
        """(int_0^1 e^{-omega t} rho dt, int_0^1 rho^2 dt)."""
        t, w = np.polynomial.legendre.leggauss(30)
        t = 0.5 * (t + 1.0)
        w = 0.5 * w
        r = self(t)
        return float(np.sum(w * np.exp(-omega * t) * r)), float(np.sum(w * r * r))


RHO = GlueFunction()


@dataclass
class Quasimode:
    """Assembled trial function, its residual and the certificate radius."""

    case: str
    lam: float
    alpha: float
    omega: float
    k_lambda: float
    B: float
    theta: float
    a0: float
    a1: float
    interior: object
    dinterior: object
    interior_residual: object
    breakpoints: tuple = ()
    corrections: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        left, right = x < -self.B, x > self.B
        mid = ~(left | right)
        out[left] = np.exp(self.omega * (x[left] + self.B))
        t = x[right] - self.B
        out[right] = self.a0 * np.exp(-self.omega * t) + self.a1 * RHO(t)
        if np.any(mid):
            out[mid] = self.interior(x[mid])
        return out

    def residual_function(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        mid = np.abs(x) < self.B
        if np.any(mid):
            out[mid] = self.interior_residual(x[mid])
        strip = (x >= self.B) & (x <= self.B + 1.0)
        t = x[strip] - self.B
        out[strip] = -self.a1 * (RHO.derivative(t, 2) - self.omega**2 * RHO(t))
        return out

    @cached_property
    def junction_errors(self) -> dict:
        B, w = self.B, self.omega
        lv, ld = float(self.interior(np.array([-B]))[0]), float(self.dinterior(np.array([-B]))[0])
        rv, rd = float(self.interior(np.array([B]))[0]), float(self.dinterior(np.array([B]))[0])
        return {
            "psi_left": abs(lv - 1.0),
            "dpsi_left": abs(ld - w),
            "psi_right": abs(rv - self.a0),
            "dpsi_right": abs(rd - (-w * self.a0 + self.a1)),
        }

    @cached_property
    def norm(self) -> float:
        if not self.omega > 0:
            return math.nan
        w = self.omega
        inner = integrate(lambda x: self.interior(x) ** 2, -self.B, self.B, self.breakpoints, rtol=NORM_RTOL)
        cross, rho2 = RHO.tail_cross(w)
        right = self.a0**2 / (2 * w) + 2 * self.a0 * self.a1 * cross + self.a1**2 * rho2
        return math.sqrt(1.0 / (2 * w) + inner + right)

    @cached_property
    def interior_residual_norm(self) -> float:
        sq = integrate(lambda x: self.interior_residual(x) ** 2, -self.B, self.B, self.breakpoints, rtol=NORM_RTOL)
        return math.sqrt(max(sq, 0.0))

    @cached_property
    def glue_residual_norm(self) -> float:
        return abs(self.a1) * math.sqrt(RHO.strip_residual_sq(self.omega))

    @cached_property
    def residual(self) -> float:
        return math.hypot(self.interior_residual_norm, self.glue_residual_norm)

    @property
    def certificate_radius(self) -> float:
        """Distance within which an eigenvalue of H_lambda must lie from -omega^2."""
        return self.residual / self.norm

    @property
    def accuracy_ratio(self) -> float:
        return self.residual / (self.norm * self.omega**2)

    @property
    def energy(self) -> float:
        return -self.omega**2

    def certifies(self, e: float) -> bool:
        return abs(e + self.omega**2) <= self.certificate_radius

    def to_dict(self) -> dict:
        d = {
            "case": self.case,
            "lambda": self.lam,
            "alpha": self.alpha,
            "omega": self.omega,
            "k_lambda": self.k_lambda,
            "a0": self.a0,
            "a1": self.a1,
            "junction": self.B,
        }
        if self.omega > 0:
            d.update(norm=self.norm, residual=self.residual, accuracy_ratio=self.accuracy_ratio,
                     junction_errors=self.junction_errors)
        d["diagnostics"] = dict(self.diagnostics)
        d["warnings"] = list(self.warnings)
        return d


def residual_norm(qm: Quasimode) -> float:
    """L2 norm of (H_lambda + omega^2) psi."""
    return qm.residual


# builders ------------------------------------------------------------------------


def _setup(U: PiecewisePotential, h: HalfBoundState | None, B: float):
    h = detect_resonance(U) if h is None else h
    pair = FundamentalPair(U, -B, B)
    return h, pair


def _integral(f, a, b, bps) -> float:
    return float(integrate(f, a, b, bps, rtol=1e-12))


def _check_positive(qm: Quasimode) -> Quasimode:
    if not qm.k_lambda > 0:
        raise ConditionsViolated(["k_lambda_positive"], qm)
    bad = {n: e for n, e in qm.junction_errors.items() if e > JUNCTION_TOL * max(1.0, abs(qm.a0))}
    if bad:
        qm.warnings.append("junction mismatch: " + ", ".join(f"{n}={e:.2e}" for n, e in bad.items()))
    return qm


def build_quasimode_T2(U: PiecewisePotential, V: PiecewisePotential, alpha: float, eps: ScalingFamily | float,
                       lam: float, h: HalfBoundState | None = None) -> Quasimode:
    """alpha_lambda = alpha + eps_lambda; psi = u + lam v + lam eps w."""
    e = float(eps) if isinstance(eps, (int, float)) else alpha_at(eps, lam)
    if e == 0:
        raise ValueError("eps_lambda must be nonzero")
    al = alpha + e
    B = max(U.b, V.b / alpha, V.b / al)
    h, pair = _setup(U, h, B)
    u, th = pair.u, h.theta
    V0 = V.scaled(alpha, alpha)
    Vl = V.scaled(al, al)
    bps = tuple(sorted(set(V0.breakpoints) | set(Vl.breakpoints) | set(pair.breakpoints)))
    dV = lambda x: (Vl(x) - V0(x)) / e  # noqa: E731
    k = -_integral(lambda x: dV(x) * u(x) ** 2, -B, B, bps) / (th**2 + 1.0)
    v = solve_inhomogeneous(U, lambda x: -V0(x) * u(x), OdeState(-B, 0.0, 0.0), breakpoints=bps, pair=pair)
    w = solve_inhomogeneous(U, lambda x: -dV(x) * u(x), OdeState(-B, 0.0, k), breakpoints=bps, pair=pair)
    vB, wB = v(B), w(B)
    omega = lam * e * k
    a0 = th + lam * vB + lam * e * wB
    a1 = lam**2 * e * k * (vB + e * wB)

    def interior(x):
        return u(x) + lam * v(x) + lam * e * w(x)

    def dinterior(x):
        return pair.du(x) + lam * v.derivative(x) + lam * e * w.derivative(x)

    def r_in(x):
        Vx = Vl(x)
        return lam**2 * (Vx * v(x) + e * Vx * w(x) + e**2 * k**2 * interior(x))

    dvB, dwB = v.derivative(B), w.derivative(B)
    qm = Quasimode("T2", lam, al, omega, k, B, th, a0, a1, interior, dinterior, r_in, bps,
                   corrections={"v": (lam, v), "w": (lam * e, w)},
                   diagnostics={"eps": e, "v_at_B": vB, "dv_at_B": dvB, "w_at_B": wB,
                                "dw_at_B_plus_theta_k": dwB + th * k})
    if abs(dwB + th * k) > 1e-8 * max(1.0, abs(k)):
        qm.warnings.append(f"w'(B) differs from -theta*k by {dwB + th * k:.2e}")
    return _check_positive(qm)


def build_quasimode_T3(U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily, lam: float,
                       h: HalfBoundState | None = None) -> Quasimode:
    """alpha_lambda -> infinity; psi = u + (lam/alpha) v + (lam/alpha)^2 w."""
    al = alpha_at(F, lam)
    B = max(U.b, V.b / al)
    h, pair = _setup(U, h, B)
    u, th = pair.u, h.theta
    Vl = V.scaled(al, al)
    bps = tuple(sorted(set(Vl.breakpoints) | set(pair.breakpoints)))
    k = -al * _integral(lambda x: Vl(x) * u(x) ** 2, -B, B, bps) / (th**2 + 1.0)
    v = solve_inhomogeneous(U, lambda x: -al * Vl(x) * u(x), OdeState(-B, 0.0, k), breakpoints=bps, pair=pair)
    w = solve_inhomogeneous(U, lambda x: -al * Vl(x) * v(x), OdeState(-B, 0.0, 0.0), breakpoints=bps, pair=pair)
    s = lam / al
    vB, wB, dwB = v(B), w(B), w.derivative(B)
    omega = s * k
    a0 = th + s * vB + s**2 * wB
    a1 = s**2 * k * (vB + dwB / k + s * wB) if k != 0 else 0.0

    def interior(x):
        return u(x) + s * v(x) + s**2 * w(x)

    def dinterior(x):
        return pair.du(x) + s * v.derivative(x) + s**2 * w.derivative(x)

    def r_in(x):
        # Vl already carries one factor alpha: lam^3 alpha^-2 Vl w = lam^3 alpha^-1 V(alpha x) w
        return (lam**3 / al**2) * Vl(x) * w(x) + omega**2 * interior(x)

    dvB = v.derivative(B)
    qm = Quasimode("T3", lam, al, omega, k, B, th, a0, a1, interior, dinterior, r_in, bps,
                   corrections={"v": (s, v), "w": (s**2, w)},
                   diagnostics={"v_at_B": vB, "dv_at_B_plus_theta_k": dvB + th * k, "w_at_B": wB,
                                "v_c1_over_alpha": v.c1_norm() / al, "w_c1_over_alpha2": w.c1_norm() / al**2})
    return _check_positive(qm)


def build_quasimode_T4(U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily, lam: float,
                       h: HalfBoundState | None = None) -> Quasimode:
    """alpha_lambda -> 0; psi = u + lam alpha v, junctions at +-B = +-b/alpha."""
    al = alpha_at(F, lam)
    B = max(U.b, V.b / al)
    h, pair = _setup(U, h, B)
    u, th = pair.u, h.theta
    Va = V.scaled(1.0, al)
    bps = tuple(sorted(set(Va.breakpoints) | set(pair.breakpoints)))
    k = -_integral(lambda x: Va(x) * u(x) ** 2, -B, B, bps) / (th**2 + 1.0)
    v = solve_inhomogeneous(U, lambda x: -Va(x) * u(x), OdeState(-B, 0.0, k), breakpoints=bps, pair=pair)
    s = lam * al
    vB = v(B)
    omega = s * k
    a0 = th + s * vB
    a1 = s**2 * k * vB

    def interior(x):
        return u(x) + s * v(x)

    def dinterior(x):
        return pair.du(x) + s * v.derivative(x)

    def r_in(x):
        return s**2 * Va(x) * v(x) + omega**2 * interior(x)

    qm = Quasimode("T4", lam, al, omega, k, B, th, a0, a1, interior, dinterior, r_in, bps,
                   corrections={"v": (s, v)},
                   diagnostics={"v_at_B": vB, "dv_at_B_plus_theta_k": v.derivative(B) + th * k,
                                "v_sup_times_alpha2": v.sup_norm() * al**2})
    return _check_positive(qm)


def build_quasimode(case: str, U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily, lam: float,
                    h: HalfBoundState | None = None) -> Quasimode:
    case = case.upper()
    if case == "T2":
        if F.kind != "const" or F.epsilon is None:
            raise ValueError("T2 quasimodes need a constant family with an epsilon offset")
        return build_quasimode_T2(U, V, F.alpha, F.epsilon, lam, h)
    if case == "T3":
        return build_quasimode_T3(U, V, F, lam, h)
    if case == "T4":
        return build_quasimode_T4(U, V, F, lam, h)
    raise ValueError(f"no quasimode construction for case {case!r}")

"""Closed-form threshold constants, their applicability conditions, and the
point-interaction eigenvalue that underlies the order-two results.

Every prediction is ``e_lambda = -(rate(lambda) * k)**2`` with a theorem-specific
rate scale: lambda, lambda*|eps_lambda|, lambda/alpha_lambda or lambda*alpha_lambda.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionsViolated, DiscontinuousAtZero, NoEigenvalue
from .potential import PiecewisePotential, ScalingFamily, alpha_at
from .quadrature import integrate
from .resonance import HalfBoundState, detect_resonance

EQ_TOL = 1e-9
QUAD_RTOL = 1e-12
CASES = ("T1i", "T1ii", "T1iii", "T2", "T3", "T4")


# point interaction -----------------------------------------------------------------


@dataclass(frozen=True)
class PointInteraction:
    """-d^2/dx^2 with (phi, phi')(+0) = [[kappa, 0], [beta, 1/kappa]] (phi, phi')(-0)."""

    kappa: float
    beta: float

    def __post_init__(self):
        if self.kappa == 0:
            raise ValueError("kappa must be nonzero")

    @property
    def omega(self) -> float:
        return -self.kappa * self.beta / (self.kappa**2 + 1.0)

    def eigenvalue(self) -> float:
        if not self.kappa * self.beta < 0:
            raise NoEigenvalue(f"kappa*beta = {self.kappa * self.beta:g} is not negative")
        return -self.omega**2

    def eigenfunction(self, x):
        """exp(omega x) for x < 0, kappa exp(-omega x) for x > 0."""
        w = self.omega
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, np.exp(w * np.minimum(x, 0.0)), self.kappa * np.exp(-w * np.maximum(x, 0.0)))

    def coupling_defect(self) -> tuple[float, float]:
        """Residuals of both coupling conditions for the eigenfunction above."""
        w = self.omega
        left, dleft = 1.0, w
        right, dright = self.kappa, -self.kappa * w
        return right - self.kappa * left, dright - (self.beta * left + dleft / self.kappa)


def point_interaction_eigenvalue(PI: PointInteraction) -> float:
    return PI.eigenvalue()


# predictions -----------------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    value: float
    satisfied: bool
    note: str = ""

    def to_dict(self) -> dict:
        d = {"value": self.value, "satisfied": self.satisfied}
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class ThresholdPrediction:
    case: str
    k: float
    scaling: ScalingFamily
    conditions: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.satisfied for c in self.conditions.values())

    @property
    def failed(self) -> list[str]:
        return [name for name, c in self.conditions.items() if not c.satisfied]

    @property
    def rate_description(self) -> str:
        return {"T2": "lambda*|eps|", "T3": "lambda/alpha", "T4": "lambda*alpha"}.get(self.case, "lambda")

    def rate(self, lam: float) -> float:
        if self.case == "T2":
            return lam * abs(self.scaling.eps(lam))
        if self.case == "T3":
            return lam / alpha_at(self.scaling, lam)
        if self.case == "T4":
            return lam * alpha_at(self.scaling, lam)
        return lam

    def omega(self, lam: float) -> float:
        return self.rate(lam) * abs(self.k)

    def predicted_e(self, lam: float) -> float:
        return -self.omega(lam) ** 2

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "k": self.k,
            "rate": self.rate_description,
            "conditions": {n: c.to_dict() for n, c in self.conditions.items()},
            "warnings": list(self.warnings),
            "details": dict(self.details),
        }


def _strict_negative(value: float, scale: float) -> bool:
    return value < -EQ_TOL * scale


def _near_zero(value: float, scale: float) -> bool:
    return abs(value) <= EQ_TOL * max(scale, 1e-300)


def _integral_with_l1(f, a: float, b: float, breakpoints) -> tuple[float, float]:
    """(integral of f, integral of |f|) over [a, b]."""
    if b <= a:
        return 0.0, 0.0
    vals = integrate(lambda x: np.stack([f(x), np.abs(f(x))]), a, b, breakpoints, rtol=QUAD_RTOL)
    return float(vals[0]), float(vals[1])


def _weighted_u2(V: PiecewisePotential, alpha: float, h: HalfBoundState, weight=None) -> tuple[float, float]:
    """int V(alpha x) u(x)^2 [weight(x)] dx together with its L1 scale."""
    Vs = V.scaled(1.0, alpha)
    bps = tuple(Vs.breakpoints) + h.breakpoints
    lo = min((p.left for p in Vs.pieces), default=0.0)
    hi = max((p.right for p in Vs.pieces), default=0.0)

    def f(x):
        out = Vs(x) * h.u(x) ** 2
        return out if weight is None else out * weight(x)

    return _integral_with_l1(f, lo, hi, bps)


def _rate_condition(F: ScalingFamily, case: str, warn: list) -> Condition:
    """Symbolic check of the technical rate assumption on power exponents."""
    if case == "T2":
        fam = F.epsilon
        if fam is None:
            return Condition(math.nan, False, "no epsilon family supplied")
        if fam.kind != "power":
            warn.append("epsilon family is tabulated; the rate assumption cannot be certified")
            return Condition(math.nan, False, "table family")
        # lambda^(-1/3) eps -> infinity  <=>  p < 1/3
        return Condition(fam.p, fam.p < 1.0 / 3.0, "eps exponent must be < 1/3")
    if F.kind == "table":
        warn.append("scaling family is tabulated; the rate assumption cannot be certified")
        return Condition(math.nan, False, "table family")
    p = F.exponent
    if case == "T3":
        # alpha = o(lambda^(-1/3))  <=>  p > -1/3
        return Condition(p, p > -1.0 / 3.0, "alpha exponent must be > -1/3")
    # lambda^(1/4) / alpha -> 0  <=>  p < 1/4
    return Condition(p, p < 0.25, "alpha exponent must be < 1/4")


def _finish(pred: ThresholdPrediction, strict: bool) -> ThresholdPrediction:
    for w in pred.warnings:
        _warnings.warn(w, stacklevel=3)
    if strict and not pred.ok:
        raise ConditionsViolated(pred.failed, pred)
    return pred


def _theta_factor(h: HalfBoundState) -> float:
    return h.theta**2 + 1.0


def predict_order2(U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily,
                   h: HalfBoundState | None = None, strict: bool = True) -> ThresholdPrediction:
    """Order-two threshold constant; the case follows the limit of alpha_lambda."""
    h = detect_resonance(U) if h is None else h
    tf = _theta_factor(h)
    cls = F.limit_class
    conds: dict[str, Condition] = {}
    details: dict = {"theta": h.theta, "u0": h.u_at_0}
    if cls == "finite-positive":
        alpha = F.limit
        I, L1 = _weighted_u2(V, alpha, h)
        k = alpha * I / tf
        conds["int_V_alpha_u2_negative"] = Condition(I, _strict_negative(I, L1))
        case = "T1i"
        details.update(alpha=alpha, int_V_alpha_u2=I)
    elif cls == "infinite":
        I = V.moment(0)
        L1 = V.abs_moment(0)
        k = h.u_at_0**2 * I / tf
        umax = max(1.0, abs(h.theta))
        conds["u0_nonzero"] = Condition(h.u_at_0, abs(h.u_at_0) > EQ_TOL * umax)
        conds["int_V_negative"] = Condition(I, _strict_negative(I, L1))
        case = "T1ii"
        details.update(int_V=I)
    else:
        neg = V.moment(0, "negative-half")
        pos = V.moment(0, "positive-half")
        I = neg + h.theta**2 * pos
        L1 = V.abs_moment(0) * max(1.0, h.theta**2)
        k = I / tf
        conds["half_line_sum_negative"] = Condition(I, _strict_negative(I, L1))
        case = "T1iii"
        details.update(int_V_negative_half=neg, int_V_positive_half=pos)
    return _finish(ThresholdPrediction(case, k, F, conds, (), details), strict)


def predict_T2(U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily,
               h: HalfBoundState | None = None, strict: bool = True) -> ThresholdPrediction:
    """alpha_lambda = alpha + eps_lambda -> alpha with int V(alpha x) u^2 = 0."""
    h = detect_resonance(U) if h is None else h
    dV = V.derivative()  # raises NotW12
    warn: list[str] = []
    conds: dict[str, Condition] = {}
    if F.kind != "const":
        conds["alpha_constant"] = Condition(math.nan, False, "T2 needs a constant family with an epsilon offset")
        alpha = F.limit if F.limit_class == "finite-positive" else 1.0
    else:
        alpha = F.alpha
    I1, L1 = _weighted_u2(V, alpha, h)
    I2, L2 = _weighted_u2(dV, alpha, h, weight=lambda x: x)
    k = -alpha * I2 / _theta_factor(h)
    conds["int_V_alpha_u2_zero"] = Condition(I1, _near_zero(I1, L1))
    conds["int_x_dV_alpha_u2_negative"] = Condition(I2, _strict_negative(I2, L2))
    conds["eps_rate"] = _rate_condition(F, "T2", warn)
    details = {"alpha": alpha, "int_V_alpha_u2": I1, "int_x_dV_alpha_u2": I2, "theta": h.theta}
    return _finish(ThresholdPrediction("T2", k, F, conds, tuple(warn), details), strict)


def predict_T3(U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily,
               h: HalfBoundState | None = None, strict: bool = True) -> ThresholdPrediction:
    """alpha_lambda -> infinity with int V = 0."""
    h = detect_resonance(U) if h is None else h
    warn: list[str] = []
    conds: dict[str, Condition] = {}
    if F.limit_class != "infinite":
        conds["alpha_to_infinity"] = Condition(math.nan, False, f"limit class is {F.limit_class}")
    I0, L0 = V.moment(0), V.abs_moment(0)
    I1, L1 = V.moment(1), V.abs_moment(1)
    u0, du0 = h.u_at_0, h.du_at_0
    k = -2.0 * u0 * du0 * I1 / _theta_factor(h)
    xs = np.linspace(-h.b, h.b, 2001)
    du_max = float(np.max(np.abs(h.du(xs))))
    prod = u0 * du0 * I1
    conds["int_V_zero"] = Condition(I0, _near_zero(I0, L0))
    conds["u0_du0_int_xV_negative"] = Condition(prod, _strict_negative(prod, abs(u0) * du_max * L1))
    conds["alpha_rate"] = _rate_condition(F, "T3", warn)
    details = {"u0": u0, "du0": du0, "int_V": I0, "int_xV": I1, "theta": h.theta}
    return _finish(ThresholdPrediction("T3", k, F, conds, tuple(warn), details), strict)


def theta_step(h: HalfBoundState):
    """Theta(x): 1 for x <= 0, theta for x > 0."""
    return h.Theta


def u2_minus_theta2(h: HalfBoundState) -> tuple[float, float]:
    """int (u^2 - Theta^2) dx over the support of the difference, with L1 scale."""
    bps = h.breakpoints + (0.0,)
    return _integral_with_l1(lambda x: h.u(x) ** 2 - h.Theta(x) ** 2, -h.b, h.b, bps)


def predict_T4(U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily,
               h: HalfBoundState | None = None, strict: bool = True) -> ThresholdPrediction:
    """alpha_lambda -> 0 with int_- V + theta^2 int_+ V = 0 and V continuous at 0."""
    left, right = V.one_sided(0.0)
    scale = max(1.0, max((abs(p.lower_bound()) for p in V.pieces), default=0.0))
    if abs(left - right) > 1e-12 * scale:
        raise DiscontinuousAtZero(f"V jumps from {left:g} to {right:g} at the origin")
    h = detect_resonance(U) if h is None else h
    warn: list[str] = []
    conds: dict[str, Condition] = {}
    if F.limit_class != "zero":
        conds["alpha_to_zero"] = Condition(math.nan, False, f"limit class is {F.limit_class}")
    V0 = left
    J, LJ = u2_minus_theta2(h)
    neg = V.moment(0, "negative-half")
    pos = V.moment(0, "positive-half")
    bal = neg + h.theta**2 * pos
    k = -V0 * J / _theta_factor(h)
    conds["half_line_sum_zero"] = Condition(bal, _near_zero(bal, V.abs_moment(0) * max(1.0, h.theta**2)))
    conds["V0_int_u2_minus_Theta2_negative"] = Condition(V0 * J, _strict_negative(V0 * J, abs(V0) * LJ))
    conds["alpha_rate"] = _rate_condition(F, "T4", warn)
    details = {"V0": V0, "int_u2_minus_Theta2": J, "half_line_sum": bal, "theta": h.theta}
    return _finish(ThresholdPrediction("T4", k, F, conds, tuple(warn), details), strict)


_HIGHER = {"finite-positive": predict_T2, "infinite": predict_T3, "zero": predict_T4}
_BY_NAME = {"t1": predict_order2, "t2": predict_T2, "t3": predict_T3, "t4": predict_T4}


def predict(U: PiecewisePotential, V: PiecewisePotential, F: ScalingFamily, case: str = "auto",
            h: HalfBoundState | None = None, strict: bool = True) -> ThresholdPrediction:
    """Dispatch on ``case``; ``auto`` tries the order-two result first and falls
    back to the higher-order theorem of the same limit class when the order-two
    integral vanishes (or a T2 epsilon family is supplied)."""
    h = detect_resonance(U) if h is None else h
    case = case.lower()
    if case != "auto":
        try:
            fn = _BY_NAME[case]
        except KeyError:
            raise ValueError(f"unknown case {case!r}") from None
        return fn(U, V, F, h, strict=strict)
    if F.kind == "const" and F.epsilon is not None:
        return predict_T2(U, V, F, h, strict=strict)
    first = predict_order2(U, V, F, h, strict=False)
    if first.ok:
        return first
    value = next(iter(c.value for n, c in first.conditions.items() if n != "u0_nonzero"))
    if abs(value) <= EQ_TOL * max(1.0, V.abs_moment(0)):
        return _HIGHER[F.limit_class](U, V, F, h, strict=strict)
    return _finish(first, strict)

"""Compactly supported potentials built from polynomial and harmonic pieces.

A potential is a finite list of non-overlapping pieces; on each piece the value
is ``sum_i c_i x**i + sum_j A_j sin|cos(w_j x + phi_j)`` and it vanishes
elsewhere.  Every operation here (evaluation, differentiation, rescaling,
moments) is exact in that representation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

from .errors import ConfigError, NotW12, OutOfTable

W12_TOL = 1e-12


@dataclass(frozen=True)
class Harmonic:
    A: float
    w: float
    phi: float = 0.0
    kind: str = "sin"

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"harmonic kind must be 'sin' or 'cos', got {self.kind!r}")

    def __call__(self, x):
        arg = self.w * np.asarray(x, dtype=float) + self.phi
        return self.A * (np.sin(arg) if self.kind == "sin" else np.cos(arg))

    def derivative(self) -> Harmonic:
        if self.kind == "sin":
            return Harmonic(self.A * self.w, self.w, self.phi, "cos")
        return Harmonic(-self.A * self.w, self.w, self.phi, "sin")

    @property
    def is_constant(self) -> bool:
        return self.w == 0.0 or self.A == 0.0

    def moment(self, n: int, a: float, b: float) -> float:
        """Closed-form integral of x**n times this harmonic over [a, b]."""
        if self.A == 0.0:
            return 0.0
        if self.w == 0.0:
            return float(self(0.0)) * (b ** (n + 1) - a ** (n + 1)) / (n + 1)
        if abs(self.w) * max(abs(a), abs(b)) < 1.0:
            # the alternating antiderivative cancels badly for small w*x
            m = n + 24
            t, wt = np.polynomial.legendre.leggauss(m)
            x = 0.5 * (b - a) * t + 0.5 * (b + a)
            return float(0.5 * (b - a) * np.sum(wt * x**n * self(x)))

        # antiderivative of x^n e^{i(wx+phi)}: e^{i(wx+phi)} sum_k (-1)^k n!/(n-k)! x^{n-k} / (iw)^{k+1}
        def anti(x):
            s = 0j
            fall = 1.0
            for k in range(n + 1):
                s += (-1) ** k * fall * x ** (n - k) / (1j * self.w) ** (k + 1)
                fall *= n - k
            return np.exp(1j * (self.w * x + self.phi)) * s

        val = anti(b) - anti(a)
        return float(self.A * (val.imag if self.kind == "sin" else val.real))

    def to_dict(self) -> dict:
        return {"A": self.A, "w": self.w, "phi": self.phi, "kind": self.kind}


@dataclass(frozen=True)
class PotentialPiece:
    """One analytic piece on ``[left, right]`` (JSON keys ``from``/``to``)."""

    left: float
    right: float
    poly: tuple[float, ...] = ()
    harmonics: tuple[Harmonic, ...] = ()

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError(f"piece needs from < to, got [{self.left}, {self.right}]")
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))
        object.__setattr__(self, "harmonics", tuple(self.harmonics))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = npoly.polyval(x, self.poly) if self.poly else np.zeros_like(x)
        for h in self.harmonics:
            out = out + h(x)
        return out

    @cached_property
    def is_constant(self) -> bool:
        trimmed = npoly.polytrim(np.asarray(self.poly or (0.0,)), 0.0)
        return len(trimmed) <= 1 and all(h.is_constant for h in self.harmonics)

    def derivative(self) -> PotentialPiece:
        dpoly = tuple(npoly.polyder(self.poly)) if len(self.poly) > 1 else ()
        harms = tuple(h.derivative() for h in self.harmonics if not h.is_constant)
        return PotentialPiece(self.left, self.right, dpoly, harms)

    def scaled(self, amplitude: float, alpha: float) -> PotentialPiece:
        """x -> amplitude * piece(alpha * x)."""
        poly = tuple(amplitude * c * alpha**i for i, c in enumerate(self.poly))
        harms = tuple(Harmonic(amplitude * h.A, h.w * alpha, h.phi, h.kind) for h in self.harmonics)
        return PotentialPiece(self.left / alpha, self.right / alpha, poly, harms)

    def shifted(self, s: float) -> PotentialPiece:
        """x -> piece(x - s)."""
        poly = self.poly
        if len(poly) > 1:
            # re-expand sum c_i (x - s)^i in powers of x
            acc = np.zeros(1)
            for c in reversed(poly):
                acc = npoly.polyadd(npoly.polymul(acc, [-s, 1.0]), [c])
            poly = tuple(acc)
        harms = tuple(Harmonic(h.A, h.w, h.phi - h.w * s, h.kind) for h in self.harmonics)
        return PotentialPiece(self.left + s, self.right + s, poly, harms)

    def restricted(self, left: float, right: float) -> PotentialPiece:
        return replace(self, left=left, right=right)

    def moment(self, n: int, a: float | None = None, b: float | None = None) -> float:
        a = self.left if a is None else max(a, self.left)
        b = self.right if b is None else min(b, self.right)
        if b <= a:
            return 0.0
        total = 0.0
        for i, c in enumerate(self.poly):
            k = n + i + 1
            total += c * (b**k - a**k) / k
        for h in self.harmonics:
            total += h.moment(n, a, b)
        return total

    def lower_bound(self) -> float:
        """Rigorous lower bound of the piece on its interval."""
        xs = [self.left, self.right]
        if len(self.poly) > 2:
            for r in npoly.polyroots(npoly.polyder(self.poly)):
                if abs(r.imag) < 1e-12 and self.left < r.real < self.right:
                    xs.append(r.real)
        poly_min = float(np.min(npoly.polyval(np.array(xs), self.poly))) if self.poly else 0.0
        harm = sum(float(h(0.0)) if h.w == 0.0 else -abs(h.A) for h in self.harmonics)
        return poly_min + harm

    def to_dict(self) -> dict:
        return {
            "from": self.left,
            "to": self.right,
            "poly": list(self.poly),
            "harmonics": [h.to_dict() for h in self.harmonics],
        }


def _merge_pieces(a: PotentialPiece, b: PotentialPiece, left: float, right: float) -> PotentialPiece:
    poly = tuple(npoly.polyadd(a.poly or (0.0,), b.poly or (0.0,)))
    return PotentialPiece(left, right, poly, a.harmonics + b.harmonics)


@dataclass(frozen=True)
class PiecewisePotential:
    """Sum of pieces, zero outside them; support contained in [-b, b]."""

    pieces: tuple[PotentialPiece, ...]
    b: float

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda p: p.left))
        object.__setattr__(self, "pieces", pieces)
        if not self.b > 0:
            raise ValueError(f"support half-width must be positive, got {self.b}")
        for p in pieces:
            if p.left < -self.b or p.right > self.b:
                raise ValueError(f"piece [{p.left}, {p.right}] not inside [-{self.b}, {self.b}]")
        for p, q in zip(pieces, pieces[1:]):
            if q.left < p.right:
                raise ValueError(f"pieces overlap: [{p.left}, {p.right}] and [{q.left}, {q.right}]")

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, b: float = 1.0) -> PiecewisePotential:
        return cls((), b)

    @classmethod
    def constant(cls, value: float, left: float, right: float, b: float | None = None) -> PiecewisePotential:
        b = max(abs(left), abs(right)) if b is None else b
        return cls((PotentialPiece(left, right, (value,)),), b)

    # evaluation -------------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        done = np.zeros(x.shape, dtype=bool)
        for p in self.pieces:
            mask = (x >= p.left) & (x <= p.right) & ~done
            if np.any(mask):
                out[mask] = p(x[mask])
                done |= mask
        return out if out.ndim else float(out)

    def one_sided(self, x: float) -> tuple[float, float]:
        """Left and right limits of the potential at x."""
        left = right = 0.0
        for p in self.pieces:
            if p.left < x <= p.right:
                left = float(p(x))
            if p.left <= x < p.right:
                right = float(p(x))
        return left, right

    @property
    def breakpoints(self) -> tuple[float, ...]:
        pts = set()
        for p in self.pieces:
            pts.update((p.left, p.right))
        return tuple(sorted(pts))

    @property
    def is_zero(self) -> bool:
        return all(p.is_constant and float(p(p.left)) == 0.0 for p in self.pieces)

    def segments(self, lo: float, hi: float) -> list[tuple[float, float, PotentialPiece | None]]:
        """Cover [lo, hi] by consecutive intervals each carrying one analytic expression."""
        out = []
        x = lo
        for p in self.pieces:
            if p.right <= x or p.left >= hi:
                continue
            if p.left > x:
                out.append((x, p.left, None))
                x = p.left
            right = min(p.right, hi)
            out.append((x, right, p))
            x = right
        if x < hi:
            out.append((x, hi, None))
        return out

    def lower_bound(self) -> float:
        return min([0.0] + [p.lower_bound() for p in self.pieces])

    # algebra ------------------------------------------------------------------
    def __add__(self, other: PiecewisePotential) -> PiecewisePotential:
        if not isinstance(other, PiecewisePotential):
            return NotImplemented
        b = max(self.b, other.b)
        cuts = sorted(set(self.breakpoints) | set(other.breakpoints))
        pieces = []
        for lo, hi in zip(cuts, cuts[1:]):
            mid = 0.5 * (lo + hi)
            a = next((p for p in self.pieces if p.left <= mid <= p.right), None)
            c = next((p for p in other.pieces if p.left <= mid <= p.right), None)
            if a is not None and c is not None:
                pieces.append(_merge_pieces(a, c, lo, hi))
            elif a is not None or c is not None:
                pieces.append((a or c).restricted(lo, hi))
        return PiecewisePotential(tuple(pieces), b)

    def times(self, c: float) -> PiecewisePotential:
        return PiecewisePotential(tuple(p.scaled(c, 1.0) for p in self.pieces), self.b)

    def scaled(self, amplitude: float, alpha: float) -> PiecewisePotential:
        """x -> amplitude * P(alpha x), support half-width b/alpha."""
        if amplitude == 0.0:
            return PiecewisePotential((), self.b / alpha)
        return PiecewisePotential(tuple(p.scaled(amplitude, alpha) for p in self.pieces), self.b / alpha)

    def translated(self, s: float) -> PiecewisePotential:
        return PiecewisePotential(tuple(p.shifted(s) for p in self.pieces), self.b + abs(s))

    def with_half_width(self, b: float) -> PiecewisePotential:
        return PiecewisePotential(self.pieces, b)

    # calculus -----------------------------------------------------------------
    def check_w12(self, tol: float = W12_TOL) -> None:
        scale = max(1.0, max((abs(p.lower_bound()) for p in self.pieces), default=0.0))
        for i, p in enumerate(self.pieces):
            prev = self.pieces[i - 1] if i > 0 else None
            nxt = self.pieces[i + 1] if i + 1 < len(self.pieces) else None
            left_neighbour = float(prev(p.left)) if prev is not None and prev.right == p.left else 0.0
            jump = abs(float(p(p.left)) - left_neighbour)
            if jump > tol * scale:
                raise NotW12(f"jump {jump:.3e} at x={p.left}")
            if nxt is None or nxt.left != p.right:
                end = abs(float(p(p.right)))
                if end > tol * scale:
                    raise NotW12(f"jump {end:.3e} at x={p.right}")

    def derivative(self) -> PiecewisePotential:
        self.check_w12()
        return PiecewisePotential(tuple(p.derivative() for p in self.pieces), self.b)

    def moment(self, n: int = 0, region: str = "full") -> float:
        if n < 0:
            raise ValueError("moment order must be non-negative")
        a, b = _region_bounds(region)
        return float(sum(p.moment(n, a, b) for p in self.pieces))

    def moment_quad(self, n: int = 0, region: str = "full") -> float:
        """Same as ``moment`` but by adaptive quadrature (cross-check)."""
        lo, hi = _region_bounds(region)
        total = 0.0
        for p in self.pieces:
            a, b = max(lo, p.left), min(hi, p.right)
            if b > a:
                pts = int(min(200, 10 + max((abs(h.w) for h in p.harmonics), default=0.0) * (b - a)))
                total += integrate.quad(
                    lambda x: x**n * float(p(x)), a, b, epsabs=1e-14, epsrel=1e-12, limit=max(50, pts)
                )[0]
        return total

    def abs_moment(self, n: int = 0) -> float:
        total = 0.0
        for p in self.pieces:
            t, wt = np.polynomial.legendre.leggauss(64)
            x = 0.5 * (p.right - p.left) * t + 0.5 * (p.right + p.left)
            total += 0.5 * (p.right - p.left) * float(np.sum(wt * np.abs(x**n * p(x))))
        return total

    # serialization ---------------------------------------------------------------
    def to_dict(self) -> dict:
        return {"b": self.b, "pieces": [p.to_dict() for p in self.pieces]}

    @classmethod
    def from_dict(cls, d: dict) -> PiecewisePotential:
        try:
            pieces = []
            for pd in d.get("pieces", []):
                harms = tuple(
                    Harmonic(float(h["A"]), float(h["w"]), float(h.get("phi", 0.0)), h.get("kind", "sin"))
                    for h in pd.get("harmonics", [])
                )
                pieces.append(PotentialPiece(float(pd["from"]), float(pd["to"]), tuple(pd.get("poly", [])), harms))
            return cls(tuple(pieces), float(d["b"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad potential: {exc}") from exc


def _region_bounds(region: str) -> tuple[float, float]:
    try:
        return {"full": (-math.inf, math.inf), "negative-half": (-math.inf, 0.0), "positive-half": (0.0, math.inf)}[
            region
        ]
    except KeyError:
        raise ValueError(f"unknown region {region!r}") from None


@dataclass(frozen=True)
class ScalingFamily:
    """lambda -> alpha_lambda.

    ``const``: alpha (plus an optional ``epsilon`` family, giving
    alpha_lambda = alpha + epsilon_lambda); ``power``: c * lambda**p;
    ``table``: log-log interpolation in ``rows``.
    """

    kind: str
    alpha: float | None = None
    c: float | None = None
    p: float | None = None
    rows: tuple[tuple[float, float], ...] = ()
    epsilon: ScalingFamily | None = None

    def __post_init__(self):
        if self.kind == "const":
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("constant family needs alpha > 0")
        elif self.kind == "power":
            if self.c is None or self.p is None or not self.c > 0:
                raise ValueError("power family needs c > 0 and p")
        elif self.kind == "table":
            rows = tuple(sorted((float(l), float(a)) for l, a in self.rows))
            if len(rows) < 2 or any(l <= 0 or a <= 0 for l, a in rows):
                raise ValueError("table family needs at least two rows with positive entries")
            object.__setattr__(self, "rows", rows)
        else:
            raise ValueError(f"unknown scaling kind {self.kind!r}")
        if self.epsilon is not None and self.kind != "const":
            raise ValueError("epsilon offset is only defined for constant families")

    @classmethod
    def const(cls, alpha: float, epsilon: ScalingFamily | None = None) -> ScalingFamily:
        return cls("const", alpha=alpha, epsilon=epsilon)

    @classmethod
    def power(cls, c: float, p: float) -> ScalingFamily:
        return cls("power", c=c, p=p)

    def __call__(self, lam: float) -> float:
        return alpha_at(self, lam)

    def eps(self, lam: float) -> float:
        return 0.0 if self.epsilon is None else alpha_at(self.epsilon, lam)

    @property
    def exponent(self) -> float | None:
        """Power-law exponent of alpha_lambda (None when not certifiable)."""
        if self.kind == "const":
            return 0.0
        if self.kind == "power":
            return self.p
        return None

    @property
    def limit_class(self) -> str:
        if self.kind == "const":
            return "finite-positive"
        if self.kind == "power":
            p = self.p
        else:
            (l0, a0), (l1, a1) = self.rows[0], self.rows[1]
            p = math.log(a1 / a0) / math.log(l1 / l0)
            if abs(p) < 0.05:
                return "finite-positive"
        if p == 0:
            return "finite-positive"
        return "infinite" if p < 0 else "zero"

    @property
    def limit(self) -> float:
        cls_ = self.limit_class
        if cls_ == "infinite":
            return math.inf
        if cls_ == "zero":
            return 0.0
        if self.kind == "const":
            return self.alpha
        if self.kind == "power":
            return self.c
        return self.rows[0][1]

    def to_dict(self) -> dict:
        if self.kind == "const":
            d = {"kind": "const", "alpha": self.alpha}
            if self.epsilon is not None:
                d["epsilon"] = self.epsilon.to_dict()
            return d
        if self.kind == "power":
            return {"kind": "power", "c": self.c, "p": self.p}
        return {"kind": "table", "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> ScalingFamily:
        try:
            kind = d["kind"]
            if kind == "const":
                eps = cls.from_dict(d["epsilon"]) if d.get("epsilon") is not None else None
                return cls("const", alpha=float(d["alpha"]), epsilon=eps)
            if kind == "power":
                return cls("power", c=float(d["c"]), p=float(d["p"]))
            if kind == "table":
                return cls("table", rows=tuple(tuple(r) for r in d["rows"]))
            raise ConfigError(f"unknown scaling kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scaling family: {exc}") from exc


# module-level operations -------------------------------------------------------


def evaluate(P: PiecewisePotential, x):
    return P(x)


def derivative(P: PiecewisePotential) -> PiecewisePotential:
    return P.derivative()


def moment(P: PiecewisePotential, n: int = 0, region: str = "full") -> float:
    return P.moment(n, region)


def alpha_at(F: ScalingFamily, lam: float) -> float:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if F.kind == "const":
        return F.alpha + F.eps(lam)
    if F.kind == "power":
        return F.c * lam**F.p
    rows = F.rows
    if lam < rows[0][0] or lam > rows[-1][0]:
        raise OutOfTable(f"lambda={lam} outside table range [{rows[0][0]}, {rows[-1][0]}]")
    logl = np.log([r[0] for r in rows])
    loga = np.log([r[1] for r in rows])
    return float(np.exp(np.interp(math.log(lam), logl, loga)))


def scaled_potential(V: PiecewisePotential, F: ScalingFamily | float, lam: float) -> PiecewisePotential:
    """x -> lam * alpha * V(alpha x) with alpha = alpha_lambda (or a given number)."""
    alpha = F if isinstance(F, (int, float)) else alpha_at(F, lam) if lam > 0 else 1.0
    return V.scaled(lam * alpha, alpha)


def square_well(depth: float, left: float, right: float, b: float | None = None) -> PiecewisePotential:
    """Constant value ``depth`` on [left, right] (negative depth is a well)."""
    return PiecewisePotential.constant(depth, left, right, b)


def load_json(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        return json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {source}: {exc}") from exc


def load_potential(source) -> PiecewisePotential:
    return PiecewisePotential.from_dict(load_json(source))


def load_scaling(source) -> ScalingFamily:
    return ScalingFamily.from_dict(load_json(source))

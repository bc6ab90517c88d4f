"""Propagation of -y'' + (Q - E) y = 0 and its inhomogeneous variants.

The first-order system (y, y')' = A(x) (y, y') with A = [[0, 1], [Q - E, 0]]
is advanced with the sixth-order Magnus integrator: each step multiplies by
exp(Omega), Omega built from Q at the three Gauss points of the step.  On a
constant piece Omega is exact for any step length, so constant pieces are
crossed in a single closed-form cosh/sinh (or cos/sin) step.  On non-constant
pieces the step is controlled by step doubling.  Every step matrix is the
exponential of a traceless matrix, so transfer matrices have unit determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepFailure
from .potential import PiecewisePotential, PotentialPiece
from .quadrature import CumulativeIntegral, integrate

RTOL = 1e-12
_S15 = math.sqrt(15.0)


@dataclass(frozen=True)
class OdeState:
    x: float
    y: float
    dy: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.dy)):
            raise ValueError(f"non-finite ODE state {self}")


def _expm_traceless(c, h, hq):
    """exp([[c, h], [hq, -c]]) entrywise, broadcasting over arrays."""
    s2 = c * c + h * hq
    s = np.sqrt(np.abs(s2))
    pos = s2 >= 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ch = np.where(pos, np.cosh(s), np.cos(s))
        big = np.where(pos, np.sinh(s), np.sin(s)) / np.where(s == 0, 1.0, s)
    small = 1.0 + s2 / 6.0 + s2 * s2 / 120.0
    sh = np.where(s < 1e-3, small, big)
    return ch + sh * c, sh * h, sh * hq, ch - sh * c


def _piece_values(piece: PotentialPiece | None, x):
    if piece is None:
        return np.zeros_like(np.asarray(x, dtype=float))
    return piece(x)


def _comm(X, Y):
    """Commutator of traceless matrices [[x1, x2], [x3, -x1]] stored as triples."""
    x1, x2, x3 = X
    y1, y2, y3 = Y
    return (x2 * y3 - x3 * y2, 2.0 * (x1 * y2 - x2 * y1), 2.0 * (x3 * y1 - x1 * y3))


def _magnus_step(piece, E, x0, h):
    """Sixth-order Magnus step from x0 over signed length h (broadcast over E and h).

    Three Gauss-Legendre nodes; Omega = a1 + a3/12 + [-20 a1 - a3 + C1, a2 + C2]/240
    with C1 = [a1, a2], C2 = -[a1, 2 a3 + C1]/60.
    """
    h = np.asarray(h, dtype=float)
    if piece is None or piece.is_constant:
        q = _piece_values(piece, x0) - E
        return _expm_traceless(np.zeros(np.broadcast(q, h).shape), h, h * q)
    q1 = _piece_values(piece, x0 + (0.5 - _S15 / 10) * h) - E
    q2 = _piece_values(piece, x0 + 0.5 * h) - E
    q3 = _piece_values(piece, x0 + (0.5 + _S15 / 10) * h) - E
    zero = np.zeros(np.broadcast(q1, h).shape)
    a1 = (zero, h + zero, h * q2)
    a2 = (zero, zero, (_S15 / 3) * h * (q3 - q1))
    a3 = (zero, zero, (10.0 / 3.0) * h * (q3 - 2.0 * q2 + q1))
    c1 = _comm(a1, a2)
    inner = _comm(a1, tuple(2.0 * p + q for p, q in zip(a3, c1)))
    c2 = tuple(-i / 60.0 for i in inner)
    left = tuple(-20.0 * p - q + r for p, q, r in zip(a1, a3, c1))
    right = tuple(p + q for p, q in zip(a2, c2))
    outer = _comm(left, right)
    om = tuple(p + q / 12.0 + r / 240.0 for p, q, r in zip(a1, a3, outer))
    return _expm_traceless(*om)


def _mul(a, b):
    """2x2 product a @ b for tuples of entry arrays."""
    a11, a12, a21, a22 = a
    b11, b12, b21, b22 = b
    return (a11 * b11 + a12 * b21, a11 * b12 + a12 * b22, a21 * b11 + a22 * b21, a21 * b12 + a22 * b22)


def _initial_step(piece: PotentialPiece, length: float) -> float:
    w = max((abs(h.w) for h in piece.harmonics), default=0.0)
    h = length if w == 0 else min(length, 1.0 / w)
    return max(h, length / 64)


def segment_transfer(piece, E, a: float, b: float, rtol: float = RTOL, record: list | None = None):
    """Transfer matrix entries over [a, b] (b < a allowed) for an array of energies.

    When ``record`` is a list, accepted step end points and the transfer
    matrices accumulated from ``a`` are appended to it as ``(x, M)``.
    """
    E = np.asarray(E, dtype=float)
    length = b - a
    if length == 0:
        one, zero = np.ones_like(E), np.zeros_like(E)
        return one, zero, zero, one
    if piece is None or piece.is_constant:
        q = float(_piece_values(piece, 0.5 * (a + b))) - E
        M = _expm_traceless(np.zeros_like(E), length, length * q)
        if record is not None:
            record.append((b, M))
        return M
    one, zero = np.ones_like(E), np.zeros_like(E)
    M = (one, zero, zero, one)
    x = a
    direction = 1.0 if length > 0 else -1.0
    h = direction * _initial_step(piece, abs(length))
    while (b - x) * direction > 0:
        remaining = b - x
        if abs(h) >= abs(remaining) * 0.999:
            h = remaining
        full = _magnus_step(piece, E, x, h)
        half = _mul(_magnus_step(piece, E, x + 0.5 * h, 0.5 * h), _magnus_step(piece, E, x, 0.5 * h))
        scale = np.maximum(1.0, np.max(np.abs(np.stack(half)), axis=0))
        err = float(np.max(np.abs(np.stack(full) - np.stack(half)) / scale))
        if err <= rtol:
            M = _mul(half, M)
            x = b if h == remaining else x + h
            if record is not None:
                record.append((x, M))
            grow = 4.0 if err == 0 else min(4.0, 0.9 * (rtol / err) ** (1.0 / 7.0))
            h *= grow
        else:
            h *= max(0.2, 0.9 * (rtol / err) ** (1.0 / 7.0))
            if abs(h) < 1e-14 * max(1.0, abs(x)):
                raise StepFailure(f"step size underflow at x={x:.6g}")
    return M


def transfer(Q: PiecewisePotential, E, x0: float, x1: float, rtol: float = RTOL):
    """Transfer matrix entries (m11, m12, m21, m22) from x0 to x1, vectorized over E."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    lo, hi = min(x0, x1), max(x0, x1)
    segs = Q.segments(lo, hi)
    if x1 < x0:
        segs = [(b, a, p) for a, b, p in reversed(segs)]
    one, zero = np.ones_like(E), np.zeros_like(E)
    M = (one, zero, zero, one)
    for a, b, piece in segs:
        M = _mul(segment_transfer(piece, E, a, b, rtol), M)
    return M


def propagate(Q: PiecewisePotential, E: float, start: OdeState, to_x: float, rtol: float = RTOL) -> OdeState:
    m11, m12, m21, m22 = transfer(Q, E, start.x, to_x, rtol)
    y = m11[0] * start.y + m12[0] * start.dy
    dy = m21[0] * start.y + m22[0] * start.dy
    return OdeState(to_x, float(y), float(dy))


class Trajectory:
    """Dense record of solutions of -y'' + (Q - E) y = 0 started at x0.

    ``columns`` initial states (y, y') are propagated together; evaluation at
    an arbitrary x takes one Magnus step from the nearest stored node, which is
    within the accuracy of the adaptive mesh.  Beyond the recorded range the
    potential is taken to vanish, so the continuation is exact there.
    """

    def __init__(self, Q: PiecewisePotential, E: float, x0: float, x1: float, initial, rtol: float = RTOL):
        self.Q, self.E, self.x0, self.x1 = Q, float(E), x0, x1
        init = np.asarray(initial, dtype=float).reshape(2, -1)
        nodes, pieces, mats = [x0], [], [(1.0, 0.0, 0.0, 1.0)]
        total = (np.ones(1), np.zeros(1), np.zeros(1), np.ones(1))
        for a, b, piece in Q.segments(x0, x1):
            rec: list = []
            segment_transfer(piece, [E], a, b, rtol, record=rec)
            for x, M in rec:
                nodes.append(x)
                pieces.append(piece)
                mats.append(tuple(float(m[0]) for m in _mul(M, total)))
            total = tuple(np.array([m]) for m in mats[-1])
        self.nodes = np.asarray(nodes)
        self._pieces = pieces
        m = np.asarray(mats)  # (n, 4)
        # states[k, :, j] = (y, y') of column j at node k
        self.states = np.einsum("nij,jc->nic", m.reshape(-1, 2, 2), init)
        self.breakpoints = tuple(x for x in Q.breakpoints if x0 < x < x1)

    def _eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((x.size, 2, self.states.shape[2]))
        left = x < self.x0
        right = x > self.x1
        inside = ~(left | right)
        for mask, node, state in ((left, self.x0, self.states[0]), (right, self.x1, self.states[-1])):
            if np.any(mask):
                M = np.stack(_expm_traceless(0.0, x[mask] - node, -(x[mask] - node) * self.E), axis=-1)
                out[mask] = np.einsum("mij,jc->mic", M.reshape(-1, 2, 2), state)
        if np.any(inside):
            xi = x[inside]
            idx = np.clip(np.searchsorted(self.nodes, xi, side="right") - 1, 0, len(self._pieces) - 1)
            res = np.empty((xi.size, 2, self.states.shape[2]))
            for k in np.unique(idx):
                sel = idx == k
                piece = self._pieces[k]
                M = np.stack(_magnus_step(piece, self.E, self.nodes[k], xi[sel] - self.nodes[k]), axis=-1)
                res[sel] = np.einsum("mij,jc->mic", M.reshape(-1, 2, 2), self.states[k])
            out[inside] = res
        return out

    def values(self, x):
        """Array (len(x), columns) of solution values."""
        return self._eval(x)[:, 0, :]

    def derivatives(self, x):
        return self._eval(x)[:, 1, :]

    def end_state(self, column: int = 0) -> OdeState:
        y, dy = self.states[-1, :, column]
        return OdeState(self.x1, float(y), float(dy))


class FundamentalPair:
    """Solutions u, u1 of -y'' + U y = 0 with u = 1, u' = 0 and u1 = 0, u1' = 1 at x0.

    With x0 = -b, u1(x) = x + b to the left of the support, and the Wronskian
    u u1' - u' u1 equals 1 everywhere.
    """

    def __init__(self, U: PiecewisePotential, x0: float | None = None, x1: float | None = None,
                 rtol: float = RTOL):
        self.U = U
        x0 = -U.b if x0 is None else x0
        x1 = U.b if x1 is None else x1
        self.x0, self.x1 = x0, x1
        self.trajectory = Trajectory(U, 0.0, x0, x1, np.eye(2), rtol)

    @property
    def breakpoints(self):
        return self.trajectory.breakpoints

    def u(self, x):
        return _squeeze(self.trajectory.values(x)[:, 0], x)

    def du(self, x):
        return _squeeze(self.trajectory.derivatives(x)[:, 0], x)

    def u1(self, x):
        return _squeeze(self.trajectory.values(x)[:, 1], x)

    def du1(self, x):
        return _squeeze(self.trajectory.derivatives(x)[:, 1], x)

    def wronskian(self, x):
        s = self.trajectory._eval(x)
        return _squeeze(s[:, 0, 0] * s[:, 1, 1] - s[:, 1, 0] * s[:, 0, 1], x)


def _squeeze(arr, x):
    return float(arr[0]) if np.ndim(x) == 0 else arr


class InhomogeneousSolution:
    """v with -v'' + U v = f and Cauchy data at x0, by variation of parameters.

    v(x) = y0 u(x) + dy0 u1(x) - int_{x0}^{x} K(x, s) f(s) ds,
    K(x, s) = u(s) u1(x) - u(x) u1(s).
    """

    def __init__(self, pair: FundamentalPair, f, init: OdeState, breakpoints=(), rtol: float = RTOL):
        if abs(init.x - pair.x0) > 1e-12 * max(1.0, abs(pair.x0)):
            raise ValueError("initial state must sit at the left end of the fundamental pair")
        self.pair, self.f, self.init = pair, f, init
        self.x0, self.x1 = pair.x0, pair.x1
        bps = sorted(set(breakpoints) | set(pair.breakpoints) | set(getattr(f, "breakpoints", ())))
        self.breakpoints = tuple(x for x in bps if self.x0 < x < self.x1)

        def integrand(s):
            fs = f(s)
            uv = pair.trajectory.values(s)
            return np.stack([uv[:, 0] * fs, uv[:, 1] * fs])

        self._cum = CumulativeIntegral(integrand, self.x0, self.x1, self.breakpoints, rtol=rtol)

    def _parts(self, x):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        s = self.pair.trajectory._eval(xa)
        Iu, Iu1 = self._cum(np.clip(xa, self.x0, self.x1))
        return s, Iu, Iu1

    def __call__(self, x):
        s, Iu, Iu1 = self._parts(x)
        u, u1 = s[:, 0, 0], s[:, 0, 1]
        v = self.init.y * u + self.init.dy * u1 - u1 * Iu + u * Iu1
        return _squeeze(v, x)

    def derivative(self, x):
        s, Iu, Iu1 = self._parts(x)
        du, du1 = s[:, 1, 0], s[:, 1, 1]
        dv = self.init.y * du + self.init.dy * du1 - du1 * Iu + du * Iu1
        return _squeeze(dv, x)

    def _samples(self, samples: int) -> np.ndarray:
        """Uniform grid plus a refined grid between consecutive breakpoints."""
        edges = np.concatenate([[self.x0], self.breakpoints, [self.x1]])
        local = [np.linspace(a, b, 33) for a, b in zip(edges[:-1], edges[1:])]
        return np.unique(np.concatenate([np.linspace(self.x0, self.x1, samples)] + local))

    def c1_norm(self, samples: int = 801) -> float:
        """max over [x0, x1] of max(|v|, |v'|), sampled on a grid refined at breakpoints."""
        x = self._samples(samples)
        return float(max(np.max(np.abs(self(x))), np.max(np.abs(self.derivative(x)))))

    def sup_norm(self, samples: int = 801) -> float:
        return float(np.max(np.abs(self(self._samples(samples)))))


def solve_inhomogeneous(U: PiecewisePotential, f, init: OdeState, x1: float | None = None,
                        breakpoints=(), pair: FundamentalPair | None = None) -> InhomogeneousSolution:
    """Solve -v'' + U v = f on [init.x, x1] (default x1 = -init.x)."""
    if pair is None:
        pair = FundamentalPair(U, init.x, -init.x if x1 is None else x1)
    return InhomogeneousSolution(pair, f, init, breakpoints)


@dataclass(frozen=True)
class ExponentialTail:
    """amplitude * exp(-rate |x - anchor|) on the given side of ``anchor``."""

    amplitude: float
    rate: float
    anchor: float = 0.0
    side: str = "right"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = (x - self.anchor) if self.side == "right" else (self.anchor - x)
        return np.where(d >= 0, self.amplitude * np.exp(-self.rate * np.maximum(d, 0.0)), 0.0)

    def norm_sq(self) -> float:
        return self.amplitude**2 / (2.0 * self.rate)


def l2_norm(g, a: float = -math.inf, b: float = math.inf, breakpoints=(), rtol: float = 1e-10) -> float:
    """L2 norm over [a, b]; exponential tails on half-lines are closed form."""
    if isinstance(g, ExponentialTail):
        if g.rate <= 0:
            raise ValueError("tail must decay")
        return math.sqrt(g.norm_sq())
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("only exponential tails may be integrated over infinite ranges")
    return math.sqrt(max(0.0, integrate(lambda x: np.asarray(g(x)) ** 2, a, b, breakpoints, rtol=rtol)))

"""Adaptive Gauss-Legendre quadrature on piecewise-smooth integrands.

Integrands are vectorized callables: they take a 1-D array of nodes and return
either an array of the same length or a ``(k, n)`` stack of k components that
are integrated together.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure

ORDER = 10
MAX_INTERVALS = 200_000


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


def _as_stack(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[None, :] if values.ndim == 1 else values


def _rule(f, lo: np.ndarray, hi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point rule on every interval; returns (integrals, abs-integrals), each (k, m)."""
    t, w = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    vals = _as_stack(f(x)).reshape(-1, lo.size, n)
    integ = np.einsum("kmn,n->km", vals, w) * half
    absint = np.einsum("kmn,n->km", np.abs(vals), w) * np.abs(half)
    return integ, absint


def _initial_edges(a: float, b: float, breakpoints) -> np.ndarray:
    pts = [a, b] + [p for p in breakpoints if a < p < b]
    return np.unique(np.asarray(pts, dtype=float))


def adaptive_partition(f, a: float, b: float, breakpoints=(), rtol: float = 1e-12, atol: float = 0.0,
                       n: int = ORDER, min_pieces: int = 1):
    """Refine [a, b] until the n- and 2n-point rules agree.

    The tolerance is ``max(atol, rtol * integral of |f|)`` distributed over
    intervals in proportion to their length.  Returns ``(lo, hi, values)`` of
    the accepted intervals sorted by position, ``values`` of shape (k, m).
    """
    if b == a:
        return np.array([a]), np.array([a]), np.zeros((1, 1))
    edges = _initial_edges(a, b, breakpoints)
    lo, hi = edges[:-1], edges[1:]
    if min_pieces > 1:
        parts = [np.linspace(l, h, min_pieces + 1) for l, h in zip(lo, hi)]
        lo = np.concatenate([p[:-1] for p in parts])
        hi = np.concatenate([p[1:] for p in parts])
    total_len = b - a
    acc_lo, acc_hi, acc_val = [], [], []
    acc_abs = 0.0
    while lo.size:
        coarse, _ = _rule(f, lo, hi, n)
        fine, absfine = _rule(f, lo, hi, 2 * n)
        err = np.max(np.abs(fine - coarse), axis=0)
        abs_total = acc_abs + float(np.max(np.sum(absfine, axis=1)))
        tol = max(atol, rtol * abs_total)
        share = tol * (hi - lo) / total_len
        ok = err <= share
        acc_lo.append(lo[ok])
        acc_hi.append(hi[ok])
        acc_val.append(fine[:, ok])
        acc_abs += float(np.max(np.sum(absfine[:, ok], axis=1))) if np.any(ok) else 0.0
        lo, hi = lo[~ok], hi[~ok]
        if lo.size:
            mid = 0.5 * (lo + hi)
            if np.any(np.abs(hi - lo) <= 1e-14 * np.maximum(1.0, np.abs(mid))):
                raise QuadratureFailure(f"interval collapsed near x={mid[0]:.6g} without convergence")
            lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        if sum(x.size for x in acc_lo) + lo.size > MAX_INTERVALS:
            raise QuadratureFailure("too many subintervals")
    lo = np.concatenate(acc_lo)
    hi = np.concatenate(acc_hi)
    vals = np.concatenate(acc_val, axis=1)
    order = np.argsort(lo)
    return lo[order], hi[order], vals[:, order]


def integrate(f, a: float, b: float, breakpoints=(), rtol: float = 1e-12, atol: float = 0.0, n: int = ORDER):
    """Integral of f over [a, b]; a float, or an array for stacked integrands."""
    if b < a:
        return -integrate(f, b, a, breakpoints, rtol, atol, n)
    _, _, vals = adaptive_partition(f, a, b, breakpoints, rtol, atol, n)
    out = vals.sum(axis=1)
    return float(out[0]) if out.size == 1 else out


class CumulativeIntegral:
    """x -> integral of f from a to x, for x in [a, b].

    Built from an adaptive partition; evaluation adds a 2n-point rule on the
    partial last interval, which is accurate because accepted intervals
    resolve f.
    """

    def __init__(self, f, a: float, b: float, breakpoints=(), rtol: float = 1e-12, atol: float = 0.0,
                 n: int = ORDER):
        self.f = f
        self.a, self.b = a, b
        self.n = 2 * n
        lo, hi, vals = adaptive_partition(f, a, b, breakpoints, rtol, atol, n, min_pieces=4)
        self.lo = lo
        self.hi = hi
        self.k = vals.shape[0]
        self.starts = np.concatenate([np.zeros((self.k, 1)), np.cumsum(vals, axis=1)[:, :-1]], axis=1)
        self.total = vals.sum(axis=1)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.a - 1e-12 * max(1.0, abs(self.a))) or np.any(x > self.b + 1e-12 * max(1.0, abs(self.b))):
            raise ValueError("cumulative integral evaluated outside its range")
        x = np.clip(x, self.a, self.b)
        idx = np.clip(np.searchsorted(self.lo, x, side="right") - 1, 0, self.lo.size - 1)
        start = self.lo[idx]
        t, w = gauss_legendre(self.n)
        half = 0.5 * (x - start)
        nodes = (start + half)[:, None] + half[:, None] * t[None, :]
        vals = _as_stack(self.f(nodes.ravel())).reshape(self.k, x.size, self.n)
        partial = np.einsum("kmn,n->km", vals, w) * half
        return self.starts[:, idx] + partial

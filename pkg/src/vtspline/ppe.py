"""Piecewise polynomial-times-exponential functions with exact integration.

A :class:`PiecewisePolyExp` is zero outside ``[breakpoints[0], breakpoints[-1])``
and on the piece ``[b_i, b_{i+1})`` equals

    sum_j P_ij(t - a_i) * exp(r_ij * (t - a_i))

where ``a_i`` is the piece anchor. The outermost breakpoints may be infinite.
Pieces are right-continuous; :meth:`PiecewisePolyExp.left_limit` evaluates the
closed form of the piece to the left of ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable, Sequence

import numpy as np

from ._kernels import moment

Term = tuple[float, np.ndarray]  # (rate, ascending coefficients)


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1].copy()


def _taylor_shift(c: np.ndarray, delta: float) -> np.ndarray:
    """Coefficients of P(s + delta) given those of P(s)."""
    if delta == 0.0 or c.size == 1:
        return c.copy()
    out = np.zeros(c.size)
    for coef in c[::-1]:
        # out <- out * (s + delta) + coef
        shifted = np.zeros(c.size)
        shifted[1:] = out[:-1]
        out = shifted + delta * out
        out[0] += coef
    return out


def _merge_terms(terms: Iterable[Term]) -> tuple[Term, ...]:
    acc: dict[float, np.ndarray] = {}
    for rate, c in terms:
        rate = float(rate)
        if rate in acc:
            a = acc[rate]
            n = max(a.size, c.size)
            s = np.zeros(n)
            s[: a.size] += a
            s[: c.size] += c
            acc[rate] = s
        else:
            acc[rate] = np.asarray(c, dtype=float).copy()
    out = []
    for rate in sorted(acc):
        c = _trim(acc[rate])
        if np.any(c != 0.0):
            out.append((rate, c))
    return tuple(out)


def _canonical_anchor(lo: float, hi: float, fallback: float) -> float:
    if np.isfinite(lo):
        return float(lo)
    if np.isfinite(hi):
        return float(hi)
    return float(fallback)


@dataclass(frozen=True, eq=False)
class PiecewisePolyExp:
    breakpoints: np.ndarray
    anchors: np.ndarray
    pieces: tuple[tuple[Term, ...], ...]

    def __post_init__(self) -> None:
        bp = np.asarray(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "anchors", np.asarray(self.anchors, dtype=float))
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.pieces) != bp.size - 1 or self.anchors.size != bp.size - 1:
            raise ValueError("one anchor and one term list per piece")
        if np.any(~np.isfinite(self.anchors)):
            raise ValueError("anchors must be finite")

    # ------------------------------------------------------------ builders

    @classmethod
    def zero(cls) -> "PiecewisePolyExp":
        return cls(np.array([-np.inf, np.inf]), np.zeros(1), ((),))

    @classmethod
    def single(
        cls,
        coeffs: Sequence[float],
        rate: float = 0.0,
        anchor: float = 0.0,
        lo: float = -np.inf,
        hi: float = np.inf,
    ) -> "PiecewisePolyExp":
        """One piece ``P(t - anchor) exp(rate (t - anchor))`` on ``[lo, hi)``."""
        f = cls(np.array([lo, hi], dtype=float), np.array([anchor], dtype=float),
                (_merge_terms([(rate, np.asarray(coeffs, dtype=float))]),))
        return f._reanchored()

    @classmethod
    def from_pieces(
        cls,
        breakpoints: Sequence[float],
        coeffs: Sequence[Sequence[float]],
        rates: Sequence[float] | None = None,
    ) -> "PiecewisePolyExp":
        """Pieces with polynomials in ``t - b_i`` (left breakpoint as anchor)."""
        bp = np.asarray(breakpoints, dtype=float)
        rates = [0.0] * (bp.size - 1) if rates is None else rates
        anchors = [_canonical_anchor(bp[i], bp[i + 1], 0.0) for i in range(bp.size - 1)]
        pieces = tuple(_merge_terms([(r, np.asarray(c, dtype=float))]) for c, r in zip(coeffs, rates))
        return cls(bp, np.array(anchors), pieces)

    @classmethod
    def bump(cls, lo: float, hi: float, power: int, poly: Sequence[float] = (1.0,)) -> "PiecewisePolyExp":
        """``(t-lo)^k (hi-t)^k q(t-lo)`` on ``[lo, hi]`` with ``q`` given by ``poly``."""
        width = hi - lo
        # (hi - t) = width - s with s = t - lo
        base = np.polynomial.polynomial.polypow([0.0, 1.0], power)
        right = np.polynomial.polynomial.polypow([width, -1.0], power)
        c = np.polynomial.polynomial.polymul(np.polynomial.polynomial.polymul(base, right), poly)
        return cls(np.array([lo, hi]), np.array([lo]), (_merge_terms([(0.0, c)]),))

    # ------------------------------------------------------------ structure

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def num_pieces(self) -> int:
        return len(self.pieces)

    def is_zero(self) -> bool:
        return all(len(p) == 0 for p in self.pieces)

    def _reanchored(self) -> "PiecewisePolyExp":
        bp = self.breakpoints
        pieces = []
        anchors = []
        for i, terms in enumerate(self.pieces):
            a_new = _canonical_anchor(bp[i], bp[i + 1], self.anchors[i])
            pieces.append(_shift_terms(terms, self.anchors[i], a_new))
            anchors.append(a_new)
        return PiecewisePolyExp(bp, np.array(anchors), tuple(pieces))

    def refine(self, points: Iterable[float]) -> "PiecewisePolyExp":
        """Same function on a breakpoint set enlarged by ``points``.

        Points outside the current support extend it with zero pieces.
        """
        new_bp = np.union1d(self.breakpoints, np.asarray(list(points), dtype=float))
        return self._on_breakpoints(new_bp)

    def _on_breakpoints(self, new_bp: np.ndarray) -> "PiecewisePolyExp":
        bp = self.breakpoints
        pieces = []
        anchors = []
        for i in range(new_bp.size - 1):
            lo, hi = new_bp[i], new_bp[i + 1]
            j = _piece_containing(bp, lo, hi)
            if j < 0:
                a = _canonical_anchor(lo, hi, 0.0)
                pieces.append(())
            else:
                a = _canonical_anchor(lo, hi, self.anchors[j])
                pieces.append(_shift_terms(self.pieces[j], self.anchors[j], a))
            anchors.append(a)
        return PiecewisePolyExp(new_bp, np.array(anchors), tuple(pieces))

    def simplify(self) -> "PiecewisePolyExp":
        """Drop zero pieces at both ends."""
        keep = [i for i, p in enumerate(self.pieces) if len(p) > 0]
        if not keep:
            return PiecewisePolyExp.zero()
        i0, i1 = keep[0], keep[-1]
        return PiecewisePolyExp(self.breakpoints[i0 : i1 + 2], self.anchors[i0 : i1 + 1], self.pieces[i0 : i1 + 1])

    # ------------------------------------------------------------ evaluation

    def _eval_piece(self, i: int, t: np.ndarray) -> np.ndarray:
        s = t - self.anchors[i]
        out = np.zeros_like(s)
        for rate, c in self.pieces[i]:
            out += np.polynomial.polynomial.polyval(s, c) * np.exp(rate * s)
        return out

    def _eval(self, t, side: str) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        idx = np.searchsorted(self.breakpoints, flat, side=side) - 1
        out = np.zeros(flat.shape)
        for i in np.unique(idx):
            if 0 <= i < self.num_pieces and self.pieces[i]:
                m = idx == i
                out[m] = self._eval_piece(int(i), flat[m])
        if t_arr.ndim == 0:
            return float(out[0])
        return out.reshape(t_arr.shape)

    def __call__(self, t):
        return self._eval(t, "right")

    def left_limit(self, t):
        """Limit from the left, evaluated on the piece whose open interior touches ``t``."""
        return self._eval(t, "left")

    # ------------------------------------------------------------ algebra

    def derivative(self, order: int = 1) -> "PiecewisePolyExp":
        f = self
        for _ in range(order):
            pieces = []
            for terms in f.pieces:
                new = []
                for rate, c in terms:
                    dc = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
                    s = np.zeros(max(dc.size, c.size))
                    s[: dc.size] += dc
                    s[: c.size] += rate * c
                    new.append((rate, s))
                pieces.append(_merge_terms(new))
            f = PiecewisePolyExp(f.breakpoints, f.anchors, tuple(pieces))
        return f

    def apply_operator(self, alpha: float, order: int, sign: float = 1.0) -> "PiecewisePolyExp":
        """Apply ``(sign*D - alpha I)^order`` piecewise (jumps are ignored)."""
        f = self
        for _ in range(order):
            f = f.derivative().scale(sign) - f.scale(alpha)
        return f

    def shift(self, x: float) -> "PiecewisePolyExp":
        """``t -> f(t - x)``."""
        return PiecewisePolyExp(self.breakpoints + x, self.anchors + x, self.pieces)

    def scale(self, c: float) -> "PiecewisePolyExp":
        c = float(c)
        if c == 0.0:
            return PiecewisePolyExp(self.breakpoints, self.anchors, tuple(() for _ in self.pieces))
        pieces = tuple(tuple((r, c * k) for r, k in terms) for terms in self.pieces)
        return PiecewisePolyExp(self.breakpoints, self.anchors, pieces)

    def __neg__(self) -> "PiecewisePolyExp":
        return self.scale(-1.0)

    def _common(self, other: "PiecewisePolyExp") -> tuple["PiecewisePolyExp", "PiecewisePolyExp"]:
        bp = np.union1d(self.breakpoints, other.breakpoints)
        return self._on_breakpoints(bp), other._on_breakpoints(bp)

    def __add__(self, other: "PiecewisePolyExp") -> "PiecewisePolyExp":
        a, b = self._common(other)
        pieces = tuple(_merge_terms(list(pa) + list(pb)) for pa, pb in zip(a.pieces, b.pieces))
        return PiecewisePolyExp(a.breakpoints, a.anchors, pieces)

    def __sub__(self, other: "PiecewisePolyExp") -> "PiecewisePolyExp":
        return self + other.scale(-1.0)

    def __mul__(self, other):
        if isinstance(other, PiecewisePolyExp):
            return self.product(other)
        return self.scale(other)

    __rmul__ = __mul__

    def product(self, other: "PiecewisePolyExp") -> "PiecewisePolyExp":
        lo = max(self.breakpoints[0], other.breakpoints[0])
        hi = min(self.breakpoints[-1], other.breakpoints[-1])
        if not lo < hi:
            return PiecewisePolyExp.zero()
        a, b = self._common(other)
        keep = (a.breakpoints >= lo) & (a.breakpoints <= hi)
        bp = a.breakpoints[keep]
        first = int(np.flatnonzero(keep)[0])
        pieces = []
        for i in range(bp.size - 1):
            pa, pb = a.pieces[first + i], b.pieces[first + i]
            terms = [(ra + rb, np.polynomial.polynomial.polymul(ca, cb)) for ra, ca in pa for rb, cb in pb]
            pieces.append(_merge_terms(terms))
        return PiecewisePolyExp(bp, a.anchors[first : first + bp.size - 1], tuple(pieces))

    # ------------------------------------------------------------ integration

    def integrate(self, lo: float | None = None, hi: float | None = None) -> float:
        """Exact integral over ``[lo, hi]`` (defaults to the support)."""
        lo = self.breakpoints[0] if lo is None else float(lo)
        hi = self.breakpoints[-1] if hi is None else float(hi)
        if hi < lo:
            return -self.integrate(hi, lo)
        total = 0.0
        bp = self.breakpoints
        for i, terms in enumerate(self.pieces):
            if not terms:
                continue
            a = max(lo, bp[i])
            b = min(hi, bp[i + 1])
            if not a < b:
                continue
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ValueError("integral over an unbounded piece with nonzero terms")
            total += _integrate_terms(terms, self.anchors[i], a, b)
        return float(total)

    # ------------------------------------------------------------ regularity

    def smoothness(self, max_order: int = 32, tol: float = 1e-9) -> int:
        """Largest ``k`` such that derivatives ``0..k-1`` are continuous on R.

        Then the ``k``-th derivative is a bounded function, so ``k`` is the
        order of differential operator that can be moved onto this function.
        """
        f = self
        finite = [b for b in self.breakpoints if np.isfinite(b)]
        for k in range(max_order):
            jumps = [abs(f(b) - f.left_limit(b)) for b in finite]
            scale = 1.0 + max([abs(f(b)) for b in finite] + [abs(f.left_limit(b)) for b in finite] + [0.0])
            if jumps and max(jumps) > tol * scale:
                return k
            f = f.derivative()
        return max_order


def _piece_containing(bp: np.ndarray, lo: float, hi: float) -> int:
    """Index of the piece of ``bp`` that covers ``[lo, hi)``, or -1."""
    if lo < bp[0] or hi > bp[-1]:
        return -1
    j = int(np.searchsorted(bp, lo, side="right")) - 1
    if np.isinf(lo) and lo < 0:
        j = 0
    if j < 0 or j >= bp.size - 1:
        return -1
    return j


def _shift_terms(terms: tuple[Term, ...], a_old: float, a_new: float) -> tuple[Term, ...]:
    if a_old == a_new:
        return terms
    delta = a_new - a_old
    # P(t - a_old) e^{r (t - a_old)} with t - a_old = (t - a_new) + delta
    return tuple((r, _taylor_shift(c, delta) * np.exp(r * delta)) for r, c in terms)


def _integrate_terms(terms: tuple[Term, ...], anchor: float, a: float, b: float) -> float:
    s0 = a - anchor
    h = b - a
    total = 0.0
    for rate, c in terms:
        q = _taylor_shift(c, s0)
        acc = 0.0
        for k, qk in enumerate(q):
            if qk != 0.0:
                acc += qk * moment(k, rate, h)
        total += acc * np.exp(rate * s0)
    return total


def green_ppe(alpha: float, order: int, knot: float = 0.0) -> PiecewisePolyExp:
    """``t -> (t - knot)_+^{N-1} e^{alpha (t - knot)} / (N-1)!``."""
    c = np.zeros(order)
    c[-1] = 1.0 / factorial(order - 1)
    return PiecewisePolyExp(np.array([knot, np.inf]), np.array([knot]), (_merge_terms([(alpha, c)]),))


def null_ppe(alpha: float, n: int, anchor: float) -> PiecewisePolyExp:
    """``t -> (t - anchor)^{n-1} e^{alpha (t - anchor)} / (n-1)!`` on R."""
    c = np.zeros(n)
    c[-1] = 1.0 / factorial(n - 1)
    return PiecewisePolyExp(np.array([-np.inf, np.inf]), np.array([anchor]), (_merge_terms([(alpha, c)]),))

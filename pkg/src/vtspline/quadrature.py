"""Adaptive Gauss-Legendre quadrature for integrands outside the PPE class."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(10)


def _gl(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return float(half * np.dot(_WEIGHTS, f(mid + half * _NODES)))


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 40,
    points: Sequence[float] = (),
) -> float:
    """Integrate a vectorized ``f`` over ``[a, b]``.

    Intervals are bisected until the one-panel and two-panel 10-point rules
    agree to the local share of ``tol``. ``points`` are forced split locations
    (kinks or jumps of the integrand).
    """
    if b < a:
        return -adaptive_gauss_legendre(f, b, a, tol, max_depth, points)
    cuts = sorted({a, b, *[p for p in points if a < p < b]})
    total = 0.0
    share = tol / max(len(cuts) - 1, 1)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += _recurse(f, lo, hi, _gl(f, lo, hi), share, max_depth)
    return total


def _recurse(f, a: float, b: float, whole: float, tol: float, depth: int) -> float:
    m = 0.5 * (a + b)
    left = _gl(f, a, m)
    right = _gl(f, m, b)
    if depth <= 0 or abs(left + right - whole) <= tol:
        return left + right
    return _recurse(f, a, m, left, 0.5 * tol, depth - 1) + _recurse(f, m, b, right, 0.5 * tol, depth - 1)

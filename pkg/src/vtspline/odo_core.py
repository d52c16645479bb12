"""One-dimensional operator toolkit for ``L = (D - alpha I)^N``.

Green's function, null-space basis, admissible systems (compactly supported
or K-fundamental), the corrected kernel and null-space projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from math import factorial, isfinite
from typing import Sequence

import numpy as np

from . import _kernels
from .ppe import PiecewisePolyExp, green_ppe, null_ppe
from .quadrature import adaptive_gauss_legendre

__all__ = [
    "Odo",
    "Interval",
    "PiecewisePolyExp",
    "SystemKind",
    "AdmissibleSystem",
    "Atoms1D",
    "SingularGram",
    "green_eval",
    "nullspace_eval",
    "default_generators",
    "build_universal_system",
    "build_localized_system",
    "build_fundamental_system",
    "kernel_eval",
    "kernel_ppe",
    "proj_nullspace",
    "integrate_ppe",
    "adaptive_gauss_legendre",
]

GRAM_REL_THRESHOLD = 1e-12


class SingularGram(ValueError):
    """Generators whose null-space Gram matrix is (numerically) singular."""


@dataclass(frozen=True)
class Odo:
    """The operator ``(D - alpha I)^order``."""

    alpha: float = 0.0
    order: int = 1

    def __post_init__(self) -> None:
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order!r}")
        if not isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "alpha", float(self.alpha))

    def green(self, t):
        out = _kernels.green_factor_np(t, 0.0, self.alpha, self.order)
        return float(out) if np.ndim(out) == 0 else out

    def green_ppe(self, knot: float = 0.0) -> PiecewisePolyExp:
        return green_ppe(self.alpha, self.order, knot)

    def null(self, n: int, anchor: float, t):
        self._check_index(n)
        out = _kernels.poly_factor_np(t, anchor, self.alpha, n)
        return float(out) if np.ndim(out) == 0 else out

    def null_ppe(self, n: int, anchor: float) -> PiecewisePolyExp:
        self._check_index(n)
        return null_ppe(self.alpha, n, anchor)

    def apply(self, f: PiecewisePolyExp, power: int | None = None) -> PiecewisePolyExp:
        """``(D - alpha I)^power f`` piecewise; ``power`` defaults to the order."""
        return f.apply_operator(self.alpha, self.order if power is None else power)

    def adjoint(self, psi: PiecewisePolyExp) -> PiecewisePolyExp:
        """``L* psi = (-D - alpha I)^N psi``."""
        return psi.apply_operator(self.alpha, self.order, sign=-1.0)

    def _check_index(self, n: int) -> None:
        if not 1 <= n <= self.order:
            raise IndexError(f"null-space index {n} outside 1..{self.order}")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not float(self.lo) < float(self.hi):
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def interior(self, x: float) -> bool:
        return self.lo < x < self.hi

    def includes(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


class SystemKind(Enum):
    UNIVERSAL = "universal"
    K_LOCALIZED = "k-localized"
    K_FUNDAMENTAL = "k-fundamental"


@dataclass(frozen=True, eq=False)
class AdmissibleSystem:
    """Null-space basis ``p`` with biorthogonal analysis functionals.

    For the compactly supported kinds ``phi`` holds the analysis functions.
    For the K-fundamental kind ``phi`` is ``None`` and the functionals are
    derivative evaluations at ``K.lo`` (left limit for the last one).
    """

    odo: Odo
    kind: SystemKind
    anchor: float
    p: tuple[PiecewisePolyExp, ...]
    phi: tuple[PiecewisePolyExp, ...] | None = None
    phi_support: Interval | None = None
    K: Interval | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def order(self) -> int:
        return self.odo.order

    @property
    def is_fundamental(self) -> bool:
        return self.kind is SystemKind.K_FUNDAMENTAL

    def null_eval(self, n: int, t):
        return self.odo.null(n, self.anchor, t)

    def analysis(self, f: PiecewisePolyExp) -> np.ndarray:
        """The vector ``(<f, phi_n>)_n`` (or ``iota_n f`` for the fundamental kind)."""
        N = self.order
        out = np.zeros(N)
        if self.is_fundamental:
            k_lo = self.K.lo
            g = f
            for n in range(1, N + 1):
                out[n - 1] = g(k_lo) if n < N else g.left_limit(k_lo)
                if n < N:
                    g = self.odo.apply(g, 1)
            return out
        for n in range(N):
            out[n] = (f * self.phi[n]).integrate()
        return out

    def green_coefficients(self, x: float) -> np.ndarray:
        """``(<g_L(. - x), phi_n>)_n``; closed form for the fundamental kind."""
        x = float(x)
        N = self.order
        if self.is_fundamental:
            out = np.zeros(N)
            d = self.K.lo - x
            if d > 0.0:
                a = self.odo.alpha
                for n in range(1, N + 1):
                    m = N - n
                    out[n - 1] = d**m * np.exp(a * d) / factorial(m)
            return out
        if self.phi_support is not None and x >= self.phi_support.hi:
            return np.zeros(N)
        hit = self._cache.get(x)
        if hit is None:
            hit = self.analysis(self.odo.green_ppe(x))
            if len(self._cache) < 100000:
                self._cache[x] = hit
        return hit.copy()

    def biorthogonality(self) -> np.ndarray:
        """Matrix ``[<p_n, phi_m>]_{n,m}``; the identity for a valid system."""
        return np.array([self.analysis(pn) for pn in self.p])


@dataclass(frozen=True)
class Atoms1D:
    """``sum_k w_k g_L(t - x_k) + sum_n c_n p_n(t)`` in a system's basis."""

    knots: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    null_coeffs: tuple[float, ...] = ()

    def to_ppe(self, system: AdmissibleSystem) -> PiecewisePolyExp:
        f = PiecewisePolyExp.zero()
        for x, w in zip(self.knots, self.weights):
            f = f + system.odo.green_ppe(x).scale(w)
        for n, c in enumerate(self.null_coeffs, start=1):
            if c != 0.0:
                f = f + system.p[n - 1].scale(c)
        return f

    def __call__(self, system: AdmissibleSystem, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for x, w in zip(self.knots, self.weights):
            out = out + w * system.odo.green(t - x)
        for n, c in enumerate(self.null_coeffs, start=1):
            out = out + c * system.null_eval(n, t)
        return out


def green_eval(odo: Odo, t):
    """Causal Green's function ``t_+^{N-1} e^{alpha t} / (N-1)!`` (``0^0 = 1``)."""
    return odo.green(t)


def nullspace_eval(odo: Odo, n: int, anchor: float, t):
    """``(t - anchor)^{n-1} e^{alpha (t - anchor)} / (n-1)!``."""
    return odo.null(n, anchor, t)


def default_generators(odo: Odo, support: Interval, power: int = 1) -> list[PiecewisePolyExp]:
    """Bumps ``b(t)^k q_m(t)`` with ``b`` the unit-height parabola on the support.

    ``q_m`` is the shifted Legendre polynomial of degree ``m-1``; this keeps the
    Gram matrix far better conditioned than monomial weights.
    """
    lo, w = support.lo, support.width
    gens = []
    for m in range(odo.order):
        leg = np.polynomial.legendre.leg2poly(np.eye(m + 1)[m])
        q = np.zeros(1)
        for j, cj in enumerate(leg):
            # x = 2 (t - lo) / w - 1
            q = np.polynomial.polynomial.polyadd(q, cj * np.polynomial.polynomial.polypow([-1.0, 2.0 / w], j))
        gens.append(PiecewisePolyExp.bump(lo, lo + w, power, q).scale((4.0 / w**2) ** power))
    return gens


def build_universal_system(
    odo: Odo,
    support: Interval,
    generators: Sequence[PiecewisePolyExp] | None = None,
    anchor: float = 0.0,
    localized_to: Interval | None = None,
) -> AdmissibleSystem:
    """Biorthogonalize compactly supported generators against the null space.

    ``phi = G^{-T} generators`` with ``G[n, m] = <p_n, generator_m>``.
    """
    N = odo.order
    gens = list(default_generators(odo, support) if generators is None else generators)
    if len(gens) != N:
        raise ValueError(f"need {N} generators, got {len(gens)}")
    for g in gens:
        lo, hi = g.simplify().support
        if lo < support.lo - 1e-12 or hi > support.hi + 1e-12:
            raise ValueError("generator not supported in the declared interval")
    if localized_to is not None and not localized_to.includes(support):
        raise ValueError("analysis support must lie inside K for a K-localized system")
    p = tuple(odo.null_ppe(n, anchor) for n in range(1, N + 1))
    G = np.array([[(pn * g).integrate() for g in gens] for pn in p])
    norm = np.linalg.norm(G, 2)
    if norm == 0.0 or abs(np.linalg.det(G)) < GRAM_REL_THRESHOLD * norm**N:
        raise SingularGram(f"Gram matrix is singular (det={np.linalg.det(G):.3e}, norm={norm:.3e})")
    T = np.linalg.inv(G).T
    phi = []
    for m in range(N):
        f = PiecewisePolyExp.zero()
        for k in range(N):
            if T[m, k] != 0.0:
                f = f + gens[k].scale(T[m, k])
        phi.append(f.simplify())
    kind = SystemKind.UNIVERSAL if localized_to is None else SystemKind.K_LOCALIZED
    return AdmissibleSystem(odo, kind, float(anchor), p, tuple(phi), support, localized_to)


def build_localized_system(
    odo: Odo,
    K: Interval,
    support: Interval | None = None,
    anchor: float | None = None,
    generators: Sequence[PiecewisePolyExp] | None = None,
) -> AdmissibleSystem:
    """K-localized system; analysis support defaults to ``K`` and anchor to ``K.lo``."""
    support = K if support is None else support
    anchor = K.lo if anchor is None else anchor
    return build_universal_system(odo, support, generators, anchor=anchor, localized_to=K)


def build_fundamental_system(odo: Odo, K: Interval) -> AdmissibleSystem:
    p = tuple(odo.null_ppe(n, K.lo) for n in range(1, odo.order + 1))
    return AdmissibleSystem(odo, SystemKind.K_FUNDAMENTAL, K.lo, p, None, None, K)


def kernel_eval(system: AdmissibleSystem, t, x: float, use_support: bool = True):
    """``g_phi(t, x) = g_L(t - x) - sum_n <g_L(. - x), phi_n> p_n(t)``.

    With ``use_support`` the known zero region of the kernel is returned as an
    exact zero instead of a cancelling floating-point difference.
    """
    x = float(x)
    t_arr = np.asarray(t, dtype=float)
    odo = system.odo
    if system.is_fundamental and x >= system.K.lo:
        return odo.green(t_arr - x)
    out = np.asarray(odo.green(t_arr - x), dtype=float)
    c = system.green_coefficients(x)
    for n in range(1, system.order + 1):
        if c[n - 1] != 0.0:
            out = out - c[n - 1] * system.null_eval(n, t_arr)
    if use_support and system.phi_support is not None:
        lo, hi = system.phi_support.lo, system.phi_support.hi
        outside = (x < np.minimum(t_arr, lo)) | (x > np.maximum(t_arr, hi))
        out = np.where(outside, 0.0, out)
    return float(out) if out.ndim == 0 else out


def kernel_ppe(system: AdmissibleSystem, x: float) -> PiecewisePolyExp:
    """The function ``t -> g_phi(t, x)`` as a PiecewisePolyExp."""
    f = system.odo.green_ppe(x)
    c = system.green_coefficients(x)
    for n in range(system.order):
        if c[n] != 0.0:
            f = f - system.p[n].scale(c[n])
    return f


def proj_nullspace(system: AdmissibleSystem, f: PiecewisePolyExp | Atoms1D) -> np.ndarray:
    """Coefficients ``c`` with ``proj f = sum_n c_n p_n``."""
    if isinstance(f, Atoms1D):
        c = np.zeros(system.order)
        for x, w in zip(f.knots, f.weights):
            c += w * system.green_coefficients(x)
        for n, v in enumerate(f.null_coeffs):
            c[n] += v
        return c
    return system.analysis(f)


def integrate_ppe(f: PiecewisePolyExp, interval: Interval) -> float:
    return f.integrate(interval.lo, interval.hi)

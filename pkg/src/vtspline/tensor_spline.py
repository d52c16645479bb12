"""Two-dimensional splines for ``L1 (x) L2``: atoms, innovations, seminorms.

A spline is a finite sum of four atom families

* Green x Green   ``a g1(t1 - x1) g2(t2 - x2)``
* poly x Green    ``b p1_n(t1) g2(t2 - y)``
* Green x poly    ``c g1(t1 - z) p2_n'(t2)``
* poly x poly     ``d p1_n(t1) p2_n'(t2)``

where ``g`` are the causal Green's functions and ``p`` the null-space bases of
the attached admissible systems.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from math import comb
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .odo_core import AdmissibleSystem, Interval, Odo, PiecewisePolyExp, build_fundamental_system

KNOT_TOL = 1e-12


class Family(Enum):
    TENSOR_GREEN = "TG"
    POLY_GREEN = "PG"
    GREEN_POLY = "GP"
    POLY_POLY = "PP"

    @property
    def code(self) -> int:
        return _FAMILY_CODES[self]

    @property
    def green1(self) -> bool:
        return self in (Family.TENSOR_GREEN, Family.GREEN_POLY)

    @property
    def green2(self) -> bool:
        return self in (Family.TENSOR_GREEN, Family.POLY_GREEN)


_FAMILY_CODES = {
    Family.TENSOR_GREEN: _kernels.FAM_TG,
    Family.POLY_GREEN: _kernels.FAM_PG,
    Family.GREEN_POLY: _kernels.FAM_GP,
    Family.POLY_POLY: _kernels.FAM_PP,
}


class Variant(Enum):
    CAUSAL = "causal"
    ACAUSAL = "acausal"


class Operator(Enum):
    L1_L2 = "L1xL2"
    PROJ_L2 = "projxL2"
    L1_PROJ = "L1xproj"
    PROJ_PROJ = "projxproj"


class InsufficientSmoothness(ValueError):
    pass


class OrderTooHigh(ValueError):
    pass


@dataclass(frozen=True)
class TensorAtom:
    """One atom. Unused index fields are 0 and unused knots are NaN."""

    family: Family
    weight: float
    n1: int = 0
    n2: int = 0
    x1: float = float("nan")
    x2: float = float("nan")

    def __post_init__(self) -> None:
        if not np.isfinite(self.weight):
            raise ValueError("atom weight must be finite")
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "x1", float(self.x1))
        object.__setattr__(self, "x2", float(self.x2))
        f = self.family
        if f.green1 != np.isfinite(self.x1) or f.green2 != np.isfinite(self.x2):
            raise ValueError(f"{f.name} atom has inconsistent knots ({self.x1}, {self.x2})")
        if (not f.green1 and self.n1 < 1) or (f.green1 and self.n1 != 0):
            raise ValueError(f"{f.name} atom has invalid axis-1 index {self.n1}")
        if (not f.green2 and self.n2 < 1) or (f.green2 and self.n2 != 0):
            raise ValueError(f"{f.name} atom has invalid axis-2 index {self.n2}")

    @classmethod
    def tensor_green(cls, a: float, x1: float, x2: float) -> "TensorAtom":
        return cls(Family.TENSOR_GREEN, a, x1=x1, x2=x2)

    @classmethod
    def poly_green(cls, n: int, b: float, y: float) -> "TensorAtom":
        return cls(Family.POLY_GREEN, b, n1=n, x2=y)

    @classmethod
    def green_poly(cls, n: int, c: float, z: float) -> "TensorAtom":
        return cls(Family.GREEN_POLY, c, n2=n, x1=z)

    @classmethod
    def poly_poly(cls, n: int, n2: int, d: float) -> "TensorAtom":
        return cls(Family.POLY_POLY, d, n1=n, n2=n2)

    def with_weight(self, w: float) -> "TensorAtom":
        return replace(self, weight=float(w))

    def same_slot(self, other: "TensorAtom", tol: float = KNOT_TOL) -> bool:
        """Same family, indices and knots (within ``tol``)."""
        if (self.family, self.n1, self.n2) != (other.family, other.n1, other.n2):
            return False
        for a, b in ((self.x1, other.x1), (self.x2, other.x2)):
            if np.isfinite(a) and abs(a - b) > tol:
                return False
        return True


class DiracList1D(NamedTuple):
    weights: np.ndarray
    knots: np.ndarray

    @classmethod
    def empty(cls) -> "DiracList1D":
        return cls(np.zeros(0), np.zeros(0))

    def merged(self, tol: float = KNOT_TOL) -> "DiracList1D":
        if self.knots.size == 0:
            return self
        order = np.argsort(self.knots, kind="stable")
        k, w = self.knots[order], self.weights[order]
        out_k, out_w = [k[0]], [w[0]]
        for x, v in zip(k[1:], w[1:]):
            if abs(x - out_k[-1]) <= tol:
                out_w[-1] += v
            else:
                out_k.append(x)
                out_w.append(v)
        return DiracList1D(np.array(out_w), np.array(out_k))

    def tv(self) -> float:
        """Total variation of the measure (coincident Diracs merged first)."""
        return float(np.sum(np.abs(self.merged().weights)))


class DiracList2D(NamedTuple):
    weights: np.ndarray
    points: np.ndarray  # shape (k, 2)

    @classmethod
    def empty(cls) -> "DiracList2D":
        return cls(np.zeros(0), np.zeros((0, 2)))

    def merged(self, tol: float = KNOT_TOL) -> "DiracList2D":
        if self.weights.size == 0:
            return self
        pts: list[np.ndarray] = []
        ws: list[float] = []
        for p, w in zip(self.points, self.weights):
            for i, q in enumerate(pts):
                if np.all(np.abs(p - q) <= tol):
                    ws[i] += w
                    break
            else:
                pts.append(p.copy())
                ws.append(float(w))
        return DiracList2D(np.array(ws), np.array(pts).reshape(-1, 2))

    def tv(self) -> float:
        return float(np.sum(np.abs(self.merged().weights)))


@dataclass(frozen=True)
class InnovationTriple:
    """Discrete innovations of a spline under ``L1xL2``, ``projxL2``, ``L1xproj``.

    ``null_matrix`` is the ``projxproj`` part in the p-bases of the systems used.
    """

    full2d: DiracList2D
    per_null1: tuple[DiracList1D, ...]
    per_null2: tuple[DiracList1D, ...]
    null_matrix: np.ndarray

    def total_masses(self) -> tuple[float, float, float]:
        return (
            float(np.sum(np.abs(self.full2d.weights))),
            float(sum(np.sum(np.abs(d.weights)) for d in self.per_null1)),
            float(sum(np.sum(np.abs(d.weights)) for d in self.per_null2)),
        )

    def pair(
        self,
        psi1: PiecewisePolyExp,
        psi2: PiecewisePolyExp,
        op: Operator,
        systems: tuple[AdmissibleSystem, AdmissibleSystem],
    ) -> float:
        """Pairing of the innovation selected by ``op`` with ``psi1 (x) psi2``."""
        if op is Operator.L1_L2:
            w, pts = self.full2d
            if w.size == 0:
                return 0.0
            return float(np.sum(w * psi1(pts[:, 0]) * psi2(pts[:, 1])))
        m1 = np.array([(p * psi1).integrate() for p in systems[0].p])
        m2 = np.array([(p * psi2).integrate() for p in systems[1].p])
        if op is Operator.PROJ_L2:
            return float(sum(m1[n] * np.sum(d.weights * psi2(d.knots)) for n, d in enumerate(self.per_null1) if d.knots.size))
        if op is Operator.L1_PROJ:
            return float(sum(m2[n] * np.sum(d.weights * psi1(d.knots)) for n, d in enumerate(self.per_null2) if d.knots.size))
        return float(m1 @ self.null_matrix @ m2)


@dataclass(frozen=True, eq=False)
class TensorSpline:
    systems: tuple[AdmissibleSystem, AdmissibleSystem]
    domain: tuple[Interval, Interval]
    atoms: tuple[TensorAtom, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(self.atoms))
        N1, N2 = self.orders
        for a in self.atoms:
            if a.n1 > N1 or a.n2 > N2:
                raise ValueError(f"null index of {a} exceeds the operator orders ({N1}, {N2})")

    # ------------------------------------------------------------ structure

    @property
    def odo1(self) -> Odo:
        return self.systems[0].odo

    @property
    def odo2(self) -> Odo:
        return self.systems[1].odo

    @property
    def orders(self) -> tuple[int, int]:
        return self.systems[0].order, self.systems[1].order

    @property
    def sparsity_count(self) -> int:
        return sum(1 for a in self.atoms if a.family is not Family.POLY_POLY)

    def family_atoms(self, family: Family) -> list[TensorAtom]:
        return [a for a in self.atoms if a.family is family]

    def with_atoms(self, atoms: Iterable[TensorAtom]) -> "TensorSpline":
        return TensorSpline(self.systems, self.domain, tuple(atoms))

    def scaled(self, s: float) -> "TensorSpline":
        return self.with_atoms(a.with_weight(s * a.weight) for a in self.atoms)

    def __add__(self, other: "TensorSpline") -> "TensorSpline":
        for s, o in zip(self.systems, other.systems):
            if s.odo != o.odo or s.anchor != o.anchor:
                raise ValueError("splines with different operators or null-space bases")
        return self.with_atoms(self.atoms + other.atoms)

    @cached_property
    def _arrays(self):
        fam = np.array([a.family.code for a in self.atoms], dtype=np.int64)
        i1 = np.array([a.n1 for a in self.atoms], dtype=np.int64)
        i2 = np.array([a.n2 for a in self.atoms], dtype=np.int64)
        w = np.array([a.weight for a in self.atoms], dtype=float)
        x1 = np.nan_to_num(np.array([a.x1 for a in self.atoms], dtype=float))
        x2 = np.nan_to_num(np.array([a.x2 for a in self.atoms], dtype=float))
        return fam, i1, i2, w, x1, x2

    # ------------------------------------------------------------ evaluation

    def __call__(self, t1, t2):
        return self.eval(t1, t2)

    def eval(self, t1, t2):
        t1, t2 = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
        shape = t1.shape
        a, b = self.systems
        out = _kernels.eval_tensor(
            np.ascontiguousarray(t1.ravel()),
            np.ascontiguousarray(t2.ravel()),
            *self._arrays,
            a.odo.alpha, a.odo.order, a.anchor,
            b.odo.alpha, b.odo.order, b.anchor,
        )
        out = out.reshape(shape)
        return float(out) if out.ndim == 0 else out

    def factor_ppe(self, atom: TensorAtom, axis: int) -> PiecewisePolyExp:
        """The one-dimensional factor of ``atom`` on ``axis`` (0 or 1), unit weight."""
        system = self.systems[axis]
        if axis == 0:
            return system.odo.green_ppe(atom.x1) if atom.family.green1 else system.p[atom.n1 - 1]
        return system.odo.green_ppe(atom.x2) if atom.family.green2 else system.p[atom.n2 - 1]


def fundamental_pair(odo1: Odo, odo2: Odo, domain: tuple[Interval, Interval]):
    return build_fundamental_system(odo1, domain[0]), build_fundamental_system(odo2, domain[1])


def make_spline(
    odo1: Odo,
    odo2: Odo,
    atoms: Sequence[TensorAtom] = (),
    domain: tuple[Interval, Interval] | None = None,
    systems: tuple[AdmissibleSystem, AdmissibleSystem] | None = None,
) -> TensorSpline:
    """Spline with K-fundamental systems on ``domain`` (default the unit square)."""
    domain = (Interval(0.0, 1.0), Interval(0.0, 1.0)) if domain is None else domain
    systems = fundamental_pair(odo1, odo2, domain) if systems is None else systems
    return TensorSpline(systems, domain, tuple(atoms))


def random_spline(
    rng: np.random.Generator,
    odo1: Odo,
    odo2: Odo,
    n_tensor: int,
    n_poly_green: int,
    n_green_poly: int,
    n_poly_poly: int = 0,
    domain: tuple[Interval, Interval] | None = None,
    systems: tuple[AdmissibleSystem, AdmissibleSystem] | None = None,
) -> TensorSpline:
    """Random knots in the open domain and standard normal amplitudes."""
    domain = (Interval(0.0, 1.0), Interval(0.0, 1.0)) if domain is None else domain
    K1, K2 = domain
    atoms: list[TensorAtom] = []
    for _ in range(n_tensor):
        atoms.append(TensorAtom.tensor_green(rng.standard_normal(), rng.uniform(K1.lo, K1.hi), rng.uniform(K2.lo, K2.hi)))
    for _ in range(n_poly_green):
        atoms.append(TensorAtom.poly_green(int(rng.integers(1, odo1.order + 1)), rng.standard_normal(), rng.uniform(K2.lo, K2.hi)))
    for _ in range(n_green_poly):
        atoms.append(TensorAtom.green_poly(int(rng.integers(1, odo2.order + 1)), rng.standard_normal(), rng.uniform(K1.lo, K1.hi)))
    for _ in range(n_poly_poly):
        atoms.append(
            TensorAtom.poly_poly(int(rng.integers(1, odo1.order + 1)), int(rng.integers(1, odo2.order + 1)), rng.standard_normal())
        )
    return make_spline(odo1, odo2, atoms, domain, systems)


def random_bump(rng: np.random.Generator, lo: float, hi: float, smoothness: int) -> PiecewisePolyExp:
    """Random compactly supported test function of the given smoothness inside ``[lo, hi]``."""
    a = rng.uniform(lo, lo + 0.6 * (hi - lo))
    b = rng.uniform(a + 0.2 * (hi - lo), hi)
    tilt = rng.standard_normal(2)
    return PiecewisePolyExp.bump(a, b, smoothness, tilt).scale(1.0 / ((b - a) / 2) ** (2 * smoothness))


# ---------------------------------------------------------------- innovation


def _factor_coefficients(spline: TensorSpline, atom: TensorAtom, axis: int, system: AdmissibleSystem) -> np.ndarray:
    """Null-space coefficients of the axis factor of ``atom`` in ``system``'s basis."""
    own = spline.systems[axis]
    green = atom.family.green1 if axis == 0 else atom.family.green2
    if green:
        return system.green_coefficients(atom.x1 if axis == 0 else atom.x2)
    n = atom.n1 if axis == 0 else atom.n2
    if system is own:
        e = np.zeros(system.order)
        e[n - 1] = 1.0
        return e
    return system.analysis(own.p[n - 1])


def innovation(
    spline: TensorSpline,
    systems: tuple[AdmissibleSystem, AdmissibleSystem] | None = None,
) -> InnovationTriple:
    """Discrete innovations; ``systems`` defaults to the spline's own pair."""
    s1, s2 = spline.systems if systems is None else systems
    N1, N2 = s1.order, s2.order
    full_w, full_p = [], []
    pn1: list[list[tuple[float, float]]] = [[] for _ in range(N1)]
    pn2: list[list[tuple[float, float]]] = [[] for _ in range(N2)]
    d = np.zeros((N1, N2))
    for atom in spline.atoms:
        w = atom.weight
        c1 = _factor_coefficients(spline, atom, 0, s1)
        c2 = _factor_coefficients(spline, atom, 1, s2)
        f = atom.family
        if f is Family.TENSOR_GREEN:
            full_w.append(w)
            full_p.append((atom.x1, atom.x2))
        if f.green2:
            for n in np.flatnonzero(c1):
                pn1[n].append((w * c1[n], atom.x2))
        if f.green1:
            for n in np.flatnonzero(c2):
                pn2[n].append((w * c2[n], atom.x1))
        d += w * np.outer(c1, c2)

    def _to_list(items):
        if not items:
            return DiracList1D.empty()
        arr = np.array(items)
        return DiracList1D(arr[:, 0].copy(), arr[:, 1].copy())

    full = DiracList2D(np.array(full_w), np.array(full_p).reshape(-1, 2)) if full_w else DiracList2D.empty()
    return InnovationTriple(full, tuple(_to_list(x) for x in pn1), tuple(_to_list(x) for x in pn2), d)


def weak_action(
    spline: TensorSpline,
    psi1: PiecewisePolyExp,
    psi2: PiecewisePolyExp,
    op: Operator,
) -> float:
    """``<Op f, psi1 (x) psi2>`` with adjoints moved onto the test functions.

    Projections use the systems' analysis functionals applied to each atom
    factor as a PiecewisePolyExp; all integrals are closed form.
    """
    s1, s2 = spline.systems
    acts1 = op in (Operator.L1_L2, Operator.L1_PROJ)
    acts2 = op in (Operator.L1_L2, Operator.PROJ_L2)
    if acts1 and psi1.smoothness(s1.order + 1) < s1.order:
        raise InsufficientSmoothness(f"axis-1 test function must be C^{s1.order - 1} with a bounded order-{s1.order} derivative")
    if acts2 and psi2.smoothness(s2.order + 1) < s2.order:
        raise InsufficientSmoothness(f"axis-2 test function must be C^{s2.order - 1} with a bounded order-{s2.order} derivative")
    adj1 = s1.odo.adjoint(psi1) if acts1 else None
    adj2 = s2.odo.adjoint(psi2) if acts2 else None
    m1 = np.array([(p * psi1).integrate() for p in s1.p])
    m2 = np.array([(p * psi2).integrate() for p in s2.p])
    cache: dict = {}

    def side(atom: TensorAtom, axis: int) -> float:
        green = atom.family.green1 if axis == 0 else atom.family.green2
        key = (axis, green, atom.x1 if axis == 0 else atom.x2, atom.n1 if axis == 0 else atom.n2)
        if key in cache:
            return cache[key]
        u = spline.factor_ppe(atom, axis)
        adj, m, system = (adj1, m1, s1) if axis == 0 else (adj2, m2, s2)
        val = (u * adj).integrate() if adj is not None else float(system.analysis(u) @ m)
        cache[key] = val
        return val

    total = 0.0
    for atom in spline.atoms:
        total += atom.weight * side(atom, 0) * side(atom, 1)
    return float(total)


# ---------------------------------------------------------------- seminorms


def seminorm(spline: TensorSpline, variant: Variant = Variant.CAUSAL) -> float:
    """Causal: boundary seminorm on the lower-left edges of K, in the spline's systems.

    Acausal (``alpha = 0`` only): interior mass plus derivative traces on all
    four edges; lower edges use left limits and upper edges right limits.
    """
    if variant is Variant.CAUSAL:
        inn = innovation(spline)
        return inn.full2d.tv() + sum(d.tv() for d in inn.per_null1) + sum(d.tv() for d in inn.per_null2)
    return _acausal_seminorm(spline)


def full_norm(spline: TensorSpline, systems: tuple[AdmissibleSystem, AdmissibleSystem] | None = None) -> float:
    """Seminorm part plus the entrywise l1 norm of the null-space matrix."""
    inn = innovation(spline, systems)
    return (
        inn.full2d.tv()
        + sum(d.tv() for d in inn.per_null1)
        + sum(d.tv() for d in inn.per_null2)
        + float(np.sum(np.abs(inn.null_matrix)))
    )


def _derivative_trace(spline: TensorSpline, atom: TensorAtom, axis: int, order: int, at: float, upper: bool) -> float:
    u = spline.factor_ppe(atom, axis).derivative(order)
    return float(u(at)) if upper else float(u.left_limit(at))


def _acausal_seminorm(spline: TensorSpline) -> float:
    if spline.odo1.alpha != 0.0 or spline.odo2.alpha != 0.0:
        raise ValueError("the acausal seminorm is defined for D^N (alpha = 0) only")
    K1, K2 = spline.domain
    N1, N2 = spline.orders
    tg = spline.family_atoms(Family.TENSOR_GREEN)
    inside = [a for a in tg if K1.contains(a.x1) and K2.contains(a.x2)]
    total = DiracList2D(np.array([a.weight for a in inside]), np.array([(a.x1, a.x2) for a in inside]).reshape(-1, 2)).tv() if inside else 0.0
    # traces on the vertical edges {K1-, K1+} x K2 of D^{n-1} (x) D^{N2}
    for axis, K_edge, K_other, N_edge in ((0, K1, K2, N1), (1, K2, K1, N2)):
        carriers = [a for a in spline.atoms if (a.family.green2 if axis == 0 else a.family.green1)]
        for n in range(1, N_edge + 1):
            for at, upper in ((K_edge.lo, False), (K_edge.hi, True)):
                ws, ks = [], []
                for a in carriers:
                    knot = a.x2 if axis == 0 else a.x1
                    if not K_other.contains(knot):
                        continue
                    v = _derivative_trace(spline, a, axis, n - 1, at, upper)
                    if v != 0.0:
                        ws.append(a.weight * v)
                        ks.append(knot)
                if ws:
                    total += DiracList1D(np.array(ws), np.array(ks)).tv()
    return float(total)


# ---------------------------------------------------------------- canonical form


def _at(x: float, edge: float) -> bool:
    return abs(x - edge) <= KNOT_TOL


def merge_atoms(atoms: Iterable[TensorAtom]) -> list[TensorAtom]:
    """Merge atoms sharing family, indices and knot; drop exact zeros."""
    out: list[TensorAtom] = []
    for a in atoms:
        for i, b in enumerate(out):
            if b.same_slot(a):
                out[i] = b.with_weight(b.weight + a.weight)
                break
        else:
            out.append(a)
    return [a for a in out if a.weight != 0.0]


def canonicalize(spline: TensorSpline) -> TensorSpline:
    """Move lower-edge knots into the null-space families and drop upper-edge atoms."""
    s1, s2 = spline.systems
    if not (s1.is_fundamental and s2.is_fundamental):
        raise ValueError("canonicalize needs K-fundamental systems on both axes")
    K1, K2 = s1.K, s2.K
    N1, N2 = spline.orders
    out: list[TensorAtom] = []
    for a in spline.atoms:
        f = a.family
        if (f.green1 and _at(a.x1, K1.hi)) or (f.green2 and _at(a.x2, K2.hi)):
            continue
        lo1 = f.green1 and _at(a.x1, K1.lo)
        lo2 = f.green2 and _at(a.x2, K2.lo)
        if f is Family.TENSOR_GREEN:
            if lo1 and lo2:
                a = TensorAtom.poly_poly(N1, N2, a.weight)
            elif lo1:
                a = TensorAtom.poly_green(N1, a.weight, a.x2)
            elif lo2:
                a = TensorAtom.green_poly(N2, a.weight, a.x1)
        elif f is Family.POLY_GREEN and lo2:
            a = TensorAtom.poly_poly(a.n1, N2, a.weight)
        elif f is Family.GREEN_POLY and lo1:
            a = TensorAtom.poly_poly(N1, a.n2, a.weight)
        out.append(a)
    return spline.with_atoms(merge_atoms(out))


class Decomposition(NamedTuple):
    tensor_green: TensorSpline
    poly_green: TensorSpline
    green_poly: TensorSpline
    poly_poly: TensorSpline


def decompose(spline: TensorSpline) -> Decomposition:
    return Decomposition(*(spline.with_atoms(spline.family_atoms(f)) for f in Family))


# ---------------------------------------------------------------- regularity


class RegularityReport(NamedTuple):
    bounded: bool
    max_abs: float
    max_abs_refined: float


def _stencil(d: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    offsets = (np.arange(d + 1) - d / 2.0) * h
    weights = np.array([(-1) ** (d - j) * comb(d, j) for j in range(d + 1)], dtype=float) / h**d
    return offsets, weights


def _avoid(points: np.ndarray, knots: np.ndarray, eps: float) -> np.ndarray:
    out = points.copy()
    for x in knots:
        close = np.abs(out - x) < eps
        out[close] = x + eps
    return out


def _fd_max(spline: TensorSpline, d1: int, d2: int, box, n: int, h: float, eps: float) -> float:
    a1, b1, a2, b2 = box
    t1 = a1 + (np.arange(n) + 0.5) * (b1 - a1) / n
    t2 = a2 + (np.arange(n) + 0.5) * (b2 - a2) / n
    knots1 = np.array([a.x1 for a in spline.atoms if a.family.green1])
    knots2 = np.array([a.x2 for a in spline.atoms if a.family.green2])
    t1, t2 = _avoid(t1, knots1, eps), _avoid(t2, knots2, eps)
    o1, w1 = _stencil(d1, h)
    o2, w2 = _stencil(d2, h)
    P1 = t1[:, None] + o1[None, :]
    P2 = t2[:, None] + o2[None, :]
    vals = spline.eval(P1[:, :, None, None], P2[None, None, :, :])  # (n, d1+1, n, d2+1)
    deriv = np.einsum("ajbk,j,k->ab", vals, w1, w2)
    return float(np.max(np.abs(deriv)))


def regularity_probe(
    spline: TensorSpline,
    d1: int,
    d2: int,
    sample_box: tuple[float, float, float, float] | None = None,
    n: int = 64,
    h: float = 1e-3,
    eps: float = 1e-4,
) -> RegularityReport:
    """Finite-difference probe of the mixed partial of order ``(d1, d2)``.

    Bounded means a finite maximum that changes by at most a factor 2 when
    the sample grid is refined once.
    """
    N1, N2 = spline.orders
    if d1 >= N1 or d2 >= N2 or d1 < 0 or d2 < 0:
        raise OrderTooHigh(f"partial order ({d1}, {d2}) needs d1 < {N1} and d2 < {N2}")
    K1, K2 = spline.domain
    box = (K1.lo, K1.hi, K2.lo, K2.hi) if sample_box is None else tuple(sample_box)
    coarse = _fd_max(spline, d1, d2, box, n, h, eps)
    fine = _fd_max(spline, d1, d2, box, 2 * n, h, eps)
    bounded = bool(np.isfinite(coarse) and np.isfinite(fine))
    if bounded and max(coarse, fine) > 0.0:
        bounded = max(coarse, fine) <= 2.0 * min(coarse, fine)
    return RegularityReport(bounded, coarse, fine)

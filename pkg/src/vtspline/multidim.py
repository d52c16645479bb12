"""Splines for ``D^N (x) ... (x) D^N`` on ``[0, 1]^D``.

An atom is a weighted product of one factor per axis, each either the
monomial ``t^n / n!`` (``n < N``) or the Green's function
``(t - x)_+^(N-1) / (N-1)!``. Atoms whose factors are all monomials span the
null space and are not penalized. Every other atom is charged ``|weight|``
once, on the face term indexed by ``N`` on its Green axes and by the monomial
degree on the others.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import factorial
from typing import Sequence, Union

import numpy as np

from .lasso import duality_gap, lambda_max as _lambda_max, objective as _objective, reduce_support, solve_block_lasso
from .measurements import Factor, PointFactor, WeightFactor, numerical_rank
from .odo_core import Interval, Odo, build_fundamental_system
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, RankDeficientNullBlock
from .tensor_spline import Family, TensorAtom, TensorSpline, make_spline

__all__ = [
    "MAX_DIMENSION",
    "PolyFactor",
    "GreenFactor",
    "MultiAtom",
    "MultiSpline",
    "MultiFunctional",
    "MultiGrid",
    "MultiCertification",
    "MultiResult",
    "multi_eval",
    "multi_seminorm",
    "face_index",
    "face_masses",
    "multi_canonicalize",
    "multi_measure",
    "multi_apply",
    "multi_solve",
    "multi_lambda_max",
    "from_tensor_spline",
    "to_tensor_spline",
]

MAX_DIMENSION = 4
UNIT = Interval(0.0, 1.0)


@dataclass(frozen=True)
class PolyFactor:
    """``t^n / n!``."""

    n: int

    def __call__(self, t, order: int):
        t = np.asarray(t, dtype=float)
        return t**self.n / factorial(self.n)


@dataclass(frozen=True)
class GreenFactor:
    """``(t - x)_+^(N-1) / (N-1)!`` with ``0^0 = 1``."""

    x: float

    def __call__(self, t, order: int):
        u = np.asarray(t, dtype=float) - self.x
        return np.where(u >= 0.0, np.maximum(u, 0.0) ** (order - 1) / factorial(order - 1), 0.0)


AxisFactor = Union[PolyFactor, GreenFactor]


@dataclass(frozen=True)
class MultiAtom:
    weight: float
    factors: tuple[AxisFactor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "factors", tuple(self.factors))
        if not np.isfinite(self.weight):
            raise ValueError("atom weight must be finite")

    @property
    def is_null(self) -> bool:
        return all(isinstance(f, PolyFactor) for f in self.factors)

    @property
    def green_axes(self) -> tuple[int, ...]:
        return tuple(d for d, f in enumerate(self.factors) if isinstance(f, GreenFactor))

    def with_weight(self, w: float) -> "MultiAtom":
        return MultiAtom(w, self.factors)

    def slot(self) -> tuple:
        return tuple(("G", f.x) if isinstance(f, GreenFactor) else ("P", f.n) for f in self.factors)


@dataclass(frozen=True, eq=False)
class MultiSpline:
    """Atoms plus a null-space coefficient tensor of shape ``(N,) * D``."""

    D: int
    N: int
    atoms: tuple[MultiAtom, ...] = ()
    null: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.D:
            raise ValueError("dimension must be at least 1")
        if self.N < 1:
            raise ValueError("order must be at least 1")
        object.__setattr__(self, "atoms", tuple(self.atoms))
        null = np.zeros((self.N,) * self.D) if self.null is None else np.asarray(self.null, dtype=float)
        if null.shape != (self.N,) * self.D:
            raise ValueError(f"null tensor must have shape {(self.N,) * self.D}")
        object.__setattr__(self, "null", null)
        for a in self.atoms:
            if len(a.factors) != self.D:
                raise ValueError("atom factor count differs from the dimension")
            for f in a.factors:
                if isinstance(f, PolyFactor) and not 0 <= f.n < self.N:
                    raise ValueError(f"monomial degree {f.n} outside 0..{self.N - 1}")

    @property
    def sparsity_count(self) -> int:
        return sum(1 for a in self.atoms if not a.is_null)

    def with_atoms(self, atoms, null=None) -> "MultiSpline":
        return MultiSpline(self.D, self.N, tuple(atoms), self.null if null is None else null)


def multi_eval(spline: MultiSpline, t) -> np.ndarray | float:
    """Evaluate at points ``t`` of shape ``(..., D)``."""
    t = np.asarray(t, dtype=float)
    if t.shape[-1] != spline.D:
        raise ValueError(f"points must have trailing dimension {spline.D}")
    N = spline.N
    out = np.zeros(t.shape[:-1])
    for a in spline.atoms:
        term = np.full(t.shape[:-1], a.weight)
        for d, f in enumerate(a.factors):
            term = term * f(t[..., d], N)
        out = out + term
    mono = [np.stack([PolyFactor(n)(t[..., d], N) for n in range(N)], axis=-1) for d in range(spline.D)]
    for idx in zip(*np.nonzero(spline.null)):
        term = np.full(t.shape[:-1], spline.null[idx])
        for d, n in enumerate(idx):
            term = term * mono[d][..., n]
        out = out + term
    return float(out) if out.ndim == 0 else out


def face_index(atom: MultiAtom, N: int) -> tuple[int, ...]:
    """Multi-index of the face term charged for ``atom`` (``N`` on Green axes)."""
    return tuple(N if isinstance(f, GreenFactor) else f.n for f in atom.factors)


def face_masses(spline: MultiSpline) -> dict[tuple[int, ...], float]:
    """l1 mass per face multi-index with ``max = N``."""
    out: dict[tuple[int, ...], float] = {}
    for a in spline.atoms:
        if a.is_null:
            continue
        key = face_index(a, spline.N)
        out[key] = out.get(key, 0.0) + abs(a.weight)
    return out


def multi_seminorm(spline: MultiSpline) -> float:
    return float(sum(abs(a.weight) for a in spline.atoms if not a.is_null))


def _merge(atoms: Sequence[MultiAtom]) -> list[MultiAtom]:
    acc: dict[tuple, MultiAtom] = {}
    for a in atoms:
        k = a.slot()
        acc[k] = a if k not in acc else acc[k].with_weight(acc[k].weight + a.weight)
    return [a for a in acc.values() if a.weight != 0.0]


def multi_canonicalize(spline: MultiSpline) -> MultiSpline:
    """Green factors at 0 become ``t^(N-1)/(N-1)!``; atoms with a knot at 1 are dropped; pure monomials move to the null tensor."""
    N = spline.N
    null = spline.null.copy()
    kept = []
    for a in spline.atoms:
        if any(isinstance(f, GreenFactor) and f.x >= 1.0 for f in a.factors):
            continue
        factors = tuple(PolyFactor(N - 1) if isinstance(f, GreenFactor) and f.x <= 0.0 else f for f in a.factors)
        b = MultiAtom(a.weight, factors)
        if b.is_null:
            null[tuple(f.n for f in factors)] += b.weight
        else:
            kept.append(b)
    return spline.with_atoms(_merge(kept), null)


# ---------------------------------------------------------------- measurements


@dataclass(frozen=True, eq=False)
class MultiFunctional:
    """Product of one 1D factor per axis."""

    factors: tuple[Factor, ...]

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "MultiFunctional":
        return cls(tuple(WeightFactor(float(a), float(b)) for a, b in zip(lo, hi)))

    @classmethod
    def dirac(cls, t: Sequence[float]) -> "MultiFunctional":
        return cls(tuple(PointFactor(float(v)) for v in t))

    @property
    def D(self) -> int:
        return len(self.factors)


def _check_functionals(functionals: Sequence[MultiFunctional], D: int, N: int) -> None:
    for i, fn in enumerate(functionals):
        if fn.D != D:
            raise ValueError(f"functional {i} has {fn.D} factors, expected {D}")
        if N < 2 and any(isinstance(f, PointFactor) for f in fn.factors):
            raise ValueError(f"functional {i}: DiracNeedsOrderTwo")


class _Responses:
    """Per-axis 1D responses of all functionals."""

    def __init__(self, functionals: Sequence[MultiFunctional], N: int):
        self.functionals = tuple(functionals)
        self.odo = Odo(0.0, N)
        self.system = build_fundamental_system(self.odo, UNIT)
        self.N = N
        D = functionals[0].D if functionals else 0
        self.null = [np.array([fn.factors[d].null_response(self.system) for fn in functionals]) for d in range(D)]

    def green(self, d: int, knots: np.ndarray) -> np.ndarray:
        return np.array([fn.factors[d].green_response(self.odo, knots) for fn in self.functionals]).reshape(
            len(self.functionals), len(knots)
        )


def multi_measure(spline: MultiSpline, fn: MultiFunctional) -> float:
    return float(_columns(spline.atoms, _Responses([fn], spline.N), spline.D)[0].sum() + _null_measure(spline, [fn])[0])


def _null_measure(spline: MultiSpline, functionals) -> np.ndarray:
    R = _Responses(functionals, spline.N)
    out = np.zeros(len(functionals))
    for idx in zip(*np.nonzero(spline.null)):
        col = np.full(len(functionals), spline.null[idx])
        for d, n in enumerate(idx):
            col = col * R.null[d][:, n]
        out += col
    return out


def _columns(atoms: Sequence[MultiAtom], R: _Responses, D: int) -> np.ndarray:
    M = len(R.functionals)
    out = np.ones((M, len(atoms)))
    for d in range(D):
        green = np.array([isinstance(a.factors[d], GreenFactor) for a in atoms], dtype=bool)
        if np.any(green):
            knots = np.array([a.factors[d].x for a, g in zip(atoms, green) if g])
            uniq, inv = np.unique(knots, return_inverse=True)
            out[:, green] *= R.green(d, uniq)[:, inv]
        if np.any(~green):
            deg = np.array([a.factors[d].n for a, g in zip(atoms, green) if not g])
            out[:, ~green] *= R.null[d][:, deg]
    return out * np.array([a.weight for a in atoms])[None, :]


def multi_apply(spline: MultiSpline, functionals: Sequence[MultiFunctional]) -> np.ndarray:
    _check_functionals(functionals, spline.D, spline.N)
    R = _Responses(functionals, spline.N)
    return _columns(spline.atoms, R, spline.D).sum(axis=1) + _null_measure(spline, functionals)


# ---------------------------------------------------------------- solving


def _default_points(green: int) -> int:
    return {1: 65, 2: 33, 3: 11, 4: 6}[green]


@dataclass(frozen=True, eq=False)
class MultiGrid:
    """One shared 1D knot set per number of Green axes of a face class."""

    knots: dict

    @classmethod
    def uniform(cls, D: int, points: dict | None = None) -> "MultiGrid":
        points = {g: _default_points(g) for g in range(1, D + 1)} if points is None else points
        return cls({g: np.linspace(0.0, 1.0, points[g]) for g in range(1, D + 1)})


def _face_classes(D: int, N: int) -> list[tuple]:
    choices = ["G"] + list(range(N))
    return [c for c in product(choices, repeat=D) if "G" in c]


def _dictionary_atoms(D: int, N: int, grid: MultiGrid) -> list[MultiAtom]:
    atoms = []
    for cls in _face_classes(D, N):
        green = [d for d, c in enumerate(cls) if c == "G"]
        knots = grid.knots[len(green)]
        for xs in product(knots, repeat=len(green)):
            it = iter(xs)
            atoms.append(MultiAtom(1.0, tuple(GreenFactor(float(next(it))) if c == "G" else PolyFactor(c) for c in cls)))
    return atoms


def _multi_dictionary(functionals, D: int, N: int, grid: MultiGrid | None):
    grid = MultiGrid.uniform(D) if grid is None else grid
    R = _Responses(functionals, N)
    atoms = _dictionary_atoms(D, N, grid)
    A = _columns(atoms, R, D)
    null_idx = list(product(range(N), repeat=D))
    B = np.ones((len(functionals), len(null_idx)))
    for k, idx in enumerate(null_idx):
        for d, n in enumerate(idx):
            B[:, k] *= R.null[d][:, n]
    if numerical_rank(B) < len(null_idx):
        raise RankDeficientNullBlock(f"null-space block has rank {numerical_rank(B)} < {len(null_idx)}")
    return atoms, A, B, null_idx


def multi_lambda_max(y, functionals: Sequence[MultiFunctional], D: int, N: int, grid: MultiGrid | None = None) -> float:
    """Smallest ``lam`` whose solution is a pure null-space fit."""
    _check_functionals(functionals, D, N)
    _, A, B, _ = _multi_dictionary(functionals, D, N, grid)
    return _lambda_max(A, B, np.asarray(y, dtype=float))


@dataclass(frozen=True)
class MultiCertification:
    sparsity_count: int
    bound: int
    sparsity_ok: bool
    containment_ok: bool
    gap_ok: bool
    interior_informational: bool

    @property
    def passed(self) -> bool:
        return self.sparsity_ok and self.containment_ok and self.gap_ok


@dataclass(frozen=True, eq=False)
class MultiResult:
    spline: MultiSpline
    objective: float
    duality_gap: float
    iterations: int
    certification: MultiCertification


def multi_solve(
    y,
    functionals: Sequence[MultiFunctional],
    lam: float,
    D: int,
    N: int,
    grid: MultiGrid | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    max_dimension: int = MAX_DIMENSION,
) -> MultiResult:
    """Grid solve, reduction to at most ``M - N^D`` atoms, canonicalization and certification."""
    if D > max_dimension:
        raise ValueError(f"dimension {D} exceeds the configured cap {max_dimension}")
    y = np.asarray(y, dtype=float).reshape(-1)
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    if y.size != len(functionals):
        raise ValueError("y and functionals differ in length")
    if y.size < N**D:
        raise ValueError(f"need M >= N^D = {N**D} functionals")
    _check_functionals(functionals, D, N)
    atoms, A, B, null_idx = _multi_dictionary(functionals, D, N, grid)
    sol = solve_block_lasso(A, B, y, lam, tol=tol, max_iter=max_iter)
    bound = y.size - len(null_idx)
    theta, d, _ = reduce_support(A, B, y, lam, sol.theta, bound)
    gap = duality_gap(A, B, y, lam, theta)
    null = np.zeros((N,) * D)
    for k, idx in enumerate(null_idx):
        null[idx] = d[k]
    raw = MultiSpline(D, N, [atoms[j].with_weight(theta[j]) for j in np.flatnonzero(theta)], null)
    spline = multi_canonicalize(raw)
    knots = [f.x for a in spline.atoms for f in a.factors if isinstance(f, GreenFactor)]
    count = spline.sparsity_count
    cert = MultiCertification(
        count,
        bound,
        count <= bound,
        all(0.0 <= x <= 1.0 for x in knots),
        gap <= tol,
        all(0.0 < x < 1.0 for x in knots),
    )
    return MultiResult(spline, _objective(A, B, y, lam, theta, d), gap, sol.iterations, cert)


# ---------------------------------------------------------------- 2D bridge


def from_tensor_spline(spline: TensorSpline) -> MultiSpline:
    """Same function as a ``D = 2`` multi spline (needs ``alpha = 0``, equal orders, anchors 0)."""
    (N1, N2) = spline.orders
    if N1 != N2 or spline.odo1.alpha != 0.0 or spline.odo2.alpha != 0.0:
        raise ValueError("the multi representation needs alpha = 0 and equal orders")
    if any(s.anchor != 0.0 for s in spline.systems):
        raise ValueError("the multi representation anchors monomials at 0")
    N = N1
    atoms, null = [], np.zeros((N, N))
    for a in spline.atoms:
        f1 = GreenFactor(a.x1) if a.family.green1 else PolyFactor(a.n1 - 1)
        f2 = GreenFactor(a.x2) if a.family.green2 else PolyFactor(a.n2 - 1)
        if a.family is Family.POLY_POLY:
            null[a.n1 - 1, a.n2 - 1] += a.weight
        else:
            atoms.append(MultiAtom(a.weight, (f1, f2)))
    return MultiSpline(2, N, atoms, null)


def to_tensor_spline(spline: MultiSpline) -> TensorSpline:
    """Inverse of :func:`from_tensor_spline` with fundamental systems on the unit square."""
    if spline.D != 2:
        raise ValueError("only D = 2 maps to a tensor spline")
    odo = Odo(0.0, spline.N)
    atoms = []
    for a in spline.atoms:
        f1, f2 = a.factors
        g1, g2 = isinstance(f1, GreenFactor), isinstance(f2, GreenFactor)
        if g1 and g2:
            atoms.append(TensorAtom.tensor_green(a.weight, f1.x, f2.x))
        elif g2:
            atoms.append(TensorAtom.poly_green(f1.n + 1, a.weight, f2.x))
        elif g1:
            atoms.append(TensorAtom.green_poly(f2.n + 1, a.weight, f1.x))
        else:
            atoms.append(TensorAtom.poly_poly(f1.n + 1, f2.n + 1, a.weight))
    for (i, j) in zip(*np.nonzero(spline.null)):
        atoms.append(TensorAtom.poly_poly(i + 1, j + 1, spline.null[i, j]))
    return make_spline(odo, odo, atoms)

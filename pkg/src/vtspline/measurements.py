"""Measurement functionals, admissibility, forward operator and assumption checks.

Every functional is separable: it is the product of one 1D factor per axis.
A factor is either a point evaluation or integration against a weight on an
interval. Responses of atoms are products of 1D responses, which are closed
form (fast antiderivative path for unit weights, PPE products otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .odo_core import AdmissibleSystem, Interval, Odo, PiecewisePolyExp
from .tensor_spline import Family, TensorAtom, TensorSpline

__all__ = [
    "PointFactor",
    "WeightFactor",
    "DiracSample",
    "SeparableBox",
    "SeparableProfile",
    "MeasurementFunctional",
    "Admissibility",
    "InadmissibleFunctional",
    "ForwardOperator",
    "AssumptionReport",
    "check_admissible",
    "require_admissible",
    "measure",
    "measure_atom_column",
    "check_assumptions",
]

RANK_REL_TOL = 1e-10


# ---------------------------------------------------------------- 1D factors


@dataclass(frozen=True)
class PointFactor:
    """``f -> f(t)``."""

    t: float

    @property
    def support(self) -> tuple[float, float]:
        return (self.t, self.t)

    def apply(self, u: PiecewisePolyExp) -> float:
        return float(u(self.t))

    def green_response(self, odo: Odo, knots: np.ndarray) -> np.ndarray:
        return np.asarray(_kernels.green_factor_np(self.t, np.asarray(knots, dtype=float), odo.alpha, odo.order), dtype=float)

    def null_response(self, system: AdmissibleSystem) -> np.ndarray:
        return np.array([system.null_eval(n, self.t) for n in range(1, system.order + 1)])


@dataclass(frozen=True, eq=False)
class WeightFactor:
    """``f -> int_lo^hi f(t) w(t) dt``; ``weight=None`` means ``w = 1``."""

    lo: float
    hi: float
    weight: PiecewisePolyExp | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"invalid factor interval [{self.lo}, {self.hi}]")

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def _weight_ppe(self) -> PiecewisePolyExp:
        if self.weight is None:
            return PiecewisePolyExp.single([1.0], lo=self.lo, hi=self.hi)
        return self.weight.refine([self.lo, self.hi]).product(PiecewisePolyExp.single([1.0], lo=self.lo, hi=self.hi))

    def apply(self, u: PiecewisePolyExp) -> float:
        return (u * self._weight_ppe()).integrate()

    def green_response(self, odo: Odo, knots: np.ndarray) -> np.ndarray:
        knots = np.asarray(knots, dtype=float)
        if self.weight is None:
            # int_lo^hi g(t - x) dt = Phi(hi - x) - Phi(lo - x), Phi(u) = 0 for u <= 0
            up = np.ascontiguousarray(np.maximum(self.hi - knots, 0.0))
            dn = np.ascontiguousarray(np.maximum(self.lo - knots, 0.0))
            return _kernels.green_antideriv(up, odo.alpha, odo.order) - _kernels.green_antideriv(dn, odo.alpha, odo.order)
        w = self._weight_ppe()
        return np.array([(odo.green_ppe(x) * w).integrate() for x in knots])

    def null_response(self, system: AdmissibleSystem) -> np.ndarray:
        odo = system.odo
        if self.weight is None:
            out = np.empty(system.order)
            for n in range(1, system.order + 1):
                ends = np.array([self.hi - system.anchor, self.lo - system.anchor])
                phi = _kernels.green_antideriv(ends, odo.alpha, n)
                out[n - 1] = phi[0] - phi[1]
            return out
        w = self._weight_ppe()
        return np.array([(p * w).integrate() for p in system.p])


Factor = Union[PointFactor, WeightFactor]


# ---------------------------------------------------------------- functionals


@dataclass(frozen=True)
class DiracSample:
    t: tuple[float, float]

    def factors(self) -> tuple[Factor, Factor]:
        return PointFactor(float(self.t[0])), PointFactor(float(self.t[1]))


@dataclass(frozen=True, eq=False)
class SeparableBox:
    """Integral over ``rect = (a1, b1, a2, b2)`` against ``w1(t1) w2(t2)``."""

    rect: tuple[float, float, float, float]
    weight1: PiecewisePolyExp | None = None
    weight2: PiecewisePolyExp | None = None

    def factors(self) -> tuple[Factor, Factor]:
        a1, b1, a2, b2 = (float(v) for v in self.rect)
        return WeightFactor(a1, b1, self.weight1), WeightFactor(a2, b2, self.weight2)


@dataclass(frozen=True, eq=False)
class SeparableProfile:
    """Integral against ``f1(t1) f2(t2)`` with compactly supported factors."""

    f1: PiecewisePolyExp
    f2: PiecewisePolyExp

    def __post_init__(self) -> None:
        for f in (self.f1, self.f2):
            lo, hi = f.simplify().support
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError("profile factors must be compactly supported")

    def factors(self) -> tuple[Factor, Factor]:
        s1, s2 = self.f1.simplify(), self.f2.simplify()
        return WeightFactor(*s1.support, s1), WeightFactor(*s2.support, s2)


MeasurementFunctional = Union[DiracSample, SeparableBox, SeparableProfile]


def functional_support(fn: MeasurementFunctional) -> tuple[float, float, float, float]:
    f1, f2 = fn.factors()
    return (*f1.support, *f2.support)


# ---------------------------------------------------------------- admissibility


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    reason: str | None = None
    axis: int | None = None

    def __bool__(self) -> bool:
        return self.ok


class InadmissibleFunctional(ValueError):
    def __init__(self, verdict: Admissibility, index: int | None = None):
        where = "" if index is None else f"functional {index}: "
        super().__init__(f"{where}{verdict.reason} (axis {verdict.axis})")
        self.verdict = verdict
        self.index = index


def check_admissible(fn: MeasurementFunctional, odo1: Odo, odo2: Odo) -> Admissibility:
    """Point samples need order >= 2 on both axes; integral functionals always pass."""
    if isinstance(fn, DiracSample):
        for axis, odo in ((1, odo1), (2, odo2)):
            if odo.order < 2:
                return Admissibility(False, "DiracNeedsOrderTwo", axis)
        return Admissibility(True)
    if isinstance(fn, (SeparableBox, SeparableProfile)):
        return Admissibility(True)
    raise TypeError(f"unknown functional type {type(fn).__name__}")


def require_admissible(functionals: Sequence[MeasurementFunctional], odo1: Odo, odo2: Odo) -> None:
    for i, fn in enumerate(functionals):
        verdict = check_admissible(fn, odo1, odo2)
        if not verdict:
            raise InadmissibleFunctional(verdict, i)


# ---------------------------------------------------------------- measuring


def _factor_response(factor: Factor, spline: TensorSpline, atom: TensorAtom, axis: int) -> float:
    system = spline.systems[axis]
    if (atom.family.green1 if axis == 0 else atom.family.green2):
        knot = atom.x1 if axis == 0 else atom.x2
        return float(factor.green_response(system.odo, np.array([knot]))[0])
    n = atom.n1 if axis == 0 else atom.n2
    return float(factor.null_response(system)[n - 1])


def measure(spline: TensorSpline, fn: MeasurementFunctional) -> float:
    """``<spline, fn>`` as a sum of products of 1D closed-form responses."""
    verdict = check_admissible(fn, spline.odo1, spline.odo2)
    if not verdict:
        raise InadmissibleFunctional(verdict)
    f1, f2 = fn.factors()
    total = 0.0
    for atom in spline.atoms:
        if atom.weight == 0.0:
            continue
        total += atom.weight * _factor_response(f1, spline, atom, 0) * _factor_response(f2, spline, atom, 1)
    return float(total)


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    functionals: tuple[MeasurementFunctional, ...]
    domain: tuple[Interval, Interval]
    _factors: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "functionals", tuple(self.functionals))
        object.__setattr__(self, "_factors", tuple(fn.factors() for fn in self.functionals))

    @property
    def M(self) -> int:
        return len(self.functionals)

    def axis_factors(self, axis: int) -> list[Factor]:
        return [f[axis] for f in self._factors]

    def green_responses(self, axis: int, odo: Odo, knots: np.ndarray) -> np.ndarray:
        """``R[m, j] = <g(. - knots[j]), factor_m>`` on ``axis``."""
        knots = np.asarray(knots, dtype=float)
        return np.array([f.green_response(odo, knots) for f in self.axis_factors(axis)]).reshape(self.M, knots.size)

    def null_responses(self, axis: int, system: AdmissibleSystem) -> np.ndarray:
        return np.array([f.null_response(system) for f in self.axis_factors(axis)]).reshape(self.M, system.order)

    def apply(self, spline: TensorSpline) -> np.ndarray:
        return np.array([measure(spline, fn) for fn in self.functionals])

    def columns(self, atoms: Sequence[TensorAtom], systems: tuple[AdmissibleSystem, AdmissibleSystem]) -> np.ndarray:
        """Matrix whose column ``k`` is the response to ``atoms[k]`` (weight included)."""
        atoms = list(atoms)
        out = np.zeros((self.M, len(atoms)))
        if not atoms:
            return out
        s1, s2 = systems
        sides = []
        for axis, system in ((0, s1), (1, s2)):
            green = np.array([a.family.green1 if axis == 0 else a.family.green2 for a in atoms])
            knots = np.array([(a.x1 if axis == 0 else a.x2) for a in atoms])
            idx = np.array([(a.n1 if axis == 0 else a.n2) for a in atoms])
            R = np.zeros((self.M, len(atoms)))
            if np.any(green):
                uniq, inv = np.unique(knots[green], return_inverse=True)
                R[:, green] = self.green_responses(axis, system.odo, uniq)[:, inv]
            if np.any(~green):
                Nr = self.null_responses(axis, system)
                R[:, ~green] = Nr[:, idx[~green] - 1]
            sides.append(R)
        w = np.array([a.weight for a in atoms])
        return sides[0] * sides[1] * w[None, :]


def measure_atom_column(atom: TensorAtom, fwd: ForwardOperator, systems: tuple[AdmissibleSystem, AdmissibleSystem]) -> np.ndarray:
    require_admissible(fwd.functionals, systems[0].odo, systems[1].odo)
    return fwd.columns([atom], systems)[:, 0]


# ---------------------------------------------------------------- assumptions


@dataclass(frozen=True)
class AssumptionReport:
    null_rank: int
    null_rank_required: int
    injective: bool
    support_inclusion: bool
    outside_support: tuple[int, ...]
    admissibility: tuple[Admissibility, ...]
    surjective: bool
    probe_rank: int
    weak_star_continuity: str = "by construction"

    @property
    def admissible(self) -> bool:
        return all(v.ok for v in self.admissibility)

    @property
    def passed(self) -> bool:
        return self.injective and self.support_inclusion and self.admissible and self.surjective

    def failures(self) -> list[str]:
        out = []
        if not self.admissible:
            for i, v in enumerate(self.admissibility):
                if not v.ok:
                    out.append(f"functional {i}: {v.reason} (axis {v.axis})")
        if not self.injective:
            out.append(f"null-space block rank {self.null_rank} < {self.null_rank_required}")
        if not self.support_inclusion:
            out.append(f"functionals {list(self.outside_support)} not supported in K")
        if not self.surjective:
            out.append(f"probe dictionary rank {self.probe_rank} < M")
        return out


def numerical_rank(A: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > rel_tol * s[0])) if s[0] > 0 else 0


def check_assumptions(
    fwd: ForwardOperator,
    systems: tuple[AdmissibleSystem, AdmissibleSystem],
    localized: bool = True,
    probe_points: int = 17,
) -> AssumptionReport:
    """Injectivity on the null space, support inclusion, admissibility, probe surjectivity."""
    s1, s2 = systems
    N1, N2 = s1.order, s2.order
    verdicts = tuple(check_admissible(fn, s1.odo, s2.odo) for fn in fwd.functionals)
    K1, K2 = fwd.domain
    outside = []
    if localized:
        for i, fn in enumerate(fwd.functionals):
            a1, b1, a2, b2 = functional_support(fn)
            if not (K1.lo <= a1 and b1 <= K1.hi and K2.lo <= a2 and b2 <= K2.hi):
                outside.append(i)
    if not all(v.ok for v in verdicts):
        # responses of inadmissible functionals are not defined; report the gate only
        return AssumptionReport(0, N1 * N2, False, not outside, tuple(outside), verdicts, False, 0)
    B = np.einsum("mi,mj->mij", fwd.null_responses(0, s1), fwd.null_responses(1, s2)).reshape(fwd.M, N1 * N2)
    rank = numerical_rank(B)
    g1 = np.linspace(K1.lo, K1.hi, probe_points)
    g2 = np.linspace(K2.lo, K2.hi, probe_points)
    probe_atoms = [TensorAtom.tensor_green(1.0, x1, x2) for x1 in g1[:-1] for x2 in g2[:-1]]
    probe_atoms += [TensorAtom.poly_green(n, 1.0, y) for n in range(1, N1 + 1) for y in g2[:-1]]
    probe_atoms += [TensorAtom.green_poly(n, 1.0, z) for n in range(1, N2 + 1) for z in g1[:-1]]
    D = np.hstack([fwd.columns(probe_atoms, systems), B])
    prank = numerical_rank(D)
    return AssumptionReport(
        null_rank=rank,
        null_rank_required=N1 * N2,
        injective=rank == N1 * N2,
        support_inclusion=not outside,
        outside_support=tuple(outside),
        admissibility=verdicts,
        surjective=prank == fwd.M,
        probe_rank=prank,
    )

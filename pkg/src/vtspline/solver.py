"""Grid solver for the regularized tensor-spline inverse problem.

The continuous problem ``0.5||y - M f||^2 + lam |f|`` is discretized by
restricting knots to candidate grids. Green x Green, poly x Green and
Green x poly atoms become penalized columns ``A``; the poly x poly atoms
form the unpenalized block ``B``. The resulting l1 problem is solved to a
certified duality gap, reduced to an extreme point, canonicalized and
certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .lasso import (
    NoConvergence,
    NumericalStall,
    TooLarge,
    brute_force,
    duality_gap,
    lambda_max as _lambda_max,
    objective as _objective,
    reduce_support,
    solve_block_lasso,
)
from .measurements import (
    AssumptionReport,
    ForwardOperator,
    MeasurementFunctional,
    check_assumptions,
    numerical_rank,
    require_admissible,
)
from .odo_core import AdmissibleSystem, Interval, Odo
from .tensor_spline import (
    KNOT_TOL,
    Family,
    TensorAtom,
    TensorSpline,
    Variant,
    canonicalize,
    fundamental_pair,
    seminorm,
)

__all__ = [
    "AssumptionViolation",
    "RankDeficientNullBlock",
    "NoConvergence",
    "NumericalStall",
    "TooLarge",
    "Problem",
    "GridSpec",
    "Dictionary",
    "Certification",
    "SolveResult",
    "assemble_dictionary",
    "lambda_max",
    "solve_grid",
    "brute_force_oracle",
    "reduce_to_extreme_point",
    "refine_grid",
    "certify",
    "solve",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200_000


class AssumptionViolation(ValueError):
    def __init__(self, report: AssumptionReport):
        super().__init__("; ".join(report.failures()))
        self.report = report


class RankDeficientNullBlock(ValueError):
    pass


# ---------------------------------------------------------------- problem


@dataclass(frozen=True, eq=False)
class Problem:
    """Data, forward operator, regularization weight and K-fundamental systems."""

    y: np.ndarray
    fwd: ForwardOperator
    lam: float
    systems: tuple[AdmissibleSystem, AdmissibleSystem]
    fidelity: str = "quadratic"
    null_block: bool = True
    validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float).reshape(-1)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")
        if y.size != self.fwd.M:
            raise ValueError(f"y has length {y.size} but there are {self.fwd.M} functionals")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        if self.fidelity != "quadratic":
            raise ValueError(f"unsupported fidelity {self.fidelity!r}")
        if not all(s.is_fundamental for s in self.systems):
            raise ValueError("the solver needs K-fundamental systems on both axes")
        for s, K in zip(self.systems, self.fwd.domain):
            if s.K != K:
                raise ValueError("systems and forward operator disagree on the domain")
        if self.validate:
            require_admissible(self.fwd.functionals, self.odo1, self.odo2)
            report = self.assumptions()
            if not report.passed and (self.null_block or report.failures() != self._null_only(report)):
                raise AssumptionViolation(report)

    @staticmethod
    def _null_only(report: AssumptionReport) -> list[str]:
        return [f for f in report.failures() if f.startswith("null-space block")]

    @classmethod
    def create(
        cls,
        odo1: Odo,
        odo2: Odo,
        functionals: Sequence[MeasurementFunctional],
        y,
        lam: float,
        domain: tuple[Interval, Interval] | None = None,
        **kwargs,
    ) -> "Problem":
        domain = (Interval(0.0, 1.0), Interval(0.0, 1.0)) if domain is None else domain
        return cls(y, ForwardOperator(tuple(functionals), domain), lam, fundamental_pair(odo1, odo2, domain), **kwargs)

    @property
    def odo1(self) -> Odo:
        return self.systems[0].odo

    @property
    def odo2(self) -> Odo:
        return self.systems[1].odo

    @property
    def domain(self) -> tuple[Interval, Interval]:
        return self.fwd.domain

    @property
    def M(self) -> int:
        return self.fwd.M

    @property
    def null_dim(self) -> int:
        return self.systems[0].order * self.systems[1].order if self.null_block else 0

    @property
    def sparsity_bound(self) -> int:
        return self.M - self.null_dim

    def assumptions(self) -> AssumptionReport:
        return check_assumptions(self.fwd, self.systems)

    def with_data(self, y, lam: float | None = None) -> "Problem":
        return replace(self, y=np.asarray(y, dtype=float), lam=self.lam if lam is None else lam, validate=False)


# ---------------------------------------------------------------- grids


def _unique_sorted(x: np.ndarray) -> np.ndarray:
    return np.unique(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Candidate knots per family and the current spacing of each grid.

    ``spacing`` is ``(h2d_axis1, h2d_axis2, h1d_axis1, h1d_axis2)``.
    """

    grid2d: np.ndarray
    grid1d_axis2: np.ndarray
    grid1d_axis1: np.ndarray
    levels: int = 3
    spacing: tuple[float, float, float, float] = (np.inf, np.inf, np.inf, np.inf)

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid2d", np.asarray(self.grid2d, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "grid1d_axis2", np.asarray(self.grid1d_axis2, dtype=float).reshape(-1))
        object.__setattr__(self, "grid1d_axis1", np.asarray(self.grid1d_axis1, dtype=float).reshape(-1))
        if self.levels < 0:
            raise ValueError("levels must be non-negative")

    @classmethod
    def uniform(
        cls, domain: tuple[Interval, Interval], n2d: int = 33, n1d: int = 65, levels: int = 3
    ) -> "GridSpec":
        K1, K2 = domain
        a1 = np.linspace(K1.lo, K1.hi, n2d)
        a2 = np.linspace(K2.lo, K2.hi, n2d)
        g2 = np.array([(u, v) for u in a1 for v in a2]).reshape(-1, 2)
        b1 = np.linspace(K1.lo, K1.hi, n1d)
        b2 = np.linspace(K2.lo, K2.hi, n1d)
        h = (
            K1.width / max(n2d - 1, 1),
            K2.width / max(n2d - 1, 1),
            K1.width / max(n1d - 1, 1),
            K2.width / max(n1d - 1, 1),
        )
        return cls(g2, b2, b1, levels, h)

    @property
    def size(self) -> int:
        return len(self.grid2d) + len(self.grid1d_axis2) + len(self.grid1d_axis1)

    def check_inside(self, domain: tuple[Interval, Interval]) -> None:
        K1, K2 = domain
        bad = (
            np.any((self.grid2d[:, 0] < K1.lo) | (self.grid2d[:, 0] > K1.hi))
            or np.any((self.grid2d[:, 1] < K2.lo) | (self.grid2d[:, 1] > K2.hi))
            or np.any((self.grid1d_axis2 < K2.lo) | (self.grid1d_axis2 > K2.hi))
            or np.any((self.grid1d_axis1 < K1.lo) | (self.grid1d_axis1 > K1.hi))
        )
        if bad:
            raise ValueError("candidate knots must lie in the closed domain rectangle")


# ---------------------------------------------------------------- dictionary


@dataclass(frozen=True, eq=False)
class Dictionary:
    """``A`` columns are unit-weight penalized atoms, ``B`` columns the poly x poly atoms."""

    A: np.ndarray
    B: np.ndarray
    atoms: tuple[TensorAtom, ...]
    null_atoms: tuple[TensorAtom, ...]

    @property
    def P(self) -> int:
        return self.A.shape[1]


def _grid_atoms(problem: Problem, grid: GridSpec) -> list[TensorAtom]:
    N1, N2 = problem.systems[0].order, problem.systems[1].order
    atoms = [TensorAtom.tensor_green(1.0, x1, x2) for x1, x2 in grid.grid2d]
    atoms += [TensorAtom.poly_green(n, 1.0, y) for n in range(1, N1 + 1) for y in grid.grid1d_axis2]
    atoms += [TensorAtom.green_poly(n, 1.0, z) for n in range(1, N2 + 1) for z in grid.grid1d_axis1]
    return atoms


def assemble_dictionary(problem: Problem, grid: GridSpec) -> Dictionary:
    if grid.size == 0:
        raise ValueError("empty grid")
    grid.check_inside(problem.domain)
    require_admissible(problem.fwd.functionals, problem.odo1, problem.odo2)
    atoms = _grid_atoms(problem, grid)
    A = problem.fwd.columns(atoms, problem.systems)
    N1, N2 = problem.systems[0].order, problem.systems[1].order
    null_atoms: list[TensorAtom] = []
    if problem.null_block:
        null_atoms = [TensorAtom.poly_poly(n, m, 1.0) for n in range(1, N1 + 1) for m in range(1, N2 + 1)]
    B = problem.fwd.columns(null_atoms, problem.systems).reshape(problem.M, len(null_atoms))
    if null_atoms and numerical_rank(B) < len(null_atoms):
        raise RankDeficientNullBlock(f"null-space block has rank {numerical_rank(B)} < {len(null_atoms)}")
    return Dictionary(np.ascontiguousarray(A), np.ascontiguousarray(B), tuple(atoms), tuple(null_atoms))


def lambda_max(problem: Problem, grid: GridSpec) -> float:
    D = assemble_dictionary(problem, grid)
    return _lambda_max(D.A, D.B, problem.y)


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class Certification:
    sparsity_count: int
    bound: int
    sparsity_ok: bool
    localization_ok: bool
    interior_ok: bool
    gap_ok: bool
    duality_gap: float
    tol: float
    offending: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.sparsity_ok and self.localization_ok and self.interior_ok and self.gap_ok

    def verdicts(self) -> dict[str, bool]:
        return {
            "sparsity": self.sparsity_ok,
            "localization": self.localization_ok,
            "interior": self.interior_ok,
            "duality_gap": self.gap_ok,
        }


@dataclass(frozen=True, eq=False)
class SolveResult:
    spline: TensorSpline
    objective: float
    duality_gap: float
    iterations: int
    certification: Certification | None = None
    theta: np.ndarray | None = None
    d: np.ndarray | None = None
    dictionary: Dictionary | None = None
    grid: GridSpec | None = None
    tol: float = DEFAULT_TOL
    history: tuple[float, ...] = ()

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.theta) if self.theta is not None else np.zeros(0, dtype=int)


def _spline_from(problem: Problem, D: Dictionary, theta: np.ndarray, d: np.ndarray) -> TensorSpline:
    atoms = [D.atoms[j].with_weight(theta[j]) for j in np.flatnonzero(theta)]
    atoms += [a.with_weight(w) for a, w in zip(D.null_atoms, d) if w != 0.0]
    return TensorSpline(problem.systems, problem.domain, tuple(atoms))


def spline_objective(problem: Problem, spline: TensorSpline) -> float:
    r = problem.y - problem.fwd.apply(spline)
    return 0.5 * float(r @ r) + problem.lam * seminorm(spline, Variant.CAUSAL)


# ---------------------------------------------------------------- solving


def solve_grid(
    problem: Problem,
    grid: GridSpec,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    theta0: np.ndarray | None = None,
    dictionary: Dictionary | None = None,
) -> SolveResult:
    """Certified solution of the discretized problem on ``grid`` (before reduction)."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    D = assemble_dictionary(problem, grid) if dictionary is None else dictionary
    sol = solve_block_lasso(D.A, D.B, problem.y, problem.lam, tol=tol, max_iter=max_iter, theta0=theta0)
    spline = _spline_from(problem, D, sol.theta, sol.d)
    return SolveResult(
        spline, sol.objective, sol.gap, sol.iterations, None, sol.theta, sol.d, D, grid, tol, (sol.objective,)
    )


def brute_force_oracle(problem: Problem, grid: GridSpec, max_support: int) -> float:
    """Exhaustive optimum over supports of size ``<= max_support``."""
    if grid.size and len(_grid_atoms(problem, grid)) > 50:
        raise TooLarge("oracle limited to P <= 50 candidate atoms")
    D = assemble_dictionary(problem, grid)
    obj, _, _ = brute_force(D.A, D.B, problem.y, problem.lam, max_support)
    return obj


def _merge_duplicate_columns(D: Dictionary, theta: np.ndarray) -> np.ndarray:
    theta = theta.copy()
    active = np.flatnonzero(theta)
    atoms = [D.atoms[i] for i in active]
    code = np.array([(a.family.code * 64 + a.n1) * 64 + a.n2 for a in atoms], dtype=np.int64)
    x1 = np.nan_to_num(np.array([a.x1 for a in atoms], dtype=float))
    x2 = np.nan_to_num(np.array([a.x2 for a in atoms], dtype=float))
    for k, i in enumerate(active):
        if theta[i] == 0.0:
            continue
        same = (code[k + 1:] == code[k]) & (np.abs(x1[k + 1:] - x1[k]) <= KNOT_TOL) & (np.abs(x2[k + 1:] - x2[k]) <= KNOT_TOL)
        for j in active[k + 1:][same]:
            if theta[j] != 0.0:
                theta[i] += theta[j]
                theta[j] = 0.0
    return theta


def reduce_to_extreme_point(result: SolveResult, problem: Problem) -> SolveResult:
    """Reduce to at most ``M - N1 N2`` penalized atoms, canonicalize and certify."""
    D = result.dictionary
    if D is None or result.theta is None:
        raise ValueError("reduction needs the grid coefficients of the result")
    theta = _merge_duplicate_columns(D, result.theta)
    theta, d, _ = reduce_support(D.A, D.B, problem.y, problem.lam, theta, problem.sparsity_bound)
    gap = duality_gap(D.A, D.B, problem.y, problem.lam, theta)
    spline = canonicalize(_spline_from(problem, D, theta, d))
    obj = _objective(D.A, D.B, problem.y, problem.lam, theta, d)
    reduced = replace(result, spline=spline, objective=obj, duality_gap=gap, theta=theta, d=d)
    return replace(reduced, certification=certify(reduced, problem))


def refine_grid(problem: Problem, result: SolveResult, grid: GridSpec) -> GridSpec:
    """Insert ``{x - h/2, x, x + h/2}`` around every active knot and halve the spacing."""
    if grid.levels <= 0:
        raise ValueError("no refinement level remaining")
    K1, K2 = problem.domain
    h21, h22, h11, h12 = grid.spacing
    active = [a for a in result.spline.atoms if a.family is not Family.POLY_POLY]
    if not active:
        return grid
    off = np.array([-0.5, 0.0, 0.5])
    new2d, new_ax2, new_ax1 = [grid.grid2d], [grid.grid1d_axis2], [grid.grid1d_axis1]
    for a in active:
        if a.family is Family.TENSOR_GREEN:
            u = np.clip(a.x1 + off * h21, K1.lo, K1.hi)
            v = np.clip(a.x2 + off * h22, K2.lo, K2.hi)
            new2d.append(np.array([(p, q) for p in u for q in v]))
        elif a.family is Family.POLY_GREEN:
            new_ax2.append(np.clip(a.x2 + off * h12, K2.lo, K2.hi))
        else:
            new_ax1.append(np.clip(a.x1 + off * h11, K1.lo, K1.hi))
    g2 = np.unique(np.vstack(new2d), axis=0)
    return GridSpec(
        g2,
        _unique_sorted(np.concatenate(new_ax2)),
        _unique_sorted(np.concatenate(new_ax1)),
        grid.levels - 1,
        (h21 / 2, h22 / 2, h11 / 2, h12 / 2),
    )


def certify(result: SolveResult, problem: Problem, tol: float | None = None) -> Certification:
    tol = result.tol if tol is None else tol
    spline = result.spline
    K1, K2 = problem.domain
    bound = problem.sparsity_bound
    count = spline.sparsity_count
    offending: dict[str, list[TensorAtom]] = {}
    outside, boundary = [], []
    for a in spline.atoms:
        f = a.family
        knots = []
        if f.green1:
            knots.append((a.x1, K1))
        if f.green2:
            knots.append((a.x2, K2))
        if any(not K.contains(x) for x, K in knots):
            outside.append(a)
        elif any(not K.interior(x) for x, K in knots):
            boundary.append(a)
    if count > bound:
        offending["sparsity"] = [a for a in spline.atoms if a.family is not Family.POLY_POLY]
    if outside:
        offending["localization"] = outside
    if outside or boundary:
        offending["interior"] = outside + boundary
    gap_ok = bool(result.duality_gap <= tol)
    return Certification(
        count, bound, count <= bound, not outside, not (outside or boundary), gap_ok, result.duality_gap, tol, offending
    )


def _embed(old: Dictionary, theta: np.ndarray, new: Dictionary) -> np.ndarray:
    """Carry coefficients over to a refined dictionary (old atoms are a subset)."""
    out = np.zeros(new.P)
    index = {(a.family, a.n1, a.n2, a.x1 if a.family.green1 else 0.0, a.x2 if a.family.green2 else 0.0): j
             for j, a in enumerate(new.atoms)}
    for j in np.flatnonzero(theta):
        a = old.atoms[j]
        key = (a.family, a.n1, a.n2, a.x1 if a.family.green1 else 0.0, a.x2 if a.family.green2 else 0.0)
        if key in index:
            out[index[key]] += theta[j]
    return out


def solve(
    problem: Problem,
    grid: GridSpec | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    reduce: bool = True,
) -> SolveResult:
    """Solve, refine around active knots for ``grid.levels`` rounds, reduce and certify."""
    grid = GridSpec.uniform(problem.domain) if grid is None else grid
    result = solve_grid(problem, grid, tol, max_iter)
    history = [result.objective]
    while grid.levels > 0:
        finer = refine_grid(problem, result, grid)
        if finer is grid:
            break
        D = assemble_dictionary(problem, finer)
        warm = _embed(result.dictionary, result.theta, D)
        result = solve_grid(problem, finer, tol, max_iter, theta0=warm, dictionary=D)
        history.append(result.objective)
        grid = finer
    result = replace(result, history=tuple(history))
    return reduce_to_extreme_point(result, problem) if reduce else result

"""Property suites behind ``vtspline verify`` and the acceptance tests.

Each suite returns :class:`Check` records carrying the measured quantity and
the threshold it was compared against.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .measurements import (
    DiracSample,
    ForwardOperator,
    InadmissibleFunctional,
    SeparableBox,
    SeparableProfile,
    check_admissible,
    require_admissible,
)
from .multidim import MultiFunctional, from_tensor_spline, multi_eval, multi_seminorm, multi_solve
from .odo_core import (
    Interval,
    Odo,
    build_fundamental_system,
    build_localized_system,
    build_universal_system,
    kernel_eval,
    kernel_ppe,
    proj_nullspace,
)
from .solver import GridSpec, Problem, brute_force_oracle, lambda_max, reduce_to_extreme_point, solve, solve_grid
from .tensor_spline import (
    Family,
    Operator,
    TensorAtom,
    Variant,
    canonicalize,
    decompose,
    innovation,
    random_bump,
    random_spline,
    regularity_probe,
    seminorm,
    weak_action,
)

__all__ = ["Check", "SUITES", "run_suite", "run_suites", "representer_runs", "RepresenterRun"]

UNIT = (Interval(0.0, 1.0), Interval(0.0, 1.0))


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return f"{verdict} {self.suite}.{self.name} value={self.value:.3e} threshold={self.threshold:.3e}{extra}"


def _le(suite: str, name: str, value: float, threshold: float, detail: str = "") -> Check:
    return Check(suite, name, bool(value <= threshold), float(value), float(threshold), detail)


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _dyadic(rng: np.random.Generator, size: int) -> np.ndarray:
    """Nonzero multiples of 1/64 in [-4, 4]; sums of these are exact in any order."""
    k = rng.integers(1, 257, size) * rng.choice([-1, 1], size)
    return k / 64.0


def random_boxes(rng: np.random.Generator, M: int, domain=UNIT) -> list[SeparableBox]:
    K1, K2 = domain
    out = []
    for _ in range(M):
        a = np.sort(rng.uniform(K1.lo, K1.hi, 2))
        b = np.sort(rng.uniform(K2.lo, K2.hi, 2))
        out.append(SeparableBox((a[0], a[1], b[0], b[1])))
    return out


def random_diracs(rng: np.random.Generator, M: int, domain=UNIT) -> list[DiracSample]:
    K1, K2 = domain
    return [DiracSample((rng.uniform(K1.lo, K1.hi), rng.uniform(K2.lo, K2.hi))) for _ in range(M)]


# ---------------------------------------------------------------- representer runs

REPRESENTER_CONFIGS = {
    "D(x)D": (1, range(4, 13)),
    "D2(x)D2": (2, range(6, 17)),
}


@dataclass(frozen=True)
class RepresenterRun:
    config: str
    index: int
    M: int
    count: int
    bound: int
    localized: bool
    interior: bool
    gap: float
    seconds: float
    certified: bool


def representer_problem(seed: int, config: str, index: int, M: int | None = None) -> Problem:
    N, Ms = REPRESENTER_CONFIGS[config]
    M = list(Ms)[index % len(Ms)] if M is None else M
    rng = _rng(seed, 1 if N == 1 else 2, index, M)
    odo = Odo(0.0, N)
    fns = random_boxes(rng, M) if N == 1 else random_diracs(rng, M)
    truth = random_spline(rng, odo, odo, int(rng.integers(1, 6)), int(rng.integers(0, 3)), int(rng.integers(0, 3)), 1)
    y = ForwardOperator(tuple(fns), UNIT).apply(truth)
    y = y + 0.01 * (np.std(y) + 1e-3) * rng.standard_normal(M)
    base = Problem.create(odo, odo, fns, y, 1.0)
    frac = 10.0 ** rng.uniform(-2.5, -1.0)
    return base.with_data(y, frac * lambda_max(base, GridSpec.uniform(UNIT, levels=0)))


def representer_runs(seed: int = 0, instances: int = 50, full_sweep: bool = False) -> list[RepresenterRun]:
    """Solve seeded instances per operator configuration.

    By default ``instances`` runs per configuration cycle through its range of
    ``M``; ``full_sweep`` runs ``instances`` for every single ``M``.
    """
    runs = []
    for config, (_, Ms) in REPRESENTER_CONFIGS.items():
        jobs = [(i, M) for M in Ms for i in range(instances)] if full_sweep else [(i, None) for i in range(instances)]
        for i, M in jobs:
            start = time.perf_counter()
            problem = representer_problem(seed, config, i, M)
            result = solve(problem)
            elapsed = time.perf_counter() - start
            c = result.certification
            runs.append(
                RepresenterRun(
                    config, i, problem.M, c.sparsity_count, c.bound, c.localization_ok, c.interior_ok,
                    result.duality_gap, elapsed, c.passed,
                )
            )
    return runs


def representer_checks(runs: list[RepresenterRun]) -> list[Check]:
    out = []
    for config in REPRESENTER_CONFIGS:
        rs = [r for r in runs if r.config == config]
        bad = sum(r.count > r.bound for r in rs)
        out.append(Check("representer", f"sparsity[{config}]", bad == 0, bad, 0, f"{len(rs) - bad}/{len(rs)} within bound"))
        out.append(_le("representer", f"runtime[{config}]", max(r.seconds for r in rs), 10.0, "seconds, worst instance"))
    out.append(Check("representer", "localization", all(r.localized for r in runs), sum(not r.localized for r in runs), 0))
    out.append(Check("representer", "interior", all(r.interior for r in runs), sum(not r.interior for r in runs), 0))
    out.append(_le("representer", "duality_gap", max(r.gap for r in runs), 1e-8))
    return out


def suite_representer(seed: int = 0, instances: int = 50, full_sweep: bool = False) -> list[Check]:
    return representer_checks(representer_runs(seed, instances, full_sweep))


# ---------------------------------------------------------------- oracle

def oracle_instance(seed: int, index: int) -> tuple[Problem, GridSpec]:
    rng = _rng(seed, 3, index)
    N = 1 + index % 2
    odo = Odo(0.0 if index % 3 else 0.7, N)
    M = int(rng.integers(N * N + 1, N * N + 5))
    fns = random_boxes(rng, M)
    y = rng.standard_normal(M)
    g = np.linspace(0.1, 0.85, 4)
    h1 = np.linspace(0.05, 0.95, 6)
    grid = GridSpec(np.array([(u, v) for u in g for v in g]), h1, h1, 0, (0.25, 0.25, 0.18, 0.18))
    base = Problem.create(odo, odo, fns, y, 1.0)
    frac = rng.uniform(0.05, 0.5)
    return base.with_data(y, frac * lambda_max(base, grid)), grid


def suite_oracle(seed: int = 0, instances: int = 20) -> list[Check]:
    worst = 0.0
    for i in range(instances):
        problem, grid = oracle_instance(seed, i)
        result = solve_grid(problem, grid, tol=1e-10)
        oracle = brute_force_oracle(problem, grid, min(6, problem.sparsity_bound))
        worst = max(worst, abs(result.objective - oracle) / max(1.0, abs(oracle)))
    return [_le("oracle", "relative_objective_error", worst, 1e-6, f"{instances} instances")]


# ---------------------------------------------------------------- operator algebra

ALPHAS = (0.0, 0.7, -1.3)


def _systems():
    out = []
    for a in ALPHAS:
        for N in range(1, 6):
            out.append((f"fundamental(a={a},N={N})", build_fundamental_system(Odo(a, N), Interval(0.0, 1.0))))
            out.append((f"fundamental(a={a},N={N},K=[-0.5,2])", build_fundamental_system(Odo(a, N), Interval(-0.5, 2.0))))
        for N in range(1, 5):
            out.append((f"universal(a={a},N={N})", build_universal_system(Odo(a, N), Interval(-1.0, 1.0))))
            out.append((f"localized(a={a},N={N})", build_localized_system(Odo(a, N), Interval(0.0, 1.0))))
    return out


def suite_biorthogonality(seed: int = 0) -> list[Check]:
    worst, name = 0.0, ""
    for label, s in _systems():
        dev = float(np.max(np.abs(s.biorthogonality() - np.eye(s.order))))
        if dev >= worst:
            worst, name = dev, label
    return [_le("biorthogonality", "max_deviation", worst, 1e-10, f"worst {name}")]


def suite_algebra(seed: int = 0, probes: int = 1000) -> list[Check]:
    rng = _rng(seed, 4)
    systems = _systems()
    compact = [(l, s) for l, s in systems if s.phi_support is not None]
    fundamental = [(l, s) for l, s in systems if s.is_fundamental]
    out = suite_biorthogonality(seed)
    # zero region of compactly supported kernels
    nonzero, unshortcut, n = 0, 0.0, 0
    while n < probes:
        _, s = compact[int(rng.integers(len(compact)))]
        lo, hi = s.phi_support.lo, s.phi_support.hi
        t, x = rng.uniform(lo - 2.0, hi + 2.0, 2)
        if not (x < min(t, lo) or x > max(t, hi)):
            continue
        n += 1
        nonzero += kernel_eval(s, t, x) != 0.0
        raw = kernel_eval(s, t, x, use_support=False)
        c = s.green_coefficients(x)
        scale = abs(float(s.odo.green(t - x))) + sum(abs(c[k] * float(s.null_eval(k + 1, t))) for k in range(s.order))
        unshortcut = max(unshortcut, abs(raw) / max(1.0, scale))
    out.append(Check("algebra", "kernel_support_zeros", nonzero == 0, nonzero, 0, f"{probes} probes"))
    out.append(_le("algebra", "kernel_support_unshortcut", unshortcut, 1e-10, "formula without the zero shortcut, relative to cancelling terms"))
    # fundamental kernels reduce to the Green's function right of K-
    mismatch = 0
    for _ in range(probes):
        _, s = fundamental[int(rng.integers(len(fundamental)))]
        x = rng.uniform(s.K.lo, s.K.hi + 1.0)
        t = rng.uniform(s.K.lo - 1.0, s.K.hi + 2.0, 4)
        mismatch += not np.array_equal(kernel_eval(s, t, x), s.odo.green(t - x))
        mismatch += bool(np.any(s.green_coefficients(x) != 0.0))
    out.append(Check("algebra", "fundamental_shift_invariance", mismatch == 0, mismatch, 0, f"{probes} probes"))
    worst = 0.0
    for _, s in systems:
        lo = s.phi_support.lo if s.phi_support is not None else s.K.lo
        hi = s.phi_support.hi if s.phi_support is not None else s.K.hi
        for x in rng.uniform(lo - 1.0, hi + 0.5, 5):
            worst = max(worst, float(np.max(np.abs(proj_nullspace(s, kernel_ppe(s, x))))))
    out.append(_le("algebra", "projection_annihilates_inverse", worst, 1e-9))
    return out


# ---------------------------------------------------------------- innovation duality

def _random_spline_any(rng: np.random.Generator, localized: bool):
    a1, a2 = rng.choice(ALPHAS, 2)
    N1, N2 = (int(v) for v in rng.integers(1, 4, 2))
    o1, o2 = Odo(float(a1), N1), Odo(float(a2), N2)
    systems = None
    if localized:
        systems = (build_localized_system(o1, UNIT[0]), build_localized_system(o2, UNIT[1]))
    counts = rng.integers(0, 4, 4)
    return random_spline(rng, o1, o2, int(counts[0]) + 1, int(counts[1]), int(counts[2]), int(counts[3]), UNIT, systems)


def suite_innovation(seed: int = 0, instances: int = 100) -> list[Check]:
    rng = _rng(seed, 5)
    worst = 0.0
    for i in range(instances):
        spline = _random_spline_any(rng, localized=bool(i % 3 == 2))
        N1, N2 = spline.orders
        psi1 = random_bump(rng, -0.5, 1.5, N1)
        psi2 = random_bump(rng, -0.5, 1.5, N2)
        inn = innovation(spline)
        for op in Operator:
            worst = max(worst, abs(weak_action(spline, psi1, psi2, op) - inn.pair(psi1, psi2, op, spline.systems)))
    return [_le("innovation", "weak_action_vs_dirac_pairing", worst, 1e-8, f"{instances} splines x 4 operators")]


# ---------------------------------------------------------------- decomposition

_ANNIHILATED = {
    Operator.L1_L2: (Family.POLY_GREEN, Family.GREEN_POLY, Family.POLY_POLY),
    Operator.PROJ_L2: (Family.TENSOR_GREEN, Family.GREEN_POLY, Family.POLY_POLY),
    Operator.L1_PROJ: (Family.TENSOR_GREEN, Family.POLY_GREEN, Family.POLY_POLY),
}


def suite_decomposition(seed: int = 0, instances: int = 20, points: int = 200) -> list[Check]:
    rng = _rng(seed, 6)
    resum, cross = 0.0, 0.0
    for _ in range(instances):
        spline = _random_spline_any(rng, localized=False)
        parts = decompose(spline)
        t = rng.uniform(-0.25, 1.25, (points, 2))
        total = sum(p.eval(t[:, 0], t[:, 1]) for p in parts if p.atoms)
        resum = max(resum, float(np.max(np.abs(total - spline.eval(t[:, 0], t[:, 1])))))
        N1, N2 = spline.orders
        psi1 = random_bump(rng, -0.5, 1.5, N1)
        psi2 = random_bump(rng, -0.5, 1.5, N2)
        by_family = dict(zip(Family, parts))
        for op, families in _ANNIHILATED.items():
            for f in families:
                cross = max(cross, abs(weak_action(by_family[f], psi1, psi2, op)))
    return [
        _le("decomposition", "resummation", resum, 1e-12, f"{instances} splines x {points} points"),
        _le("decomposition", "cross_family_annihilation", cross, 1e-8),
    ]


# ---------------------------------------------------------------- seminorm

def _dyadic_spline(rng: np.random.Generator, N1: int, N2: int, edge_knots: bool = False):
    o1, o2 = Odo(0.0 if rng.uniform() < 0.5 else 0.7, N1), Odo(0.0, N2)
    base = random_spline(rng, o1, o2, int(rng.integers(1, 5)), int(rng.integers(0, 3)), int(rng.integers(0, 3)), 2)
    w = _dyadic(rng, len(base.atoms))
    atoms = [a.with_weight(v) for a, v in zip(base.atoms, w)]
    if edge_knots:
        atoms += [
            TensorAtom.tensor_green(_dyadic(rng, 1)[0], 0.0, rng.uniform()),
            TensorAtom.tensor_green(_dyadic(rng, 1)[0], rng.uniform(), 0.0),
            TensorAtom.tensor_green(_dyadic(rng, 1)[0], 0.0, 0.0),
            TensorAtom.tensor_green(_dyadic(rng, 1)[0], 1.0, rng.uniform()),
            TensorAtom.poly_green(1, _dyadic(rng, 1)[0], 0.0),
            TensorAtom.green_poly(N2, _dyadic(rng, 1)[0], 1.0),
        ]
    return base.with_atoms(atoms)


def _family_l1(spline) -> float:
    return float(sum(abs(a.weight) for a in spline.atoms if a.family is not Family.POLY_POLY))


def suite_seminorm(seed: int = 0, instances: int = 50) -> list[Check]:
    rng = _rng(seed, 7)
    ident = zero = homog = 0
    drift, increase = 0.0, 0.0
    for _ in range(instances):
        N1, N2 = (int(v) for v in rng.integers(1, 4, 2))
        spline = _dyadic_spline(rng, N1, N2)
        ident += seminorm(spline, Variant.CAUSAL) != _family_l1(spline)
        null = spline.with_atoms(spline.family_atoms(Family.POLY_POLY))
        zero += seminorm(null) != 0.0
        for s in (-2.0, 0.5, 4.0, -0.25):
            homog += seminorm(spline.scaled(s)) != abs(s) * seminorm(spline)
        edged = _dyadic_spline(rng, N1, N2, edge_knots=True)
        canon = canonicalize(edged)
        t = rng.uniform(1e-9, 1.0 - 1e-9, (100, 2))
        drift = max(drift, float(np.max(np.abs(canon.eval(t[:, 0], t[:, 1]) - edged.eval(t[:, 0], t[:, 1])))))
        increase = max(increase, seminorm(canon) - seminorm(edged))
    return [
        Check("seminorm", "family_l1_identity", ident == 0, ident, 0, "exact equality, dyadic weights"),
        Check("seminorm", "null_space_zero", zero == 0, zero, 0),
        Check("seminorm", "absolute_homogeneity", homog == 0, homog, 0, "exact equality, power-of-two scales"),
        _le("seminorm", "canonical_eval_drift", drift, 1e-12, "open rectangle"),
        _le("seminorm", "canonical_seminorm_increase", increase, 0.0),
    ]


# ---------------------------------------------------------------- regularity

def suite_regularity(seed: int = 0, instances: int = 20) -> list[Check]:
    rng = _rng(seed, 8)
    odo = Odo(0.0, 2)
    unbounded, worst = 0, 0.0
    for _ in range(instances):
        spline = random_spline(rng, odo, odo, 4, 2, 2, 1)
        for d1 in range(2):
            for d2 in range(2):
                rep = regularity_probe(spline, d1, d2)
                unbounded += not rep.bounded
                lo = min(rep.max_abs, rep.max_abs_refined)
                if lo > 0:
                    worst = max(worst, max(rep.max_abs, rep.max_abs_refined) / lo)
    return [
        Check("regularity", "bounded_mixed_partials", unbounded == 0, unbounded, 0, f"{instances} splines x 4 orders"),
        _le("regularity", "refinement_growth", worst, 2.0),
    ]


# ---------------------------------------------------------------- multidim

def suite_multidim(seed: int = 0, instances_2d: int = 6, seeds_3d: int = 3) -> list[Check]:
    rng = _rng(seed, 9)
    obj_gap, eval_gap, semi_mismatch = 0.0, 0.0, 0
    for i in range(instances_2d):
        N = 1 + i % 2
        odo = Odo(0.0, N)
        M = N * N + int(rng.integers(2, 6))
        boxes = random_boxes(rng, M)
        truth = random_spline(rng, odo, odo, 3, 1, 1, 1)
        truth = truth.with_atoms(a.with_weight(w) for a, w in zip(truth.atoms, _dyadic(rng, len(truth.atoms))))
        pts = rng.uniform(-0.25, 1.25, (200, 2))
        ms = from_tensor_spline(truth)
        eval_gap = max(eval_gap, float(np.max(np.abs(multi_eval(ms, pts) - truth.eval(pts[:, 0], pts[:, 1])))))
        semi_mismatch += multi_seminorm(ms) != seminorm(truth)
        y = ForwardOperator(tuple(boxes), UNIT).apply(truth)
        base = Problem.create(odo, odo, boxes, y, 1.0)
        grid = GridSpec.uniform(UNIT, levels=0)
        lam = 10.0 ** rng.uniform(-2.5, -1.0) * lambda_max(base, grid)
        problem = base.with_data(y, lam)
        two_d = reduce_to_extreme_point(solve_grid(problem, grid, tol=1e-10), problem)
        fns = [MultiFunctional.box((b.rect[0], b.rect[2]), (b.rect[1], b.rect[3])) for b in boxes]
        multi = multi_solve(y, fns, lam, 2, N, tol=1e-10)
        obj_gap = max(obj_gap, abs(two_d.objective - multi.objective))
    bad3 = 0
    total3 = 0
    for M in range(4, 11):
        for s in range(seeds_3d):
            r = _rng(seed, 10, M, s)
            fns = []
            for _ in range(M):
                lo = r.uniform(0.0, 0.6, 3)
                fns.append(MultiFunctional.box(lo, lo + r.uniform(0.1, 0.4, 3)))
            y = r.standard_normal(M)
            res = multi_solve(y, fns, 10.0 ** r.uniform(-3, -1.5), 3, 1)
            total3 += 1
            bad3 += not res.certification.passed
    return [
        _le("multidim", "d2_objective_agreement", obj_gap, 1e-8, f"{instances_2d} instances"),
        _le("multidim", "d2_eval_agreement", eval_gap, 1e-12),
        Check("multidim", "d2_seminorm_exact", semi_mismatch == 0, semi_mismatch, 0),
        Check("multidim", "d3_sparsity_bound", bad3 == 0, bad3, 0, f"{total3 - bad3}/{total3} certified"),
    ]


# ---------------------------------------------------------------- admissibility

def suite_admissibility(seed: int = 0) -> list[Check]:
    """Every branch of the gate: Dirac per failing axis, Dirac accepted, box, profile, unknown type."""
    rng = _rng(seed, 11)
    wrong = 0
    cases = 0
    bump = random_bump(rng, 0.1, 0.9, 1)
    for N1 in range(1, 4):
        for N2 in range(1, 4):
            o1, o2 = Odo(0.0, N1), Odo(0.3, N2)
            dirac = check_admissible(DiracSample((0.5, 0.5)), o1, o2)
            expect_reject = min(N1, N2) == 1
            expect_axis = 1 if N1 == 1 else (2 if N2 == 1 else None)
            cases += 1
            wrong += dirac.ok == expect_reject or dirac.axis != expect_axis
            if expect_reject:
                wrong += dirac.reason != "DiracNeedsOrderTwo"
                try:
                    require_admissible([SeparableBox((0, 1, 0, 1)), DiracSample((0.5, 0.5))], o1, o2)
                    wrong += 1
                except InadmissibleFunctional as exc:
                    wrong += exc.index != 1
            for fn in (SeparableBox((0.1, 0.4, 0.2, 0.9)), SeparableProfile(bump, bump)):
                cases += 1
                wrong += not check_admissible(fn, o1, o2).ok
    cases += 1
    try:
        check_admissible(object(), Odo(0.0, 2), Odo(0.0, 2))
        wrong += 1
    except TypeError:
        pass
    return [Check("admissibility", "gate_branches", wrong == 0, wrong, 0, f"{cases} cases")]


SUITES: dict[str, Callable[..., list[Check]]] = {
    "admissibility": suite_admissibility,
    "algebra": suite_algebra,
    "biorthogonality": suite_biorthogonality,
    "decomposition": suite_decomposition,
    "innovation": suite_innovation,
    "multidim": suite_multidim,
    "oracle": suite_oracle,
    "regularity": suite_regularity,
    "representer": suite_representer,
    "seminorm": suite_seminorm,
}


def run_suite(name: str, seed: int = 0, **kwargs) -> list[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed, **kwargs)


def run_suites(names, seed: int = 0) -> list[Check]:
    out = []
    for name in names:
        out += run_suite(name, seed)
    return out

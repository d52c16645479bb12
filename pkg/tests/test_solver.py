from dataclasses import replace

import numpy as np
import pytest

from vtspline.measurements import DiracSample, SeparableBox
from vtspline.odo_core import Interval, Odo
from vtspline.solver import (
    AssumptionViolation,
    GridSpec,
    Problem,
    SolveResult,
    _merge_duplicate_columns,
    assemble_dictionary,
    brute_force_oracle,
    certify,
    lambda_max,
    reduce_to_extreme_point,
    refine_grid,
    solve,
    solve_grid,
    spline_objective,
)
from vtspline.tensor_spline import Family, TensorAtom, make_spline, seminorm

UNIT = Interval(0.0, 1.0)
SQUARE = (UNIT, UNIT)
O1 = Odo(0.0, 1)
O2 = Odo(0.0, 2)


def _boxes(rng, M):
    out = []
    for _ in range(M):
        a1, a2 = rng.uniform(0.0, 0.6, 2)
        out.append(SeparableBox((a1, a1 + rng.uniform(0.1, 0.4), a2, a2 + rng.uniform(0.1, 0.4))))
    return out


def _problem(rng, M=6, frac=0.05, odo=O1):
    fns = _boxes(rng, M)
    y = rng.standard_normal(M)
    base = Problem.create(odo, odo, fns, y, 1.0)
    return base.with_data(y, frac * lambda_max(base, GridSpec.uniform(SQUARE, levels=0)))


def test_one_point_grid_dimensions():
    p = Problem.create(O1, O1, [SeparableBox((0.2, 0.9, 0.1, 0.8))], [1.0], 0.1)
    grid = GridSpec(np.array([[0.5, 0.5]]), [0.5], [0.5], levels=0)
    D = assemble_dictionary(p, grid)
    assert D.A.shape == (1, 3)
    assert D.B.shape == (1, 1)
    assert [a.family for a in D.atoms] == [Family.TENSOR_GREEN, Family.POLY_GREEN, Family.GREEN_POLY]


def test_dictionary_order(rng):
    p = _problem(rng, M=8, odo=O2)
    grid = GridSpec.uniform(SQUARE, n2d=3, n1d=4, levels=0)
    D = assemble_dictionary(p, grid)
    fam = [a.family for a in D.atoms]
    assert fam == [Family.TENSOR_GREEN] * 9 + [Family.POLY_GREEN] * 8 + [Family.GREEN_POLY] * 8
    assert [a.n1 for a in D.atoms[9:17]] == [1] * 4 + [2] * 4
    assert [(a.n1, a.n2) for a in D.null_atoms] == [(1, 1), (1, 2), (2, 1), (2, 2)]


def test_lambda_above_max_gives_null_fit(rng):
    p = _problem(rng)
    grid = GridSpec.uniform(SQUARE, levels=0)
    lm = lambda_max(p, grid)
    r = solve_grid(p.with_data(p.y, 1.01 * lm), grid)
    assert np.all(r.theta == 0.0)
    assert r.spline.sparsity_count == 0


def test_duplicate_columns_merge():
    p = Problem.create(O1, O1, [SeparableBox((0.2, 0.9, 0.1, 0.8))], [1.0], 0.1)
    grid = GridSpec(np.array([[0.5, 0.5], [0.5, 0.5]]), [0.5], [0.5], levels=0)
    D = assemble_dictionary(p, grid)
    theta = _merge_duplicate_columns(D, np.array([0.3, 0.7, 0.0, 0.0]))
    np.testing.assert_allclose(theta, [1.0, 0.0, 0.0, 0.0])


def test_solve_certifies_and_reduces(rng):
    p = _problem(rng, M=7)
    r = solve(p)
    c = r.certification
    assert c.passed, c.verdicts()
    assert r.spline.sparsity_count <= p.M - 1
    assert r.objective == pytest.approx(spline_objective(p, r.spline), rel=1e-9, abs=1e-12)


def test_reduction_is_idempotent(rng):
    p = _problem(rng, M=6)
    r = solve(p)
    again = reduce_to_extreme_point(r, p)
    np.testing.assert_array_equal(again.theta, r.theta)
    assert again.objective == r.objective


def test_history_is_monotone(rng):
    p = _problem(rng, M=8, frac=0.01)
    r = solve(p)
    h = np.array(r.history)
    assert len(h) == 4
    assert np.all(np.diff(h) <= 2 * r.tol)


def test_refine_grid_inserts_neighbours():
    p = Problem.create(O1, O1, [SeparableBox((0.0, 1.0, 0.0, 1.0))], [1.0], 0.1)
    grid = GridSpec.uniform(SQUARE, n2d=3, n1d=3, levels=2)
    spline = make_spline(O1, O1, [TensorAtom.tensor_green(1.0, 0.5, 0.5), TensorAtom.poly_green(1, 1.0, 1.0)])
    res = SolveResult(spline, 0.0, 0.0, 0)
    finer = refine_grid(p, res, grid)
    assert finer.levels == 1
    assert finer.spacing == (0.25, 0.25, 0.25, 0.25)
    pts = {tuple(x) for x in finer.grid2d}
    assert {(u, v) for u in (0.25, 0.5, 0.75) for v in (0.25, 0.5, 0.75)} <= pts
    assert len(pts) == 9 + 8
    np.testing.assert_array_equal(finer.grid1d_axis2, [0.0, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(finer.grid1d_axis1, [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        refine_grid(p, res, GridSpec.uniform(SQUARE, levels=0))


def test_certify_names_atom_outside_domain():
    fns = [SeparableBox((0.0, 1.0, 0.0, 1.0)), SeparableBox((0.5, 1.0, 0.2, 0.6))]
    p = Problem.create(O1, O1, fns, [1.0, 1.0], 0.1)
    bad = TensorAtom.tensor_green(1.0, 1.2, 0.5)
    edge = TensorAtom.green_poly(1, 1.0, 0.0)
    spline = make_spline(O1, O1, [bad, edge])
    c = certify(SolveResult(spline, 0.0, 0.0, 0), p)
    assert not c.localization_ok and not c.interior_ok and not c.sparsity_ok
    assert c.offending["localization"] == [bad]
    assert c.offending["interior"] == [bad, edge]


def test_scaling_equivariance(rng):
    p = _problem(rng, M=6)
    grid = GridSpec.uniform(SQUARE, levels=0)
    a = solve_grid(p, grid, tol=1e-12)
    b = solve_grid(p.with_data(4.0 * p.y, 4.0 * p.lam), grid, tol=1e-10)
    assert b.objective == pytest.approx(16.0 * a.objective, rel=1e-8)
    assert seminorm(b.spline) == pytest.approx(4.0 * seminorm(a.spline), rel=1e-6)


def test_oracle_agrees_on_tiny_grid(rng):
    p = _problem(rng, M=4, frac=0.2)
    g = np.linspace(0.1, 0.9, 3)
    grid = GridSpec(np.array([(u, v) for u in g for v in g]), g, g, 0)
    r = solve_grid(p, grid, tol=1e-12)
    assert r.objective == pytest.approx(brute_force_oracle(p, grid, 3), rel=1e-9)


def test_assumption_violation():
    fns = [DiracSample((0.5, 0.5)), DiracSample((0.2, 0.7)), DiracSample((0.8, 0.3))]
    with pytest.raises(AssumptionViolation) as exc:
        Problem.create(O2, O2, fns, np.zeros(3), 0.1)
    assert any("null-space" in f for f in exc.value.report.failures())
    p = Problem.create(O2, O2, fns, np.zeros(3), 0.1, null_block=False)
    assert p.null_dim == 0 and p.sparsity_bound == 3


def test_problem_validation():
    fns = [SeparableBox((0.0, 1.0, 0.0, 1.0))]
    with pytest.raises(ValueError):
        Problem.create(O1, O1, fns, [1.0], 0.0)
    with pytest.raises(ValueError):
        Problem.create(O1, O1, fns, [1.0, 2.0], 0.1)
    with pytest.raises(ValueError):
        Problem.create(O1, O1, fns, [1.0], 0.1, fidelity="l1")


def test_grid_outside_domain_rejected(rng):
    p = _problem(rng)
    grid = GridSpec(np.array([[1.5, 0.5]]), [0.5], [0.5], 0)
    with pytest.raises(ValueError):
        assemble_dictionary(p, grid)


def test_second_order_dirac_solve(rng):
    M = 8
    fns = [DiracSample(tuple(rng.uniform(0.05, 0.95, 2))) for _ in range(M)]
    y = rng.standard_normal(M)
    base = Problem.create(O2, O2, fns, y, 1.0)
    p = base.with_data(y, 0.05 * lambda_max(base, GridSpec.uniform(SQUARE, levels=0)))
    r = solve(p)
    assert r.certification.passed
    assert r.spline.sparsity_count <= M - 4
    assert replace(r, history=()).duality_gap <= 1e-8

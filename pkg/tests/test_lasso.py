import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vtspline.lasso import (
    NoConvergence,
    TooLarge,
    brute_force,
    duality_gap,
    lambda_max,
    objective,
    reduce_support,
    solve_block_lasso,
)


def _instance(rng, M=8, P=30, K=2):
    A = rng.standard_normal((M, P))
    B = rng.standard_normal((M, K))
    y = rng.standard_normal(M)
    return A, B, y


def test_scalar_soft_threshold():
    sol = solve_block_lasso(np.array([[1.0]]), np.zeros((1, 0)), np.array([3.0]), 1.0)
    assert sol.theta[0] == pytest.approx(2.0, abs=1e-12)
    assert sol.objective == pytest.approx(0.5 + 2.0, abs=1e-12)


def test_zero_above_lambda_max(rng):
    A, B, y = _instance(rng)
    lm = lambda_max(A, B, y)
    sol = solve_block_lasso(A, B, y, lm * 1.0001)
    assert np.all(sol.theta == 0.0)
    # the null block alone is a least-squares fit
    d_ls = np.linalg.lstsq(B, y, rcond=None)[0]
    np.testing.assert_allclose(sol.d, d_ls, atol=1e-10)


def test_solution_is_certified(rng):
    A, B, y = _instance(rng)
    lam = 0.1 * lambda_max(A, B, y)
    sol = solve_block_lasso(A, B, y, lam, tol=1e-10)
    assert sol.gap <= 1e-10
    assert duality_gap(A, B, y, lam, sol.theta) == pytest.approx(sol.gap, abs=1e-12)
    assert objective(A, B, y, lam, sol.theta, sol.d) == pytest.approx(sol.objective)


def test_matches_brute_force(rng):
    for _ in range(5):
        A, B, y = _instance(rng, M=5, P=12, K=1)
        lam = rng.uniform(0.05, 0.5) * lambda_max(A, B, y)
        sol = solve_block_lasso(A, B, y, lam, tol=1e-12)
        obj, support, theta = brute_force(A, B, y, lam, 4)
        assert sol.objective == pytest.approx(obj, rel=1e-9)


def test_brute_force_limits(rng):
    A, B, y = _instance(rng, M=5, P=60)
    with pytest.raises(TooLarge):
        brute_force(A, B, y, 0.1, 3)


def test_no_convergence_reports_gap(rng):
    A, B, y = _instance(rng, M=20, P=400)
    lam = 1e-4 * lambda_max(A, B, y)
    with pytest.raises(NoConvergence) as exc:
        solve_block_lasso(A, B, y, lam, tol=1e-14, max_iter=3, polish=False)
    assert exc.value.gap > 1e-14


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**16), k=st.integers(-3, 3))
def test_scaling_equivariance(seed, k):
    rng = np.random.default_rng(seed)
    A, B, y = _instance(rng, M=6, P=15, K=1)
    lam = 0.2 * lambda_max(A, B, y)
    c = 2.0**k
    a = solve_block_lasso(A, B, y, lam, tol=1e-12)
    b = solve_block_lasso(A, B, c * y, c * lam, tol=1e-12 * c * c)
    assert b.objective == pytest.approx(c * c * a.objective, rel=1e-8)


def test_reduce_support_keeps_objective(rng):
    M = 6
    A0 = rng.standard_normal((M, 10))
    A = np.hstack([A0, A0[:, :4] * 0.5 + A0[:, 4:8] * 0.5])
    B = rng.standard_normal((M, 1))
    y = rng.standard_normal(M)
    lam = 0.05 * lambda_max(A, B, y)
    sol = solve_block_lasso(A, B, y, lam, tol=1e-12)
    theta = sol.theta.copy()
    # spread mass over a convex combination that keeps both the fit and the l1 cost
    bound = M - 1
    t2, d2, steps = reduce_support(A, B, y, lam, theta, bound)
    assert np.count_nonzero(t2) <= bound
    assert objective(A, B, y, lam, t2, d2) <= sol.objective + 1e-10
    # idempotent once within the bound
    t3, _, steps3 = reduce_support(A, B, y, lam, t2, bound)
    assert steps3 == 0
    np.testing.assert_array_equal(t3, t2)


def test_reduce_support_on_dense_optimum():
    # identical columns: any split of the mass is optimal, reduction leaves one
    a = np.array([[1.0], [2.0]])
    A = np.hstack([a] * 5)
    B = np.zeros((2, 0))
    y = np.array([1.0, 2.0])
    lam = 0.5
    theta = np.full(5, 0.9 / 5)
    t, _, steps = reduce_support(A, B, y, lam, theta, 1)
    assert np.count_nonzero(t) == 1
    assert t.sum() == pytest.approx(0.9, abs=1e-14)
    assert steps == 4

import numpy as np
import pytest

from vtspline.multidim import (
    GreenFactor,
    MultiAtom,
    MultiFunctional,
    MultiGrid,
    MultiSpline,
    PolyFactor,
    face_masses,
    from_tensor_spline,
    multi_apply,
    multi_canonicalize,
    multi_eval,
    multi_lambda_max,
    multi_seminorm,
    multi_solve,
    to_tensor_spline,
)
from vtspline.measurements import ForwardOperator, SeparableBox
from vtspline.odo_core import Interval, Odo
from vtspline.tensor_spline import random_spline

UNIT = Interval(0.0, 1.0)


def test_three_dim_first_order_eval():
    s = MultiSpline(3, 1, [MultiAtom(1.0, (GreenFactor(0.2), GreenFactor(0.3), GreenFactor(0.4)))])
    assert multi_eval(s, [0.5, 0.5, 0.5]) == 1.0
    assert multi_eval(s, [0.5, 0.1, 0.5]) == 0.0


def test_null_tensor_eval_frozen():
    null = np.zeros((2, 2, 2))
    null[1, 0, 1] = 3.0
    s = MultiSpline(3, 2, [], null)
    assert multi_eval(s, [0.5, 7.0, 2.0]) == 3.0 * 0.5 * 2.0


def test_validation():
    with pytest.raises(ValueError):
        MultiSpline(2, 1, [MultiAtom(1.0, (GreenFactor(0.1),))])
    with pytest.raises(ValueError):
        MultiSpline(2, 2, [MultiAtom(1.0, (PolyFactor(2), GreenFactor(0.1)))])
    with pytest.raises(ValueError):
        MultiSpline(2, 2, [], np.zeros((2, 3)))


def test_face_masses_and_seminorm():
    atoms = [
        MultiAtom(2.0, (GreenFactor(0.1), GreenFactor(0.2))),
        MultiAtom(-1.0, (PolyFactor(0), GreenFactor(0.2))),
        MultiAtom(-0.5, (PolyFactor(1), GreenFactor(0.7))),
    ]
    s = MultiSpline(2, 2, atoms)
    assert face_masses(s) == {(2, 2): 2.0, (0, 2): 1.0, (1, 2): 0.5}
    assert multi_seminorm(s) == 3.5


def test_canonicalize_edges():
    atoms = [
        MultiAtom(1.0, (GreenFactor(0.0), GreenFactor(0.0))),
        MultiAtom(1.0, (GreenFactor(0.0), GreenFactor(0.5))),
        MultiAtom(4.0, (GreenFactor(1.0), GreenFactor(0.5))),
    ]
    s = MultiSpline(2, 2, atoms)
    c = multi_canonicalize(s)
    assert c.null[1, 1] == 1.0
    assert [a.factors for a in c.atoms] == [(PolyFactor(1), GreenFactor(0.5))]
    pts = np.random.default_rng(0).uniform(0.01, 0.99, (50, 2))
    np.testing.assert_allclose(multi_eval(c, pts), multi_eval(s, pts), atol=1e-14)


def test_tensor_bridge_round_trip(rng):
    o = Odo(0.0, 2)
    t = random_spline(rng, o, o, 3, 2, 2, 2)
    m = from_tensor_spline(t)
    pts = rng.uniform(-0.2, 1.2, (100, 2))
    np.testing.assert_allclose(multi_eval(m, pts), t.eval(pts[:, 0], pts[:, 1]), atol=1e-13)
    back = to_tensor_spline(m)
    np.testing.assert_allclose(back.eval(pts[:, 0], pts[:, 1]), t.eval(pts[:, 0], pts[:, 1]), atol=1e-13)
    with pytest.raises(ValueError):
        from_tensor_spline(random_spline(rng, Odo(0.5, 1), Odo(0.5, 1), 1, 0, 0))


def test_measurements_agree_with_tensor_path(rng):
    o = Odo(0.0, 2)
    t = random_spline(rng, o, o, 3, 1, 1, 1)
    rects = [(0.1, 0.6, 0.2, 0.9), (0.0, 1.0, 0.5, 0.7)]
    ref = ForwardOperator([SeparableBox(r) for r in rects], (UNIT, UNIT)).apply(t)
    fns = [MultiFunctional.box((r[0], r[2]), (r[1], r[3])) for r in rects]
    np.testing.assert_allclose(multi_apply(from_tensor_spline(t), fns), ref, atol=1e-13)


def test_dirac_needs_order_two():
    s = MultiSpline(2, 1, [])
    with pytest.raises(ValueError, match="DiracNeedsOrderTwo"):
        multi_apply(s, [MultiFunctional.dirac((0.5, 0.5))])


def test_three_dim_solve_certified(rng):
    M = 7
    fns = []
    for _ in range(M):
        lo = rng.uniform(0.0, 0.6, 3)
        fns.append(MultiFunctional.box(lo, lo + rng.uniform(0.1, 0.4, 3)))
    y = rng.standard_normal(M)
    lam = 0.05 * multi_lambda_max(y, fns, 3, 1)
    r = multi_solve(y, fns, lam, 3, 1)
    assert r.certification.passed
    assert r.spline.sparsity_count <= M - 1
    fit = multi_apply(r.spline, fns)
    assert r.objective == pytest.approx(0.5 * np.sum((y - fit) ** 2) + lam * multi_seminorm(r.spline), rel=1e-9)


def test_lambda_max_gives_null_fit(rng):
    M = 5
    fns = [MultiFunctional.box(lo, lo + 0.3) for lo in rng.uniform(0.0, 0.6, (M, 2))]
    y = rng.standard_normal(M)
    lm = multi_lambda_max(y, fns, 2, 1, MultiGrid.uniform(2, {1: 9, 2: 9}))
    r = multi_solve(y, fns, 1.01 * lm, 2, 1, grid=MultiGrid.uniform(2, {1: 9, 2: 9}))
    assert r.spline.sparsity_count == 0


def test_dimension_cap():
    with pytest.raises(ValueError):
        multi_solve(np.zeros(40), [MultiFunctional.box([0] * 5, [1] * 5)] * 40, 0.1, 5, 1)

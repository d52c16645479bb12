import numpy as np
import pytest

from vtspline.measurements import (
    DiracSample,
    ForwardOperator,
    InadmissibleFunctional,
    SeparableBox,
    SeparableProfile,
    check_admissible,
    check_assumptions,
    functional_support,
    measure,
    require_admissible,
)
from vtspline.odo_core import Interval, Odo
from vtspline.ppe import PiecewisePolyExp
from vtspline.quadrature import adaptive_gauss_legendre
from vtspline.tensor_spline import TensorAtom, fundamental_pair, make_spline, random_spline

UNIT = Interval(0.0, 1.0)
SQUARE = (UNIT, UNIT)
O1 = Odo(0.0, 1)


def _box_oracle(x1, x2, rect):
    a1, b1, a2, b2 = rect
    return max(b1 - max(a1, x1), 0.0) * max(b2 - max(a2, x2), 0.0)


def test_first_order_box_closed_form(rng):
    for _ in range(30):
        x1, x2 = rng.uniform(0, 1, 2)
        a1, a2 = rng.uniform(0, 0.6, 2)
        rect = (a1, a1 + rng.uniform(0.1, 0.4), a2, a2 + rng.uniform(0.1, 0.4))
        s = make_spline(O1, O1, [TensorAtom.tensor_green(1.0, x1, x2)])
        assert measure(s, SeparableBox(rect)) == pytest.approx(_box_oracle(x1, x2, rect), abs=1e-14)


def test_box_matches_nested_quadrature(rng):
    o1, o2 = Odo(0.7, 2), Odo(-1.1, 3)
    s = random_spline(rng, o1, o2, 2, 1, 1, 1)
    rect = (0.1, 0.8, 0.2, 0.9)
    fn = SeparableBox(rect)
    knots1 = [a.x1 for a in s.atoms if a.family.green1]
    knots2 = [a.x2 for a in s.atoms if a.family.green2]

    def inner(t1):
        return np.array([
            adaptive_gauss_legendre(lambda t2: s.eval(np.full_like(t2, u), t2), rect[2], rect[3], tol=1e-13, points=knots2)
            for u in np.atleast_1d(t1)
        ])

    ref = adaptive_gauss_legendre(inner, rect[0], rect[1], tol=1e-12, points=knots1)
    assert measure(s, fn) == pytest.approx(ref, rel=1e-9, abs=1e-11)


def test_weighted_box_and_profile(rng):
    o = Odo(0.0, 2)
    s = random_spline(rng, o, o, 2, 1, 1, 1)
    w = PiecewisePolyExp.single([1.0, 2.0])
    box = SeparableBox((0.1, 0.7, 0.3, 0.9), w, None)
    f1 = w.refine([0.1, 0.7]).product(PiecewisePolyExp.single([1.0], lo=0.1, hi=0.7))
    f2 = PiecewisePolyExp.single([1.0], lo=0.3, hi=0.9)
    assert measure(s, box) == pytest.approx(measure(s, SeparableProfile(f1, f2)), rel=1e-12)


def test_dirac_equals_eval(rng):
    o = Odo(0.3, 2)
    s = random_spline(rng, o, o, 3, 1, 1, 1)
    assert measure(s, DiracSample((0.4, 0.7))) == pytest.approx(s.eval(0.4, 0.7), rel=1e-14)


def test_columns_match_apply(rng):
    o1, o2 = Odo(0.0, 2), Odo(0.5, 2)
    fns = [SeparableBox((0.0, 0.5, 0.2, 0.9)), DiracSample((0.3, 0.6)), SeparableBox((0.4, 1.0, 0.0, 0.5))]
    fwd = ForwardOperator(fns, SQUARE)
    s = random_spline(rng, o1, o2, 3, 2, 2, 2)
    cols = fwd.columns(s.atoms, s.systems)
    np.testing.assert_allclose(cols.sum(axis=1), fwd.apply(s), atol=1e-13)


def test_dirac_needs_order_two():
    v = check_admissible(DiracSample((0.5, 0.5)), Odo(0.0, 1), Odo(0.0, 2))
    assert not v.ok and v.reason == "DiracNeedsOrderTwo" and v.axis == 1
    v = check_admissible(DiracSample((0.5, 0.5)), Odo(0.0, 2), Odo(0.0, 1))
    assert v.axis == 2
    assert check_admissible(DiracSample((0.5, 0.5)), Odo(0.0, 2), Odo(0.0, 2)).ok
    assert check_admissible(SeparableBox((0, 1, 0, 1)), O1, O1).ok


def test_require_admissible_names_index():
    with pytest.raises(InadmissibleFunctional) as exc:
        require_admissible([SeparableBox((0, 1, 0, 1)), DiracSample((0.5, 0.5))], O1, O1)
    assert exc.value.index == 1
    with pytest.raises(TypeError):
        check_admissible(object(), O1, O1)


def test_functional_support():
    assert functional_support(SeparableBox((0.1, 0.2, 0.3, 0.4))) == (0.1, 0.2, 0.3, 0.4)
    assert functional_support(DiracSample((0.5, 0.6))) == (0.5, 0.5, 0.6, 0.6)


def test_assumptions_report():
    o = Odo(0.0, 2)
    sys = fundamental_pair(o, o, SQUARE)
    few = ForwardOperator([DiracSample((0.5, 0.5))] * 3, SQUARE)
    rep = check_assumptions(few, sys)
    assert not rep.injective and not rep.passed
    assert any("null-space" in f for f in rep.failures())
    grid = [DiracSample((u, v)) for u in (0.2, 0.5, 0.8) for v in (0.3, 0.7)]
    assert check_assumptions(ForwardOperator(grid, SQUARE), sys).passed
    outside = ForwardOperator(grid + [DiracSample((1.5, 0.5))], SQUARE)
    rep = check_assumptions(outside, sys)
    assert not rep.support_inclusion and rep.outside_support == (6,)

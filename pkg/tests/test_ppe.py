import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vtspline.ppe import PiecewisePolyExp, green_ppe, null_ppe


def _green_ref(t, x, alpha, order):
    u = np.asarray(t, dtype=float) - x
    return np.where(u >= 0.0, np.maximum(u, 0.0) ** (order - 1) * np.exp(alpha * u) / math.factorial(order - 1), 0.0)


@pytest.mark.parametrize("alpha", [0.0, 0.7, -1.3])
@pytest.mark.parametrize("order", [1, 2, 3, 5])
def test_green_matches_closed_form(alpha, order):
    t = np.linspace(-1.0, 2.0, 301)
    np.testing.assert_allclose(green_ppe(alpha, order, 0.4)(t), _green_ref(t, 0.4, alpha, order), rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 0.7, -1.3])
@pytest.mark.parametrize("order", [1, 2, 4])
def test_operator_annihilates_null_space(alpha, order):
    for n in range(1, order + 1):
        f = null_ppe(alpha, n, 0.25).apply_operator(alpha, order)
        t = np.linspace(-1.0, 2.0, 50)
        assert np.max(np.abs(f(t))) < 1e-12


@pytest.mark.parametrize("alpha", [0.0, 0.9])
def test_operator_kills_green_away_from_knot(alpha):
    f = green_ppe(alpha, 3, 0.5).apply_operator(alpha, 3)
    t = np.array([-0.5, 0.2, 0.49, 0.51, 0.8, 1.7])
    assert np.max(np.abs(f(t))) < 1e-12


def test_integrals_frozen():
    # int_0^1 t e^t dt = 1 and int_0^2 t^2/2 dt = 4/3
    f = PiecewisePolyExp.single([0.0, 1.0], rate=1.0)
    assert f.integrate(0.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert green_ppe(0.0, 3, 0.0).integrate(-5.0, 2.0) == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert green_ppe(-1.0, 1, 0.0).integrate(0.0, 1.0) == pytest.approx(1.0 - np.exp(-1.0), rel=1e-14)


def test_unbounded_integral_rejected():
    with pytest.raises(ValueError):
        green_ppe(-1.0, 1, 0.0).integrate(0.0, np.inf)


def test_derivative_and_left_limit():
    f = green_ppe(0.0, 2, 0.3)
    d = f.derivative()
    assert d(0.5) == pytest.approx(1.0)
    assert d.left_limit(0.3) == 0.0
    assert d(0.3) == 1.0


def test_bump_support_and_smoothness():
    b = PiecewisePolyExp.bump(0.2, 0.6, 3)
    lo, hi = b.simplify().support
    assert (lo, hi) == (0.2, 0.6)
    assert b.smoothness() == 3
    assert b(0.1) == 0.0 and b(0.7) == 0.0


def test_breakpoints_must_increase():
    with pytest.raises(ValueError):
        PiecewisePolyExp(np.array([0.0, 0.0]), np.zeros(1), ((),))


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(-2, 2),
    b=st.floats(-2, 2),
    x=st.floats(-0.5, 0.5),
    y=st.floats(-0.5, 0.5),
)
def test_integration_is_linear(a, b, x, y):
    f = green_ppe(0.4, 2, x)
    g = null_ppe(-0.3, 2, y)
    lhs = (f.scale(a) + g.scale(b)).integrate(-1.0, 1.5)
    rhs = a * f.integrate(-1.0, 1.5) + b * g.integrate(-1.0, 1.5)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-0.5, 0.5), s=st.floats(-1.0, 1.0))
def test_shift_moves_the_knot(x, s):
    f = green_ppe(0.2, 3, x)
    t = np.linspace(-2.0, 2.0, 41)
    np.testing.assert_allclose(f.shift(s)(t), green_ppe(0.2, 3, x + s)(t), atol=1e-12)


def test_product_integral_matches_grid_sum():
    f = green_ppe(0.5, 2, 0.1)
    g = PiecewisePolyExp.bump(0.0, 1.0, 2)
    exact = (f * g).integrate()
    t = np.linspace(0.0, 1.0, 200001)
    v = f(t) * g(t)
    approx = float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))
    assert exact == pytest.approx(approx, rel=1e-8)

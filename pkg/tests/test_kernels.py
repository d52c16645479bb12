import os
import subprocess
import sys

import numpy as np
import pytest

from vtspline import _kernels as K
from vtspline._accel import backend_name


def test_green_antideriv_variants_agree(rng):
    u = rng.uniform(-3.0, 3.0, 500)
    for alpha in (0.0, 0.8, -2.0):
        for order in (1, 2, 4):
            np.testing.assert_allclose(K.green_antideriv_nb(u, alpha, order), K.green_antideriv_np(u, alpha, order), rtol=1e-13, atol=1e-15)


def test_green_antideriv_frozen():
    # int_0^1 t e^t dt = 1 for order 2, alpha 1
    assert K.green_antideriv_np(np.array([1.0]), 1.0, 2)[0] == pytest.approx(1.0, rel=1e-14)
    assert K.green_antideriv_nb(np.array([0.0, 0.5]), 0.0, 1).tolist() == [0.0, 0.5]
    assert K.green_antideriv_nb(np.array([2.0]), 0.0, 3)[0] == pytest.approx(8.0 / 6.0, rel=1e-15)


def test_eval_tensor_variants_agree(rng):
    A, P = 40, 300
    fam = rng.integers(0, 4, A).astype(np.int64)
    i1 = np.where((fam == 1) | (fam == 3), rng.integers(1, 3, A), 0).astype(np.int64)
    i2 = np.where((fam == 2) | (fam == 3), rng.integers(1, 4, A), 0).astype(np.int64)
    args = (
        rng.uniform(-0.2, 1.2, P), rng.uniform(-0.2, 1.2, P), fam, i1, i2,
        rng.standard_normal(A), rng.uniform(0, 1, A), rng.uniform(0, 1, A), 0.3, 2, 0.0, -0.7, 3, 0.0,
    )
    np.testing.assert_allclose(K.eval_tensor_nb(*args), K.eval_tensor_np(*args), rtol=1e-12, atol=1e-13)


def test_fista_variants_agree(rng):
    A = rng.standard_normal((10, 40))
    y = rng.standard_normal(10)
    lam = 0.1 * float(np.max(np.abs(A.T @ y)))
    lip = float(np.linalg.norm(A, 2) ** 2)
    AT = np.ascontiguousarray(A.T)
    a = K.fista_nb(A, AT, y, lam, np.zeros(40), lip, 500, 0.0, 50)
    b = K.fista_np(A, AT, y, lam, np.zeros(40), lip, 500, 0.0, 50)
    np.testing.assert_allclose(a[0], b[0], atol=1e-10)
    assert a[1] == b[1]


def test_brute_force_variants_agree(rng):
    A = rng.standard_normal((5, 12))
    y = rng.standard_normal(5)
    lam = 0.2 * float(np.max(np.abs(A.T @ y)))
    a = K.brute_force_nb(A, y, lam, 3, 1e-10)
    b = K.brute_force_np(A, y, lam, 3, 1e-10)
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    np.testing.assert_allclose(a[2], b[2], atol=1e-12)


def test_env_flag_selects_numpy():
    env = dict(os.environ, VTSPLINE_DISABLE_NUMBA="1")
    code = (
        "import vtspline, vtspline._kernels as K;"
        "print(vtspline.backend_name(), K.fista is K.fista_np, K.eval_tensor is K.eval_tensor_np)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True", "True"]


def test_default_backend_is_numba():
    if os.environ.get("VTSPLINE_DISABLE_NUMBA"):
        pytest.skip("fallback forced by the environment")
    assert backend_name() == "numba"
    assert K.fista is K.fista_nb


def test_numpy_backend_solves_end_to_end():
    env = dict(os.environ, VTSPLINE_DISABLE_NUMBA="1")
    code = """
import numpy as np
from vtspline.measurements import SeparableBox
from vtspline.odo_core import Odo
from vtspline.solver import GridSpec, Problem, lambda_max, solve
rng = np.random.default_rng(3)
fns = [SeparableBox((a, a + 0.3, b, b + 0.3)) for a, b in rng.uniform(0, 0.6, (5, 2))]
y = rng.standard_normal(5)
o = Odo(0.0, 1)
base = Problem.create(o, o, fns, y, 1.0)
p = base.with_data(y, 0.05 * lambda_max(base, GridSpec.uniform(base.domain, levels=0)))
r = solve(p, GridSpec.uniform(p.domain, 9, 17, 1))
print(r.certification.passed)
"""
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "True"

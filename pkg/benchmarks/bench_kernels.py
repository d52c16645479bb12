"""Wall-clock comparison of the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--seed 0]

Both variants are called directly, so the env switch has no effect here.
Compilation happens in a warm-up call that is excluded from the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vtspline import _kernels as K


def _best(fn, repeat: int) -> float:
    fn()
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _cases(rng: np.random.Generator):
    u = rng.uniform(-3.0, 3.0, 200_000)
    yield "green_antideriv n=200000", (lambda f: f(u, 0.7, 3)), K.green_antideriv_nb, K.green_antideriv_np

    P, A = 20_000, 400
    t1, t2 = rng.uniform(0, 1, P), rng.uniform(0, 1, P)
    fam = rng.integers(0, 4, A).astype(np.int64)
    i1 = np.where((fam == 1) | (fam == 3), rng.integers(1, 3, A), 0).astype(np.int64)
    i2 = np.where((fam == 2) | (fam == 3), rng.integers(1, 3, A), 0).astype(np.int64)
    w, x1, x2 = rng.standard_normal(A), rng.uniform(0, 1, A), rng.uniform(0, 1, A)
    args = (t1, t2, fam, i1, i2, w, x1, x2, 0.0, 2, 0.0, -0.5, 2, 0.0)
    yield f"eval_tensor points={P} atoms={A}", (lambda f: f(*args)), K.eval_tensor_nb, K.eval_tensor_np

    M, N = 30, 3000
    Am = rng.standard_normal((M, N))
    y = rng.standard_normal(M)
    lam = 0.05 * float(np.max(np.abs(Am.T @ y)))
    lip = float(np.linalg.norm(Am, 2) ** 2)
    AT = np.ascontiguousarray(Am.T)
    yield (
        f"fista M={M} P={N} 2000 iters",
        lambda f: f(Am, AT, y, lam, np.zeros(N), lip, 2000, 0.0, 50),
        K.fista_nb,
        K.fista_np,
    )

    Ab = rng.standard_normal((6, 24))
    yb = rng.standard_normal(6)
    lamb = 0.2 * float(np.max(np.abs(Ab.T @ yb)))
    yield "brute_force P=24 support<=4", (lambda f: f(Ab, yb, lamb, 4, 1e-10)), K.brute_force_nb, K.brute_force_np


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<40} {'numba [s]':>11} {'numpy [s]':>11} {'speedup':>8}")
    for name, call, nb, np_ in _cases(rng):
        t_nb = _best(lambda: call(nb), args.repeat)
        t_np = _best(lambda: call(np_), args.repeat)
        print(f"{name:<40} {t_nb:11.4f} {t_np:11.4f} {t_np / t_nb:8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Hot loops with a numba implementation and a vectorized numpy twin.

Every public kernel has a ``*_nb`` (``@njit``) and a ``*_np`` variant with the
same signature. The unsuffixed name is bound at import time according to
:data:`vtspline._accel.USE_NUMBA`. Tests and the benchmark call both variants
explicitly.

Atom family codes used by the tensor evaluator:
0 = Green x Green, 1 = poly x Green, 2 = Green x poly, 3 = poly x poly.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ._accel import USE_NUMBA, njit

FAM_TG = 0
FAM_PG = 1
FAM_GP = 2
FAM_PP = 3

_SERIES_EPS = 1e-17
_SERIES_CAP = 200000
_TAIL_CUTOFF = 600.0


# ---------------------------------------------------------------- moments


def _moment_py(k: int, r: float, h: float) -> float:
    """Return int_0^h u^k exp(r u) du for h >= 0 using positive-term series."""
    if h <= 0.0:
        return 0.0
    if r == 0.0:
        return h ** (k + 1) / (k + 1)
    x = abs(r) * h
    if r > 0.0:
        term = 1.0
        total = 1.0 / (k + 1)
        j = 0
        while j < _SERIES_CAP:
            j += 1
            term *= x / j
            add = term / (k + 1 + j)
            total += add
            if add < _SERIES_EPS * total and j > x:
                break
        return h ** (k + 1) * total
    if x > _TAIL_CUTOFF:
        return math.gamma(k + 1) / abs(r) ** (k + 1)
    term = 1.0 / (k + 1)
    total = term
    j = 0
    while j < _SERIES_CAP:
        j += 1
        term *= x / (k + 1 + j)
        total += term
        if term < _SERIES_EPS * total and j > x:
            break
    return math.exp(-x) * h ** (k + 1) * total


_moment_nb = njit(_moment_py)


@njit
def _green_antideriv_scalar(u, alpha, order):
    m = order - 1
    fact = 1.0
    for i in range(2, m + 1):
        fact *= i
    if u >= 0.0:
        return _moment_nb(m, alpha, u) / fact
    sign = 1.0 if order % 2 == 0 else -1.0
    return sign * _moment_nb(m, -alpha, -u) / fact


@njit
def green_antideriv_nb(u, alpha, order):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = _green_antideriv_scalar(u[i], alpha, order)
    return out


def _moment_array_np(k: int, r: float, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    out = np.zeros_like(h)
    pos = h > 0.0
    if not np.any(pos):
        return out
    hp = h[pos]
    if r == 0.0:
        out[pos] = hp ** (k + 1) / (k + 1)
        return out
    x = abs(r) * hp
    total = np.full_like(hp, 1.0 / (k + 1))
    if r > 0.0:
        term = np.ones_like(hp)
        for j in range(1, _SERIES_CAP):
            term = term * x / j
            add = term / (k + 1 + j)
            total += add
            if j > x.max() and np.all(add < _SERIES_EPS * total):
                break
        out[pos] = hp ** (k + 1) * total
        return out
    far = x > _TAIL_CUTOFF
    xs = np.where(far, 0.0, x)
    term = total.copy()
    for j in range(1, _SERIES_CAP):
        term = term * xs / (k + 1 + j)
        total += term
        if j > xs.max() and np.all(term < _SERIES_EPS * total):
            break
    res = np.exp(-xs) * hp ** (k + 1) * total
    res[far] = math.gamma(k + 1) / abs(r) ** (k + 1)
    out[pos] = res
    return out


def green_antideriv_np(u, alpha, order):
    """Phi(u) = int_0^u s^(N-1) exp(alpha s) / (N-1)! ds, any real u."""
    u = np.asarray(u, dtype=float)
    m = order - 1
    fact = math.factorial(m)
    out = np.empty_like(u)
    pos = u >= 0.0
    out[pos] = _moment_array_np(m, alpha, u[pos]) / fact
    sign = 1.0 if order % 2 == 0 else -1.0
    out[~pos] = sign * _moment_array_np(m, -alpha, -u[~pos]) / fact
    return out


def moment(k: int, r: float, h: float) -> float:
    """int_0^h u^k e^{r u} du (h >= 0); scalar entry point used by the PPE engine."""
    return _moment_py(int(k), float(r), float(h))


# ---------------------------------------------------------------- factors


@njit
def _green_scalar(t, x, alpha, order):
    d = t - x
    if d < 0.0:
        return 0.0
    v = math.exp(alpha * d)
    for i in range(1, order):
        v *= d / i
    return v


@njit
def _poly_scalar(t, anchor, alpha, n):
    d = t - anchor
    v = math.exp(alpha * d)
    for i in range(1, n):
        v *= d / i
    return v


def green_factor_np(t, x, alpha, order):
    d = np.asarray(t, dtype=float) - x
    dp = np.maximum(d, 0.0)
    v = np.exp(alpha * dp) * dp ** (order - 1) / math.factorial(order - 1)
    return np.where(d < 0.0, 0.0, v)


def poly_factor_np(t, anchor, alpha, n):
    d = np.asarray(t, dtype=float) - anchor
    return np.exp(alpha * d) * d ** (n - 1) / math.factorial(n - 1)


@njit
def eval_tensor_nb(t1, t2, fam, i1, i2, w, x1, x2, a1, n1, c1, a2, n2, c2):
    out = np.zeros(t1.shape[0])
    for p in range(t1.shape[0]):
        acc = 0.0
        for k in range(fam.shape[0]):
            f = fam[k]
            if f == 0 or f == 2:
                u = _green_scalar(t1[p], x1[k], a1, n1)
            else:
                u = _poly_scalar(t1[p], c1, a1, i1[k])
            if u == 0.0:
                continue
            if f == 0 or f == 1:
                v = _green_scalar(t2[p], x2[k], a2, n2)
            else:
                v = _poly_scalar(t2[p], c2, a2, i2[k])
            acc += w[k] * u * v
        out[p] = acc
    return out


def eval_tensor_np(t1, t2, fam, i1, i2, w, x1, x2, a1, n1, c1, a2, n2, c2):
    out = np.zeros(t1.shape[0])
    for k in range(fam.shape[0]):
        f = fam[k]
        if f in (FAM_TG, FAM_GP):
            u = green_factor_np(t1, x1[k], a1, n1)
        else:
            u = poly_factor_np(t1, c1, a1, int(i1[k]))
        if f in (FAM_TG, FAM_PG):
            v = green_factor_np(t2, x2[k], a2, n2)
        else:
            v = poly_factor_np(t2, c2, a2, int(i2[k]))
        out += w[k] * u * v
    return out


# ---------------------------------------------------------------- FISTA


@njit
def fista_nb(A, At, y, lam, theta0, lip0, max_iter, tol, check_every):
    """Accelerated proximal gradient for 0.5||y - A th||^2 + lam ||th||_1.

    Backtracking on the Lipschitz estimate and gradient-based adaptive restart.
    Returns (theta, iterations, gap, lipschitz).
    """
    theta = theta0.copy()
    z = theta0.copy()
    t = 1.0
    lip = lip0
    gap = np.inf
    it = 0
    while it < max_iter:
        it += 1
        rz = y - A @ z
        grad = -(At @ rz)
        fz = 0.5 * (rz @ rz)
        while True:
            step = z - grad / lip
            thr = lam / lip
            xn = np.sign(step) * np.maximum(np.abs(step) - thr, 0.0)
            diff = xn - z
            rn = y - A @ xn
            lhs = 0.5 * (rn @ rn)
            rhs = fz + grad @ diff + 0.5 * lip * (diff @ diff)
            if lhs <= rhs + 1e-15 * (1.0 + abs(fz)):
                break
            lip *= 2.0
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if (z - xn) @ (xn - theta) > 0.0:
            tn = 1.0
            z = xn.copy()
        else:
            z = xn + ((t - 1.0) / tn) * (xn - theta)
        theta = xn
        t = tn
        if it % check_every == 0 or it == max_iter:
            r = y - A @ theta
            c = np.max(np.abs(At @ r)) if r.shape[0] > 0 else 0.0
            s = 1.0
            if c > lam:
                s = lam / c
            primal = 0.5 * (r @ r) + lam * np.sum(np.abs(theta))
            dual = s * (y @ r) - 0.5 * s * s * (r @ r)
            gap = primal - dual
            if gap <= tol:
                break
    return theta, it, gap, lip


def fista_np(A, At, y, lam, theta0, lip0, max_iter, tol, check_every):
    theta = theta0.copy()
    z = theta0.copy()
    t = 1.0
    lip = lip0
    gap = np.inf
    it = 0
    while it < max_iter:
        it += 1
        rz = y - A @ z
        grad = -(At @ rz)
        fz = 0.5 * float(rz @ rz)
        while True:
            step = z - grad / lip
            xn = np.sign(step) * np.maximum(np.abs(step) - lam / lip, 0.0)
            diff = xn - z
            rn = y - A @ xn
            if 0.5 * float(rn @ rn) <= fz + float(grad @ diff) + 0.5 * lip * float(diff @ diff) + 1e-15 * (1.0 + abs(fz)):
                break
            lip *= 2.0
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if float((z - xn) @ (xn - theta)) > 0.0:
            tn = 1.0
            z = xn.copy()
        else:
            z = xn + ((t - 1.0) / tn) * (xn - theta)
        theta = xn
        t = tn
        if it % check_every == 0 or it == max_iter:
            r = y - A @ theta
            c = float(np.max(np.abs(At @ r))) if r.shape[0] > 0 else 0.0
            s = lam / c if c > lam else 1.0
            primal = 0.5 * float(r @ r) + lam * float(np.sum(np.abs(theta)))
            dual = s * float(y @ r) - 0.5 * s * s * float(r @ r)
            gap = primal - dual
            if gap <= tol:
                break
    return theta, it, gap, lip


# ---------------------------------------------------------------- brute force


@njit
def _solve_small(G, rhs, rel_pivot):
    """Gaussian elimination with partial pivoting; ok=False on tiny pivots."""
    k = G.shape[0]
    m = rhs.shape[1]
    a = G.copy()
    b = rhs.copy()
    scale = 0.0
    for i in range(k):
        scale = max(scale, abs(a[i, i]))
    if scale == 0.0:
        return b, k == 0
    for col in range(k):
        piv = col
        for r in range(col + 1, k):
            if abs(a[r, col]) > abs(a[piv, col]):
                piv = r
        if abs(a[piv, col]) <= rel_pivot * scale:
            return b, False
        if piv != col:
            for c in range(k):
                tmp = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = tmp
            for c in range(m):
                tmp = b[col, c]
                b[col, c] = b[piv, c]
                b[piv, c] = tmp
        for r in range(col + 1, k):
            f = a[r, col] / a[col, col]
            for c in range(col, k):
                a[r, c] -= f * a[col, c]
            for c in range(m):
                b[r, c] -= f * b[col, c]
    for col in range(k - 1, -1, -1):
        for c in range(m):
            acc = b[col, c]
            for j in range(col + 1, k):
                acc -= a[col, j] * b[j, c]
            b[col, c] = acc / a[col, col]
    return b, True


@njit
def brute_force_nb(A, y, lam, max_support, rel_pivot):
    """Exhaustive support/sign enumeration; returns (objective, support, theta)."""
    p = A.shape[1]
    yy = 0.5 * (y @ y)
    best = yy
    best_sup = -np.ones(max_support, dtype=np.int64)
    best_th = np.zeros(max_support)
    Aty = A.T @ y
    gram = A.T @ A
    for k in range(1, min(max_support, p) + 1):
        idx = np.arange(k)
        while True:
            G = np.empty((k, k))
            rhs = np.zeros((k, k + 1))
            for i in range(k):
                rhs[i, 0] = Aty[idx[i]]
                rhs[i, i + 1] = 1.0
                for j in range(k):
                    G[i, j] = gram[idx[i], idx[j]]
            X, ok = _solve_small(G, rhs, rel_pivot)
            if ok:
                s = np.empty(k)
                th = np.empty(k)
                for mask in range(1 << k):
                    for i in range(k):
                        s[i] = 1.0 if (mask >> i) & 1 else -1.0
                    feasible = True
                    for i in range(k):
                        acc = X[i, 0]
                        for j in range(k):
                            acc -= lam * X[i, j + 1] * s[j]
                        th[i] = acc
                        if acc * s[i] <= 0.0:
                            feasible = False
                            break
                    if not feasible:
                        continue
                    quad = 0.0
                    lin = 0.0
                    for i in range(k):
                        lin += th[i] * (Aty[idx[i]] - lam * s[i])
                        for j in range(k):
                            quad += th[i] * G[i, j] * th[j]
                    obj = yy - lin + 0.5 * quad
                    if obj < best:
                        best = obj
                        best_sup[:] = -1
                        best_th[:] = 0.0
                        for i in range(k):
                            best_sup[i] = idx[i]
                            best_th[i] = th[i]
            # next combination in lexicographic order
            pos = k - 1
            while pos >= 0 and idx[pos] == p - k + pos:
                pos -= 1
            if pos < 0:
                break
            idx[pos] += 1
            for j in range(pos + 1, k):
                idx[j] = idx[j - 1] + 1
    return best, best_sup, best_th


def brute_force_np(A, y, lam, max_support, rel_pivot):
    p = A.shape[1]
    yy = 0.5 * float(y @ y)
    best = yy
    best_sup = -np.ones(max_support, dtype=np.int64)
    best_th = np.zeros(max_support)
    Aty = A.T @ y
    gram = A.T @ A
    for k in range(1, min(max_support, p) + 1):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k)))
        for sup in itertools.combinations(range(p), k):
            sup = list(sup)
            G = gram[np.ix_(sup, sup)]
            scale = np.max(np.abs(np.diag(G)))
            if scale == 0.0:
                continue
            # same pivot rule as the compiled path
            rhs = np.hstack([Aty[sup][:, None], np.eye(k)])
            X, ok = _solve_small_np(G, rhs, rel_pivot)
            if not ok:
                continue
            th = X[:, 0][None, :] - lam * signs @ X[:, 1:].T
            feas = np.all(th * signs > 0.0, axis=1)
            if not np.any(feas):
                continue
            th = th[feas]
            sg = signs[feas]
            lin = th @ Aty[sup] - lam * np.sum(th * sg, axis=1)
            quad = np.einsum("ij,jk,ik->i", th, G, th)
            obj = yy - lin + 0.5 * quad
            j = int(np.argmin(obj))
            if obj[j] < best:
                best = float(obj[j])
                best_sup[:] = -1
                best_th[:] = 0.0
                best_sup[:k] = sup
                best_th[:k] = th[j]
    return best, best_sup, best_th


def _solve_small_np(G, rhs, rel_pivot):
    k = G.shape[0]
    a = G.astype(float).copy()
    b = rhs.astype(float).copy()
    scale = np.max(np.abs(np.diag(a)))
    for col in range(k):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) <= rel_pivot * scale:
            return b, False
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        f = a[col + 1 :, col] / a[col, col]
        a[col + 1 :, col:] -= np.outer(f, a[col, col:])
        b[col + 1 :] -= np.outer(f, b[col])
    for col in range(k - 1, -1, -1):
        b[col] = (b[col] - a[col, col + 1 :] @ b[col + 1 :]) / a[col, col]
    return b, True


if USE_NUMBA:
    green_antideriv = green_antideriv_nb
    eval_tensor = eval_tensor_nb
    fista = fista_nb
    brute_force = brute_force_nb
else:
    green_antideriv = green_antideriv_np
    eval_tensor = eval_tensor_np
    fista = fista_np
    brute_force = brute_force_np

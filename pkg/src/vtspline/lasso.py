"""l1 problems with an unpenalized block: ``0.5||y - A th - B d||^2 + lam ||th||_1``.

The unpenalized block is eliminated exactly: with ``P`` the orthogonal
projector onto ``range(B)``'s complement, the problem in ``th`` is a plain
lasso on ``(P A, P y)`` and ``d`` is the least-squares fit of ``y - A th`` on
``B``. Optimality is certified by the duality gap of that lasso, whose dual
variable is automatically orthogonal to ``range(B)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

RANK_REL_TOL = 1e-10
MAX_ORACLE_COLUMNS = 50
MAX_ORACLE_SUPPORT = 6


class NoConvergence(RuntimeError):
    def __init__(self, iterations: int, gap: float):
        super().__init__(f"no convergence after {iterations} iterations (duality gap {gap:.3e})")
        self.iterations = iterations
        self.gap = gap


class NumericalStall(RuntimeError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Eliminated:
    """Data with the unpenalized block projected out."""

    A: np.ndarray
    y: np.ndarray
    Q: np.ndarray  # orthonormal basis of range(B)

    def fit_null(self, B: np.ndarray, r: np.ndarray) -> np.ndarray:
        if B.shape[1] == 0:
            return np.zeros(0)
        return np.linalg.lstsq(B, r, rcond=None)[0]


def numerical_rank(M: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > rel_tol * sv[0])) if sv[0] > 0 else 0


def range_basis(B: np.ndarray, rel_tol: float = RANK_REL_TOL) -> np.ndarray:
    if B.shape[1] == 0:
        return np.zeros((B.shape[0], 0))
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    r = int(np.sum(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0
    return U[:, :r]


def eliminate(A: np.ndarray, B: np.ndarray, y: np.ndarray) -> Eliminated:
    Q = range_basis(B)

    def perp(v):
        return v - Q @ (Q.T @ v)

    return Eliminated(np.ascontiguousarray(perp(A)), np.ascontiguousarray(perp(y)), Q)


def objective(A, B, y, lam, theta, d) -> float:
    r = y - A @ theta - (B @ d if B.shape[1] else 0.0)
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(theta)))


def _gap(At: np.ndarray, yt: np.ndarray, lam: float, theta: np.ndarray) -> float:
    r = yt - At @ theta
    c = float(np.max(np.abs(At.T @ r))) if At.shape[1] else 0.0
    s = lam / c if c > lam else 1.0
    primal = 0.5 * float(r @ r) + lam * float(np.sum(np.abs(theta)))
    dual = s * float(yt @ r) - 0.5 * s * s * float(r @ r)
    return max(primal - dual, 0.0)


def duality_gap(A, B, y, lam, theta) -> float:
    """Gap at ``theta`` with ``d`` at its exact least-squares value."""
    e = eliminate(A, B, y)
    return _gap(e.A, e.y, lam, theta)


def lambda_max(A, B, y) -> float:
    """Smallest ``lam`` for which ``theta = 0`` is optimal."""
    e = eliminate(A, B, y)
    return float(np.max(np.abs(e.A.T @ e.y))) if A.shape[1] else 0.0


@dataclass(frozen=True)
class LassoSolution:
    theta: np.ndarray
    d: np.ndarray
    objective: float
    gap: float
    iterations: int


def _restricted_solve(At, yt, lam, S, s):
    """Stationary point of the smooth problem on support ``S`` with signs ``s``, or None.

    None means the system is inconsistent: ``s`` has a component along the
    null space of ``At_S`` and the cost decreases without bound there.
    """
    As = At[:, S]
    G = As.T @ As
    rhs = As.T @ yt - lam * s
    x = np.linalg.lstsq(G, rhs, rcond=None)[0]
    scale = float(np.linalg.norm(rhs)) + lam * np.sqrt(len(S))
    if np.linalg.norm(G @ x - rhs) > 1e-9 * scale:
        return None
    return x


def _descend_along_null(At, lam, S, s, z):
    """Walk from feasible ``z`` along a null direction of ``At_S`` that lowers the l1 cost.

    Returns the index (into ``S``) of the coefficient that reaches zero first.
    """
    v = _null_direction(At[:, S])
    if v is None:
        return None
    if s @ v > 0.0:
        v = -v
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(s * v < 0.0, -z / v, np.inf)
    i = int(np.argmin(ratios))
    if not np.isfinite(ratios[i]):
        return None
    z += ratios[i] * v
    z[i] = 0.0
    return i


def _active_set_polish(At, yt, lam, theta, max_steps: int) -> np.ndarray | None:
    """Exact KKT point near ``theta`` by sign-constrained active-set steps."""
    if At.shape[1] == 0:
        return None
    rank = numerical_rank(At)
    if np.count_nonzero(theta) > rank:
        # a dense iterate makes the restricted Gram singular and large; thin it first
        try:
            theta, _ = _caratheodory(At, theta, rank)
        except NumericalStall:
            return None
    S = list(np.flatnonzero(theta))
    s = list(np.sign(theta[S]))
    z = np.asarray(theta[S], dtype=float)
    for _ in range(max_steps):
        sv = np.array(s)
        x = _restricted_solve(At, yt, lam, S, sv) if S else np.zeros(0)
        if x is None:
            i = _descend_along_null(At, lam, S, sv, z)
            if i is None:
                return None
            del S[i], s[i]
            z = np.delete(z, i)
            continue
        bad = [i for i in range(len(S)) if x[i] * s[i] <= 0.0]
        if bad:
            S = [S[i] for i in range(len(S)) if i not in bad]
            s = [s[i] for i in range(len(s)) if i not in bad]
            z = x[[i for i in range(len(x)) if i not in bad]]
            continue
        full = np.zeros(At.shape[1])
        full[S] = x
        z = x.copy()
        c = At.T @ (yt - At @ full)
        c[S] = 0.0
        j = int(np.argmax(np.abs(c)))
        if abs(c[j]) <= lam * (1.0 + 1e-12):
            return full
        S.append(j)
        s.append(float(np.sign(c[j])))
        z = np.append(z, 0.0)
    return None


def solve_block_lasso(
    A: np.ndarray,
    B: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    theta0: np.ndarray | None = None,
    polish: bool = True,
) -> LassoSolution:
    """FISTA with backtracking on the eliminated problem, then exact polishing.

    Iterations run in chunks; after each chunk an active-set polish started
    from the current support is tried and kept only if it lowers the gap.
    Stops once the gap is at most ``tol``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    y = np.asarray(y, dtype=float)
    e = eliminate(A, B, y)
    P = A.shape[1]
    theta = np.zeros(P) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    At = e.A
    AtT = np.ascontiguousarray(At.T)
    fro = float(np.sum(At * At))
    iters = 0
    gap = _gap(At, e.y, lam, theta)
    if P == 0 or fro == 0.0:
        theta = np.zeros(P)
        gap = _gap(At, e.y, lam, theta)
    lip = fro / max(min(At.shape), 1)
    chunk = 200
    while gap > tol and iters < max_iter and P > 0 and fro > 0.0:
        n = min(chunk, max_iter - iters)
        theta, done, _, lip = _kernels.fista(At, AtT, e.y, lam, theta, lip, n, tol, min(50, n))
        iters += int(done)
        gap = _gap(At, e.y, lam, theta)
        if gap > tol and polish:
            cand = _active_set_polish(At, e.y, lam, theta, max_steps=4 * A.shape[0] + 20)
            if cand is not None:
                cgap = _gap(At, e.y, lam, cand)
                if cgap < gap:
                    theta, gap = cand, cgap
        chunk = min(2 * chunk, 20_000)
    if gap > tol:
        raise NoConvergence(iters, gap)
    d = e.fit_null(B, y - A @ theta)
    return LassoSolution(theta, d, objective(A, B, y, lam, theta, d), gap, iters)


def _caratheodory(At: np.ndarray, theta: np.ndarray, bound: int) -> tuple[np.ndarray, int]:
    """Shrink the support of ``theta`` to ``bound`` keeping ``At theta`` and the l1 cost.

    Each step works on the ``rows + 2`` smallest coefficients, takes the last
    right singular vector of ``[At_S; sign(th_S)]`` there and walks until the
    first coefficient reaches zero, preferring the direction that zeroes the
    smaller ``|th|``. Signs never flip, so the cost is unchanged for any
    ``theta``, optimal or not.
    """
    theta = np.asarray(theta, dtype=float).copy()
    steps = 0
    width = At.shape[0] + 2
    while True:
        S = np.flatnonzero(theta)
        if S.size <= bound:
            return theta, steps
        S = np.sort(S[np.argsort(np.abs(theta[S]), kind="stable")[:width]])
        As = At[:, S]
        s = np.sign(theta[S])
        v = _null_direction(np.vstack([As, s[None, :]]))
        forced = 0.0
        if v is None:
            # rounding can hide the sign row in the row space; fall back to the
            # measurement-preserving directions and never increase the l1 cost
            v = _null_direction(As)
            if v is None:
                raise NumericalStall(f"no null direction at support size {S.size} > {bound}")
            forced = float(s @ v)
        th = theta[S]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = -th / v
        nz = np.abs(v) > 1e-14 * np.max(np.abs(v))
        cands = []
        for sign in (1.0, -1.0):
            if forced * sign > 0.0:
                continue
            ok = nz & (ratios * sign > 0.0)
            if np.any(ok):
                idx = np.flatnonzero(ok)
                i = idx[np.argmin(np.abs(ratios[idx]))]
                cands.append((abs(th[i]), i, ratios[i]))
        if not cands:
            raise NumericalStall("null direction does not reach a zero coefficient")
        _, i, t = min(cands, key=lambda c: (c[0], c[1]))
        new = th + t * v
        new[i] = 0.0
        new[np.abs(new) <= 1e-15 * np.max(np.abs(th))] = 0.0
        theta[S] = new
        steps += 1


def reduce_support(
    A: np.ndarray,
    B: np.ndarray,
    y: np.ndarray,
    lam: float,
    theta: np.ndarray,
    bound: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Move along measurement- and cost-preserving directions until ``|supp| <= bound``.

    Returns ``(theta, d, steps)``.
    """
    e = eliminate(A, B, y)
    theta, steps = _caratheodory(e.A, theta, bound)
    d = e.fit_null(B, y - A @ theta)
    return theta, d, steps


def _null_direction(M: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray | None:
    cols = M.shape[1]
    _, sv, Vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(sv > rel_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank >= cols:
        return None
    return Vt[-1]


def brute_force(A, B, y, lam, max_support: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Exhaustive search over supports of size ``<= max_support`` and sign patterns.

    Returns ``(objective, support, theta_on_support)``.
    """
    if A.shape[1] > MAX_ORACLE_COLUMNS or max_support > MAX_ORACLE_SUPPORT:
        raise TooLarge(f"oracle limited to P <= {MAX_ORACLE_COLUMNS}, support <= {MAX_ORACLE_SUPPORT}")
    e = eliminate(np.asarray(A, float), np.asarray(B, float).reshape(len(y), -1), np.asarray(y, float))
    obj, sup, th = _kernels.brute_force(e.A, e.y, float(lam), int(max_support), 1e-10)
    keep = sup >= 0
    return float(obj), sup[keep], th[keep]

"""Dense linear-algebra kernels for desk-scale problems (n up to a few hundred).

All functions are pure; they never modify their inputs.
"""
import numpy as np
import scipy.linalg as spla

from .config import DEFAULT_TOLERANCES
from .errors import Infeasible, NotSPD, SingularLyapunov


def _check_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def is_symmetric(A, rtol=None):
    rtol = DEFAULT_TOLERANCES.symmetry if rtol is None else rtol
    scale = max(np.linalg.norm(A), 1e-300)
    return np.linalg.norm(A - A.T) <= rtol * scale


def cholesky(A, tol=DEFAULT_TOLERANCES):
    """Lower-triangular ``L`` with ``L @ L.T == A``.

    Raises
    ------
    NotSPD
        If ``A`` is not symmetric (relative tolerance ``tol.symmetry``) or a
        pivot is not positive.
    """
    A = _check_square(A)
    if not is_symmetric(A, tol.symmetry):
        raise NotSPD("matrix is not symmetric")
    try:
        L = np.linalg.cholesky((A + A.T) / 2)
    except np.linalg.LinAlgError as e:
        raise NotSPD(f"non-positive pivot in Cholesky factorization: {e}") from None
    return L


def jacobi_eigh(S, tol=1e-15, max_sweeps=60):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns. O(n^3) per sweep; intended for n below ~100.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    w = np.diag(A)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _standard_eigh(S, method):
    if method == "lapack":
        return spla.eigh(S)
    if method == "jacobi":
        return jacobi_eigh(S)
    raise ValueError(f"unknown eigen method {method!r}")


def _fix_sign(v):
    # deterministic sign: largest-magnitude entry positive
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def whiten(A, L):
    """``L^{-1} sym(A) L^{-T}`` for a Cholesky factor ``L``."""
    S = (A + A.T) / 2
    X = spla.solve_triangular(L, S, lower=True)
    X = spla.solve_triangular(L, X.T, lower=True)
    return (X + X.T) / 2


def sym_eig(A, B, method="lapack", tol=DEFAULT_TOLERANCES):
    """Full spectrum of the symmetric-definite pencil ``(A, B)``.

    Returns ascending eigenvalues and B-orthonormal eigenvectors (columns).
    """
    A = _check_square(A)
    B = _check_square(B, "B")
    if A.shape != B.shape:
        raise ValueError("A and B must have the same shape")
    if not is_symmetric(A, tol.symmetry):
        raise ValueError("A must be symmetric")
    L = cholesky(B, tol)
    w, W = _standard_eigh(whiten(A, L), method)
    V = spla.solve_triangular(L.T, W, lower=False)
    return w, V


def sym_eig_smallest(A, B, method="lapack", tol=DEFAULT_TOLERANCES):
    """Smallest eigenvalue of ``A v = lam B v`` and its eigenvector.

    The pencil is reduced to standard form through the Cholesky factor of
    ``B`` and the whole spectrum is computed, so the minimum can never be
    missed. The returned ``v`` satisfies ``v.T @ B @ v == 1``.
    """
    w, V = sym_eig(A, B, method, tol)
    lam, v = float(w[0]), _fix_sign(V[:, 0])
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    res = np.linalg.norm(A @ v - lam * (B @ v))
    bound = tol.eig_residual * (np.linalg.norm(A, 2) + abs(lam) * np.linalg.norm(B, 2))
    if res > bound:
        raise RuntimeError(f"eigen residual {res:.3e} exceeds {bound:.3e}")
    return lam, v


# ---------------------------------------------------------------------------
# Lyapunov equation  T^T P + P T = C


def _lyap_sign(T, C, maxiter, sign_tol):
    # A X + X A^T + G = 0 with A = -T^T is the stable-form equation for the
    # sign iteration; A_k -> -I when T has spectrum in the open right half-plane.
    n = T.shape[0]
    Ak = -T.T.copy()
    Gk = C.copy()
    I = np.eye(n)
    for _ in range(maxiter):
        try:
            Ainv = np.linalg.inv(Ak)
        except np.linalg.LinAlgError:
            return None
        _, logdet = np.linalg.slogdet(Ak)
        c = np.exp(logdet / n)
        if not np.isfinite(c) or c <= 0:
            return None
        A_next = (Ak / c + c * Ainv) / 2
        G_next = (Gk / c + c * (Ainv @ Gk @ Ainv.T)) / 2
        err = np.linalg.norm(A_next - Ak, 1)
        Ak, Gk = A_next, (G_next + G_next.T) / 2
        if err <= sign_tol * np.linalg.norm(Ak, 1) * 10 * n:
            break
    if np.linalg.norm(Ak + I, 1) > 1e-6 * n:
        # converged to a sign matrix other than -I: T is not stable
        return None
    return Gk / 2


def _lyap_kron(T, C):
    # symmetric unknowns P_ab, a <= b; equations on the upper triangle
    n = T.shape[0]
    iu = np.triu_indices(n)
    m = len(iu[0])
    K = np.empty((m, m))
    for k, (a, b) in enumerate(zip(*iu)):
        L = np.zeros((n, n))
        # L(E_ab) = outer(T[a,:], e_b) + outer(e_a, T[b,:])
        L[:, b] += T[a, :]
        L[a, :] += T[b, :]
        if a != b:
            L[:, a] += T[b, :]
            L[b, :] += T[a, :]
        K[:, k] = L[iu]
    try:
        x = np.linalg.solve(K, C[iu])
    except np.linalg.LinAlgError:
        return None
    P = np.zeros((n, n))
    P[iu] = x
    return P + np.triu(P, 1).T


def lyapunov_residual(T, P, C):
    return np.linalg.norm(T.T @ P + P @ T - C)


def solve_lyapunov(T, C, tol=DEFAULT_TOLERANCES):
    """Solve ``T.T @ P + P @ T = C`` for symmetric ``P``.

    Uses the scaled matrix-sign-function Newton iteration; for ``n`` up to
    ``tol.lyapunov_kron_max_n`` a direct Kronecker solve is the fallback.
    Either result must meet the residual bound
    ``||T^T P + P T - C||_F <= tol.lyapunov_residual * ||C||_F``.

    Raises
    ------
    SingularLyapunov
        If no path produces an acceptable solution (typically ``T`` is not
        stable, or the spectra of ``T`` and ``-T`` intersect).
    """
    T = _check_square(T, "T")
    C = _check_square(C, "C")
    if T.shape != C.shape:
        raise ValueError("T and C must have the same shape")
    C = (C + C.T) / 2
    n = T.shape[0]
    bound = tol.lyapunov_residual * max(np.linalg.norm(C), 1e-300)

    P = _lyap_sign(T, C, tol.lyapunov_maxiter, tol.lyapunov_sign_tol)
    if P is not None and lyapunov_residual(T, P, C) <= bound:
        return P
    if n <= tol.lyapunov_kron_max_n:
        P = _lyap_kron(T, C)
        if P is not None and np.all(np.isfinite(P)) and lyapunov_residual(T, P, C) <= bound:
            return P
    raise SingularLyapunov(
        "Lyapunov equation not solved to tolerance; T is likely not stable"
    )


# ---------------------------------------------------------------------------
# Bounded-variable simplex for   min c^T y   s.t.  l <= y <= u,  a_i^T y >= b_i


def _bounded_simplex(T, x, basis, cost, ub, allowed, eps, max_iter=10000):
    m, N = T.shape
    # nonbasic variables sit at 0 or at their upper bound; recover which
    at_upper = np.isfinite(ub) & (ub > 0) & (x >= ub)
    at_upper[basis] = False
    for _ in range(max_iter):
        d = cost - cost[basis] @ T
        nonbasic = np.ones(N, dtype=bool)
        nonbasic[basis] = False
        enter = -1
        for j in range(N):
            if not (nonbasic[j] and allowed[j]):
                continue
            if (not at_upper[j] and d[j] < -eps) or (at_upper[j] and d[j] > eps):
                enter = j
                break
        if enter < 0:
            return x, basis
        j = enter
        sigma = -1.0 if at_upper[j] else 1.0
        rate = -sigma * T[:, j]
        t_best = ub[j]
        leave = -1
        for i in range(m):
            bi = basis[i]
            if rate[i] < -eps:
                t = max(x[bi], 0.0) / -rate[i]
            elif rate[i] > eps and np.isfinite(ub[bi]):
                t = max(ub[bi] - x[bi], 0.0) / rate[i]
            else:
                continue
            if t < t_best or (t == t_best and leave >= 0 and bi < basis[leave]):
                t_best, leave = t, i
        if not np.isfinite(t_best):
            raise RuntimeError("LP unbounded; box bounds must be finite")
        x[basis] += t_best * rate
        x[j] += sigma * t_best
        if leave < 0:
            at_upper[j] = not at_upper[j]
            x[j] = ub[j] if at_upper[j] else 0.0
            continue
        r = leave
        out = basis[r]
        to_upper = rate[r] > 0
        x[out] = ub[out] if to_upper else 0.0
        at_upper[out] = to_upper
        at_upper[j] = False
        T[r] /= T[r, j]
        for i in range(m):
            if i != r and T[i, j] != 0.0:
                T[i] -= T[i, j] * T[r]
        basis[r] = j
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(c, lower, upper, constraints=(), tol=DEFAULT_TOLERANCES):
    """Minimize ``c^T y`` over a box intersected with half-spaces ``a^T y >= b``.

    Parameters
    ----------
    c
        Objective vector of length ``Q``.
    lower, upper
        Finite box bounds.
    constraints
        Iterable of ``(a, b)`` pairs.

    Returns
    -------
    value, y
        Optimal objective value and a minimizer.

    Raises
    ------
    Infeasible
        If the constraints cannot be satisfied inside the box.
    """
    c = np.asarray(c, dtype=float)
    l = np.asarray(lower, dtype=float)
    u = np.asarray(upper, dtype=float)
    Q = c.size
    if l.shape != (Q,) or u.shape != (Q,):
        raise ValueError("box bounds must match the objective dimension")
    if not (np.all(np.isfinite(l)) and np.all(np.isfinite(u))):
        raise ValueError("box bounds must be finite")
    if np.any(u < l):
        raise Infeasible("empty box")
    cons = [(np.asarray(a, dtype=float), float(b)) for a, b in constraints]
    m = len(cons)
    G = np.array([a for a, _ in cons]).reshape(m, Q)
    b = np.array([bb for _, bb in cons])
    bp = b - G @ l
    U = u - l

    art_rows = [i for i in range(m) if bp[i] > 0]
    k = len(art_rows)
    N = Q + m + k
    A = np.zeros((m, N))
    A[:, :Q] = G
    A[:, Q:Q + m] = -np.eye(m)
    for a_idx, i in enumerate(art_rows):
        A[i, Q + m + a_idx] = 1.0
    ub = np.concatenate([U, np.full(m, np.inf), np.full(k, np.inf)])
    x = np.zeros(N)
    basis = []
    art_of_row = {i: Q + m + a for a, i in enumerate(art_rows)}
    for i in range(m):
        if i in art_of_row:
            basis.append(art_of_row[i])
            x[art_of_row[i]] = bp[i]
        else:
            basis.append(Q + i)
            x[Q + i] = -bp[i]
    B = A[:, basis]
    T = np.linalg.solve(B, A) if m else A.copy()

    scale = max(1.0, np.max(np.abs(A)) if A.size else 1.0)
    eps = tol.lp_pivot * scale
    allowed = np.ones(N, dtype=bool)

    if k:
        cost1 = np.zeros(N)
        cost1[Q + m:] = 1.0
        x, basis = _bounded_simplex(T, x, basis, cost1, ub, allowed, eps)
        infeas = float(np.sum(x[Q + m:]))
        if infeas > tol.lp_feasibility * (1.0 + np.max(np.abs(bp))):
            raise Infeasible(f"constraints infeasible (phase-1 residual {infeas:.3e})")
        ub[Q + m:] = 0.0
        allowed[Q + m:] = False

    cost2 = np.zeros(N)
    cost2[:Q] = c
    eps2 = tol.lp_pivot * max(1.0, np.max(np.abs(c)) if Q else 1.0, scale)
    x, basis = _bounded_simplex(T, x, basis, cost2, ub, allowed, eps2)

    # clean up accumulated rounding: nonbasic at their bounds, basic re-solved
    if m:
        nonbasic = np.setdiff1d(np.arange(N), basis)
        rhs = bp - A[:, nonbasic] @ x[nonbasic]
        x[basis] = np.linalg.solve(A[:, basis], rhs)
    z = np.clip(x[:Q], 0.0, U)
    y = np.clip(l + z, l, u)
    return float(c @ y), y

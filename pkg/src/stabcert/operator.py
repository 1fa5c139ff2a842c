"""Affinely decomposed bilinear forms and their exact coercivity constants."""
import hashlib
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as spla

from .config import DEFAULT_TOLERANCES
from .numerics import cholesky, jacobi_eigh, whiten, _fix_sign
from .theta import ThetaMap, eval_theta


@dataclass(frozen=True, eq=False)
class AffineForm:
    """``a(v, w; psi) = sum_q psi_q a_q(v, w)`` with its inner-product matrices.

    Matrices follow the convention ``a(u, w) = w^T A u`` (rows index test
    functions, columns trial functions). ``x_norm`` is the SPD Gram matrix of
    the norm the coercivity constant is measured in; ``v_inner`` the optional
    SPD Gram matrix of the time-derivative inner product.
    """

    terms: tuple
    theta: ThetaMap
    x_norm: np.ndarray
    v_inner: np.ndarray = None

    def __post_init__(self):
        terms = tuple(np.asarray(A, dtype=float) for A in self.terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "x_norm", np.asarray(self.x_norm, dtype=float))
        if self.v_inner is not None:
            object.__setattr__(self, "v_inner", np.asarray(self.v_inner, dtype=float))
        n = self.x_norm.shape[0]
        if self.x_norm.shape != (n, n):
            raise ValueError("x_norm must be square")
        for A in terms:
            if A.shape != (n, n):
                raise ValueError(f"term of shape {A.shape} does not match n={n}")
        if self.v_inner is not None and self.v_inner.shape != (n, n):
            raise ValueError("v_inner must be n x n")
        if len(terms) != self.theta.Q:
            raise ValueError(f"{len(terms)} terms but theta has Q={self.theta.Q}")
        # fail early on an invalid norm matrix
        _ = self._chol

    @property
    def n(self):
        return self.x_norm.shape[0]

    @property
    def Q(self):
        return len(self.terms)

    @property
    def p(self):
        return self.theta.p

    @cached_property
    def _chol(self):
        return cholesky(self.x_norm)

    @cached_property
    def _whitened(self):
        # L^{-1} sym(A_q) L^{-T}; alpha_theta reduces to an eigenvalue of sum psi_q S_q
        return np.stack([whiten(A, self._chol) for A in self.terms])

    def digest(self):
        """SHA-256 over theta sources and the raw float64 bytes of all matrices."""
        h = hashlib.sha256()
        h.update(json.dumps({"theta": self.theta.sources, "p": self.p, "n": self.n}).encode())
        for M in (*self.terms, self.x_norm):
            h.update(np.ascontiguousarray(M, dtype="<f8").tobytes())
        if self.v_inner is not None:
            h.update(b"v_inner")
            h.update(np.ascontiguousarray(self.v_inner, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class CoercivityResult:
    alpha: float
    eigvec: np.ndarray
    y_point: np.ndarray


def assemble(form, psi):
    """``A(psi) = sum_q psi_q A_q``."""
    psi = np.asarray(psi, dtype=float).ravel()
    if psi.size != form.Q:
        raise ValueError(f"psi has dimension {psi.size}, expected Q={form.Q}")
    return np.tensordot(psi, np.stack(form.terms), axes=1)


def alpha_theta(form, psi, method="lapack"):
    """Coercivity constant of ``a_Theta(.,.;psi)`` w.r.t. the X-norm.

    The smallest eigenvalue of the pencil ``(sym(A(psi)), M_X)`` over its full
    spectrum. The minimizer ``v`` is X-normalized and
    ``y_point[q] = v^T sym(A_q) v``, so ``alpha == psi @ y_point``.
    """
    psi = np.asarray(psi, dtype=float).ravel()
    if psi.size != form.Q:
        raise ValueError(f"psi has dimension {psi.size}, expected Q={form.Q}")
    S = np.tensordot(psi, form._whitened, axes=1)
    if method == "lapack":
        w, W = spla.eigh(S)
    else:
        w, W = jacobi_eigh(S)
    u = W[:, 0]
    y = np.einsum("i,qij,j->q", u, form._whitened, u)
    v = _fix_sign(spla.solve_triangular(form._chol.T, u, lower=False))
    return CoercivityResult(alpha=float(w[0]), eigvec=v, y_point=y)


def alpha(form, mu, method="lapack"):
    """Coercivity constant at a parameter point: ``alpha_theta(Theta(mu))``."""
    return alpha_theta(form, eval_theta(form.theta, mu), method)


# ---------------------------------------------------------------------------
# operator JSON
#
# {"n": int, "p": int, "theta": [str, ...], "terms": [matrix, ...],
#  "x_norm": matrix, "v_inner": matrix (optional)}
# matrix := list of rows  |  {"coo": [[i, j, value], ...]}


def _matrix_from_json(obj, n):
    if isinstance(obj, dict):
        if set(obj) != {"coo"}:
            raise ValueError("sparse matrices must be given as {'coo': [[i, j, v], ...]}")
        M = np.zeros((n, n))
        for i, j, v in obj["coo"]:
            M[int(i), int(j)] += float(v)
        return M
    M = np.array(obj, dtype=float)
    if M.shape != (n, n):
        raise ValueError(f"dense matrix has shape {M.shape}, expected ({n}, {n})")
    return M


def form_from_dict(d):
    n, p = int(d["n"]), int(d["p"])
    theta = ThetaMap.from_strings(d["theta"], p)
    terms = [_matrix_from_json(t, n) for t in d["terms"]]
    x_norm = _matrix_from_json(d["x_norm"], n)
    v_inner = _matrix_from_json(d["v_inner"], n) if d.get("v_inner") is not None else None
    return AffineForm(tuple(terms), theta, x_norm, v_inner)


def form_to_dict(form, sparse=False):
    def enc(M):
        if not sparse:
            return M.tolist()
        i, j = np.nonzero(M)
        return {"coo": [[int(a), int(b), float(M[a, b])] for a, b in zip(i, j)]}

    d = {
        "n": form.n,
        "p": form.p,
        "theta": form.theta.sources,
        "terms": [enc(A) for A in form.terms],
        "x_norm": enc(form.x_norm),
    }
    if form.v_inner is not None:
        d["v_inner"] = enc(form.v_inner)
    return d


def load_form(path):
    with open(path) as f:
        return form_from_dict(json.load(f))


def save_form(form, path, sparse=False):
    with open(path, "w") as f:
        json.dump(form_to_dict(form, sparse), f)

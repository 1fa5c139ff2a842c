"""Lyapunov stability of ``<y', v>_V = -a(y, v; mu)`` through coercivity constants.

In matrix form the system reads ``M_V y' = -A(mu) y`` with system operator
``T_mu = M_V^{-1} A(mu)``. A fixed SPD ``P`` certifies stability at every
``mu`` where ``phi(mu) = T_mu^T P + P T_mu`` is coercive; since ``T_mu`` is
affine in Theta(mu), so is ``phi``, and all coercivity machinery applies to it.
"""
import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla

from .bounds import hull_min_bound
from .config import DEFAULT_TOLERANCES
from .errors import MissingVInner, NotSymmetric
from .numerics import cholesky, is_symmetric, lyapunov_residual, solve_lyapunov
from .operator import AffineForm, alpha, alpha_theta, assemble
from .theta import eval_theta


def _mv_solve(form, X):
    if form.v_inner is None:
        raise MissingVInner("the operator has no V inner product (v_inner)")
    return spla.cho_solve(spla.cho_factor(form.v_inner), X)


def supremizer(form, mu):
    """``T_mu = M_V^{-1} A(Theta(mu))``, i.e. ``<T_mu w, v>_V = a(w, v; mu)``."""
    return _mv_solve(form, assemble(form, eval_theta(form.theta, mu)))


@dataclass(eq=False)
class LyapunovCertificate:
    anchor: np.ndarray
    P: np.ndarray
    phi: AffineForm
    residual: float                   # relative residual of the defining equation
    rhs: str = "2*x_norm"

    def to_dict(self):
        return {
            "anchor": [float(v) for v in self.anchor],
            "P": self.P.tolist(),
            "residual": self.residual,
            "rhs": self.rhs,
        }

    @classmethod
    def from_dict(cls, d, form):
        P = np.array(d["P"], dtype=float)
        return cls(np.array(d["anchor"], dtype=float), P, phi_form(form, P), d["residual"], d["rhs"])


def phi_form(form, P):
    """Affine form with terms ``T_q^T P + P T_q``, ``T_q = M_V^{-1} A_q``."""
    terms = []
    for A in form.terms:
        Tq = _mv_solve(form, A)
        F = Tq.T @ P + P @ Tq
        terms.append((F + F.T) / 2)
    return AffineForm(tuple(terms), form.theta, form.x_norm, form.v_inner)


def build_p(form, anchor, rhs=None, tol=DEFAULT_TOLERANCES):
    """Solve ``T^T P + P T = C`` at the anchor and build the induced phi form.

    ``C`` defaults to ``2 * M_X`` so that ``phi(anchor) = 2 * M_X`` and the
    coercivity constant of phi at the anchor equals 2.

    Raises
    ------
    SingularLyapunov, NotSPD
        The anchor cannot carry a certificate (system not exponentially
        stable there). This proves nothing about stability.
    """
    anchor = np.asarray(anchor, dtype=float)
    T = supremizer(form, anchor)
    C = 2.0 * form.x_norm if rhs is None else np.asarray(rhs, dtype=float)
    P = solve_lyapunov(T, C, tol)
    P = (P + P.T) / 2
    cholesky(P, tol)
    res = lyapunov_residual(T, P, C) / np.linalg.norm(C)
    return LyapunovCertificate(anchor, P, phi_form(form, P), float(res),
                               "2*x_norm" if rhs is None else "custom")


def phi_alpha(cert, mu):
    """Coercivity constant of ``phi(.,.;mu)`` w.r.t. the X-norm."""
    return alpha(cert.phi, mu).alpha


def symmetric_stability(form, mu, tol=DEFAULT_TOLERANCES):
    """Classify a symmetric operator by the sign of its coercivity constant.

    Returns ``"asymptotically_stable"`` for ``alpha > marginal``, ``"stable"``
    for ``|alpha| <= marginal`` and ``"unstable"`` otherwise.
    """
    A = assemble(form, eval_theta(form.theta, mu))
    if not is_symmetric(A, tol.symmetry):
        raise NotSymmetric("operator is not symmetric at this parameter; use a Lyapunov certificate")
    a = alpha(form, mu).alpha
    if a > tol.marginal:
        return "asymptotically_stable"
    if a >= -tol.marginal:
        return "stable"
    return "unstable"


def _grid(D, resolution):
    axes = []
    for d in range(D.p):
        if D.upper[d] > D.lower[d]:
            axes.append(np.linspace(D.lower[d], D.upper[d], resolution))
        else:
            axes.append(np.array([D.lower[d]]))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class CoverageReport:
    names: list                        # ["alpha", "alpha_phi1", ...]
    rows: list                         # [{"mu", "values", "covered"}]
    hulls: list = field(default_factory=list)
    symmetric_verdicts: list = None
    notes: list = field(default_factory=list)

    @property
    def uncovered(self):
        return [r["mu"] for r in self.rows if not r["covered"]]

    @property
    def fully_covered(self):
        return not self.uncovered

    def to_dict(self):
        return {
            "names": self.names,
            "rows": self.rows,
            "hulls": self.hulls,
            "symmetric_verdicts": self.symmetric_verdicts,
            "notes": self.notes,
            "uncovered": self.uncovered,
        }

    def write_csv(self, path):
        p = len(self.rows[0]["mu"]) if self.rows else 0
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow([f"mu{i + 1}" for i in range(p)] + self.names + ["covered"])
            for r in self.rows:
                w.writerow([f"{v:.12g}" for v in r["mu"]] + [f"{v:.12g}" for v in r["values"]]
                           + [int(r["covered"])])


def coverage_report(form, certs, D, resolution=61, hull_sets=()):
    """Pointwise Lyapunov coverage on a grid over ``D`` plus optional hull proofs.

    A grid point is covered when the coercivity constant of ``a`` or of any
    certificate's phi is strictly positive there; grid coverage is sampled
    evidence only. For each vertex set in ``hull_sets`` and each form, the
    minimum over the Theta-images of the vertices bounds that form's
    coercivity constant on their convex hull; a positive minimum is a proof.
    """
    names = ["alpha"] + [f"alpha_phi{i + 1}" for i in range(len(certs))]
    forms = [form] + [c.phi for c in certs]
    rows = []
    for mu in _grid(D, resolution):
        vals = [alpha(f, mu).alpha for f in forms]
        rows.append({"mu": [float(v) for v in mu], "values": [float(v) for v in vals],
                     "covered": any(v > 0.0 for v in vals)})
    sym = None
    if not certs and all(is_symmetric(A) for A in form.terms):
        sym = [symmetric_stability(form, r["mu"]) for r in rows]
    hulls = []
    for verts in hull_sets:
        verts = [np.asarray(v, dtype=float) for v in verts]
        for name, f in zip(names, forms):
            vals = [alpha_theta(f, eval_theta(form.theta, v)).alpha for v in verts]
            lb = hull_min_bound(vals)
            hulls.append({"form": name, "vertices": [v.tolist() for v in verts],
                          "values": vals, "lower_bound": lb, "proven": lb > 0.0})
    notes = ["grid coverage is sampled; hull entries with proven=true are certificates"]
    if not certs:
        notes.append("no Lyapunov certificates supplied")
    notes.append("a failed anchor proves nothing about stability at that anchor")
    return CoverageReport(names, rows, hulls, sym, notes)

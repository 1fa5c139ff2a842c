"""1D diffusion-convection-reaction demo operator.

``A(mu) = -u'' + mu1 (x - 0.5) u' + mu2 u`` on (0, 1), homogeneous Dirichlet
at x=0 and homogeneous Neumann at x=1, discretized with equidistant P1
elements. With ``n`` elements node 0 is eliminated, leaving ``n`` unknowns.
The X-norm is the stiffness matrix, i.e. ``||v||_X^2 = a(v, v; [0, 0])``,
and the V inner product is the mass matrix.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .operator import AffineForm, alpha
from .theta import ThetaMap

_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)

PARAMETER_DOMAIN = ((0.0, 30.0), (-0.4, 2.0))


@dataclass(frozen=True)
class FemConfig:
    n: int = 180  # unknowns after eliminating the Dirichlet node (= elements)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")


def fem_matrices(n):
    """Stiffness, convection and mass matrices on the ``n`` free nodes."""
    h = 1.0 / n
    N = n + 1
    K = np.zeros((N, N))
    C = np.zeros((N, N))
    M = np.zeros((N, N))
    Ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    Me = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    dphi = np.array([-1.0, 1.0]) / h
    for k in range(n):
        # two-point Gauss is exact for the quadratic integrand (x - 0.5) phi_i phi_j'
        Ce = np.zeros((2, 2))
        for g in _GAUSS:
            xi = (g + 1.0) / 2.0
            x = (k + xi) * h
            phi = np.array([1.0 - xi, xi])
            Ce += (h / 2.0) * (x - 0.5) * np.outer(phi, dphi)  # row: test, col: trial
        idx = np.ix_([k, k + 1], [k, k + 1])
        K[idx] += Ke
        M[idx] += Me
        C[idx] += Ce
    return K[1:, 1:], C[1:, 1:], M[1:, 1:]


def assemble_fem(cfg=None):
    """Affine form with terms (stiffness, convection, mass) and theta ``[1, mu1, mu2]``."""
    cfg = FemConfig() if cfg is None else cfg
    K, C, M = fem_matrices(cfg.n)
    theta = ThetaMap.from_strings(["1", "mu1", "mu2"], 2)
    return AffineForm((K, C, M), theta, x_norm=K, v_inner=M)


def scenario_curve(form, mu2, mu1_grid, certs=()):
    """Rows ``(mu1, alpha, alpha_phi1, ...)`` along the line ``mu = (mu1, mu2)``."""
    from .lyapunov import phi_alpha

    rows = []
    for m1 in mu1_grid:
        mu = np.array([float(m1), float(mu2)])
        row = [float(m1), alpha(form, mu).alpha]
        row.extend(phi_alpha(c, mu) for c in certs)
        rows.append(row)
    return rows


def write_scenario_csv(rows, path, n_certs=None):
    n_certs = len(rows[0]) - 2 if n_certs is None else n_certs
    header = ["mu1", "alpha"] + [f"alpha_phi{i + 1}" for i in range(n_certs)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.12g}" for v in r])

"""Centralized numerical tolerances.

Every threshold used by the kernels and the certification loops lives in
:class:`Tolerances`. Functions take an optional ``tol`` argument and fall back
to :data:`DEFAULT_TOLERANCES`.
"""
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Tolerances:
    # numerics
    symmetry: float = 1e-12          # relative, ||A - A^T|| <= symmetry * ||A||
    cholesky_residual: float = 1e-10
    eig_residual: float = 1e-8
    lyapunov_residual: float = 1e-8
    lyapunov_maxiter: int = 100
    lyapunov_sign_tol: float = 1e-13
    lyapunov_kron_max_n: int = 80
    lp_pivot: float = 1e-11
    lp_feasibility: float = 1e-9
    # bounds
    rank: float = 1e-10              # relative singular-value cutoff for simplex rank
    affine_hull: float = 1e-9        # reconstruction residual, relative to scale
    inside: float = 1e-12            # barycentric coefficients >= -inside count as inside
    bary_sum: float = 1e-12
    ybank_cap: int = 512
    # stability classification
    marginal: float = 1e-10

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


DEFAULT_TOLERANCES = Tolerances()

"""Rigorous bounds on coercivity constants of affinely parameter-dependent operators."""

__version__ = "0.1.0"

from .config import Tolerances, DEFAULT_TOLERANCES
from .errors import (
    StabCertError,
    NotSPD,
    SingularLyapunov,
    Infeasible,
    ExpressionSyntaxError,
    UnknownParameter,
    NonFinite,
    NotInAffineHull,
    DegenerateSimplex,
    OutsideSimplex,
    InsideSimplex,
    UnsupportedTheta,
    BudgetExhausted,
    OutsideCover,
    MissingVInner,
    NotSymmetric,
)
from .theta import ThetaMap, parse
from .operator import AffineForm, CoercivityResult, alpha, alpha_theta, assemble
from .fem import FemConfig, assemble_fem

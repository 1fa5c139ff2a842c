"""Successive constraints method (SCM) bounds on alpha_Theta.

The lower bound relaxes ``alpha_Theta(psi) = inf { psi @ y : y in Y }`` to a
linear program over a box containing ``Y`` cut by the constraints
``eta @ y >= alpha_Theta(eta)`` for every evaluated point ``eta``. The upper
bound restricts the infimum to the finitely many harvested y points.
"""
from dataclasses import dataclass, field

import numpy as np

from .bounds import YBank, ypoint_upper_bound
from .config import DEFAULT_TOLERANCES
from .numerics import solve_lp
from .operator import alpha_theta


def build_box(form, pad=1e-12):
    """Per-coordinate bounds ``[sigma_q^-, sigma_q^+]`` of the y-set.

    ``sigma_q^-`` and ``sigma_q^+`` are the extreme eigenvalues of the pencil
    ``(sym(A_q), M_X)``; they are widened by ``pad`` (relative) so banked
    y points computed in floating point stay inside.
    """
    lo = np.empty(form.Q)
    hi = np.empty(form.Q)
    for q, S in enumerate(form._whitened):
        w = np.linalg.eigvalsh(S)
        lo[q], hi[q] = w[0], w[-1]
    width = pad * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    return lo - width, hi + width


@dataclass
class ScmState:
    lower: np.ndarray
    upper: np.ndarray
    constraints: list = field(default_factory=list)   # [(eta, alpha)]
    y_bank: YBank = field(default_factory=YBank)

    @classmethod
    def for_form(cls, form, cap=DEFAULT_TOLERANCES.ybank_cap):
        lo, hi = build_box(form)
        return cls(lo, hi, [], YBank(cap))

    def add(self, psi, result):
        self.constraints.append((np.asarray(psi, dtype=float).copy(), float(result.alpha)))
        self.y_bank.add(result.y_point)

    def add_point(self, form, psi):
        res = alpha_theta(form, psi)
        self.add(psi, res)
        return res

    def to_dict(self):
        return {
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "constraints": [[eta.tolist(), a] for eta, a in self.constraints],
            "y_bank": self.y_bank.array.tolist(),
            "y_bank_cap": self.y_bank.cap,
        }

    @classmethod
    def from_dict(cls, d):
        bank = YBank(d["y_bank_cap"])
        bank._Y = [np.array(y, dtype=float) for y in d["y_bank"]]
        return cls(
            np.array(d["lower"], dtype=float),
            np.array(d["upper"], dtype=float),
            [(np.array(e, dtype=float), float(a)) for e, a in d["constraints"]],
            bank,
        )


def scm_lower_bound(state, psi):
    value, _ = solve_lp(psi, state.lower, state.upper, state.constraints)
    return value


def scm_upper_bound(state, psi):
    return ypoint_upper_bound(psi, state.y_bank)


@dataclass
class EnrichmentReport:
    max_gaps: list            # max gap over the train set before each step (and at exit)
    evaluated: list           # train indices evaluated, in order
    converged: bool


def greedy_enrich(state, form, train, tol, max_evals):
    """Evaluate at the worst-gap train point until ``max gap <= tol`` or budget is spent.

    Ties go to the lowest train index. The state is modified in place and
    also returned with the report.
    """
    train = [np.asarray(t, dtype=float) for t in train]
    if not train:
        raise ValueError("train set is empty")
    history, evaluated = [], []
    while True:
        lb = np.array([scm_lower_bound(state, t) for t in train])
        ub = (
            np.array([scm_upper_bound(state, t) for t in train])
            if len(state.y_bank)
            else np.full(len(train), np.inf)
        )
        gaps = ub - lb
        worst = int(np.argmax(gaps))
        history.append(float(gaps[worst]))
        if gaps[worst] <= tol:
            return state, EnrichmentReport(history, evaluated, True)
        if len(evaluated) >= max_evals:
            return state, EnrichmentReport(history, evaluated, False)
        state.add_point(form, train[worst])
        evaluated.append(worst)

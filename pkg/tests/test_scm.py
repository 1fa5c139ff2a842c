import numpy as np
import pytest
from numpy.testing import assert_allclose

from stabcert.operator import AffineForm, alpha, alpha_theta
from stabcert.scm import (
    ScmState,
    build_box,
    greedy_enrich,
    scm_lower_bound,
    scm_upper_bound,
)
from stabcert.theta import ThetaMap


def test_box_identity_and_diag():
    f = AffineForm((np.eye(2), np.diag([1.0, -1.0])), ThetaMap.from_strings(["1", "mu1"], 1), np.eye(2))
    lo, hi = build_box(f)
    assert_allclose(lo, [1, -1], atol=1e-11)
    assert_allclose(hi, [1, 1], atol=1e-11)
    assert np.all(lo <= [1, -1]) and np.all(hi >= [1, 1])


def test_box_fem(fem):
    lo, hi = build_box(fem)
    assert lo[0] <= 1 <= hi[0]
    # by the ray identity the root along mu2 = 0 is exactly -1 / sigma_2^-
    assert lo[1] == pytest.approx(-1 / 12.0908, abs=1e-5)
    assert alpha(fem, [-1 / lo[1], 0]).alpha == pytest.approx(0.0, abs=1e-9)


def test_empty_constraints_is_separable_box(fem, rng):
    state = ScmState.for_form(fem)
    for psi in rng.normal(size=(5, 3)):
        expected = np.sum(np.minimum(psi * state.lower, psi * state.upper))
        assert scm_lower_bound(state, psi) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_constraint_point_is_tight(fem):
    state = ScmState.for_form(fem)
    psi = np.array([1.0, 7.0, 1.5])
    state.add_point(fem, psi)
    assert scm_lower_bound(state, psi) == pytest.approx(alpha_theta(fem, psi).alpha, abs=1e-9)
    assert scm_upper_bound(state, psi) == pytest.approx(alpha_theta(fem, psi).alpha, abs=1e-12)


def test_segment_bound(fem):
    state = ScmState.for_form(fem)
    for psi in ([1.0, 0, 0], [1.0, 12, 0]):
        state.add_point(fem, psi)
    psi = [1.0, 6, 0]
    a = alpha_theta(fem, psi).alpha
    lb = scm_lower_bound(state, psi)
    assert lb <= a + 1e-12
    assert a - lb <= 0.05


def test_upper_bound_random(fem, rng):
    state = ScmState.for_form(fem)
    for mu in rng.uniform([0, 0], [30, 2], size=(5, 2)):
        state.add_point(fem, [1, *mu])
    for psi in rng.normal(size=(20, 3)):
        a = alpha_theta(fem, psi).alpha
        assert scm_upper_bound(state, psi) >= a - 1e-9
        assert scm_lower_bound(state, psi) <= a + 1e-9


def test_enrich_infinite_tol_does_nothing(fem):
    state = ScmState.for_form(fem)
    _, rep = greedy_enrich(state, fem, [[1, 1, 1]], np.inf, 10)
    assert rep.evaluated == [] and rep.converged
    assert state.constraints == []


def test_enrich_on_known_points(fem):
    train = [np.array([1.0, m, 0.0]) for m in (0, 10, 20)]
    state = ScmState.for_form(fem)
    for t in train:
        state.add_point(fem, t)
    _, rep = greedy_enrich(state, fem, train, 1e-9, 5)
    assert rep.evaluated == []
    assert rep.max_gaps[0] <= 1e-9


def test_enrich_segment_converges_fast(fem):
    train = [np.array([1.0, m, 0.0]) for m in np.linspace(0, 30, 50)]
    state = ScmState.for_form(fem)
    _, rep = greedy_enrich(state, fem, train, 1e-3, 10)
    assert rep.converged
    assert len(rep.evaluated) <= 10
    assert all(b <= a + 1e-12 for a, b in zip(rep.max_gaps, rep.max_gaps[1:]))


def test_state_round_trip(fem):
    state = ScmState.for_form(fem)
    for mu in ([1.0, 0, 0], [1.0, 20, 2]):
        state.add_point(fem, mu)
    back = ScmState.from_dict(state.to_dict())
    psi = [1.0, 11, 1]
    assert scm_lower_bound(back, psi) == scm_lower_bound(state, psi)
    assert scm_upper_bound(back, psi) == scm_upper_bound(state, psi)

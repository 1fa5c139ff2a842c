import numpy as np
import pytest
from numpy.testing import assert_allclose

from stabcert.certify import ParameterBox
from stabcert.errors import MissingVInner, NotSPD, NotSymmetric, SingularLyapunov
from stabcert.lyapunov import (
    LyapunovCertificate,
    build_p,
    coverage_report,
    phi_alpha,
    supremizer,
    symmetric_stability,
)
from stabcert.operator import AffineForm, alpha, assemble
from stabcert.theta import ThetaMap


def spd(rng, n):
    G = rng.normal(size=(n, n))
    return G @ G.T + n * np.eye(n)


def const_form(A, X, V=None):
    return AffineForm((A,), ThetaMap.from_strings(["1"], 1), X, V)


def test_supremizer_identity_inner(rng):
    A = rng.normal(size=(5, 5))
    f = const_form(A, np.eye(5), np.eye(5))
    assert_allclose(supremizer(f, [0.0]), A)


def test_supremizer_of_inner_product_is_identity(rng):
    M = spd(rng, 5)
    f = const_form(M, np.eye(5), M)
    assert_allclose(supremizer(f, [0.0]), np.eye(5), atol=1e-12)


def test_missing_v_inner():
    with pytest.raises(MissingVInner):
        supremizer(const_form(np.eye(2), np.eye(2)), [0.0])


def test_symmetric_case_p_equals_v_inner(rng):
    """With M_V = M_X = A(anchor) symmetric, P = M_X and phi = a + a^T."""
    n = 6
    A0, A1 = spd(rng, n), rng.normal(size=(n, n))
    A1 = A1 + A1.T
    theta = ThetaMap.from_strings(["1", "mu1"], 1)
    f = AffineForm((A0, A1), theta, A0, A0)
    cert = build_p(f, [0.0])
    assert_allclose(cert.P, A0, rtol=1e-10)
    for mu in ([0.3], [-0.2], [1.0]):
        assert phi_alpha(cert, mu) == pytest.approx(2 * alpha(f, mu).alpha, abs=1e-9)


def test_anchor_value_is_two(fem):
    cert = build_p(fem, [20.0, 0.0])
    assert phi_alpha(cert, [20.0, 0.0]) == pytest.approx(2.0, abs=1e-8)
    assert cert.residual <= 1e-8
    np.linalg.cholesky(cert.P)


def test_certificates_positive_near_anchors(fem):
    c1 = build_p(fem, [20.0, 0.0])
    c2 = build_p(fem, [28.25, 0.0])
    for m in ([18, 0], [22, 0], [20, 0.3]):
        assert phi_alpha(c1, m) > 0
    assert phi_alpha(c2, [28.25, 0.0]) == pytest.approx(2.0, abs=1e-8)
    # at mu1 = 25 the second certificate carries the proof
    assert phi_alpha(c1, [25, 0]) < 0 < phi_alpha(c2, [25, 0])
    # a itself is not coercive at the anchors
    assert alpha(fem, [20, 0]).alpha < 0


def test_phi_piecewise_affine_on_reaction_free_line(fem):
    """Each phi reproduces 2 * M_X at its anchor, so it is affine on both sides of it."""
    c1 = build_p(fem, [20.0, 0.0])
    left = [phi_alpha(c1, [m, 0]) for m in (0, 5, 10, 15, 20)]
    right = [phi_alpha(c1, [m, 0]) for m in (20, 23, 26, 29)]
    assert np.ptp(np.diff(left)) < 1e-8
    assert np.ptp(np.diff(right)) < 1e-8


def test_unstable_anchor_fails(rng):
    n = 4
    f = const_form(-np.eye(n), np.eye(n), np.eye(n))
    with pytest.raises((SingularLyapunov, NotSPD)):
        build_p(f, [0.0])


def test_certificate_round_trip(fem_small):
    cert = build_p(fem_small, [20.0, 0.0])
    back = LyapunovCertificate.from_dict(cert.to_dict(), fem_small)
    assert np.array_equal(back.P, cert.P)
    assert phi_alpha(back, [21, 1]) == phi_alpha(cert, [21, 1])


@pytest.mark.parametrize("scale, expected", [
    (1.0, "asymptotically_stable"),
    (0.0, "stable"),
    (-1.0, "unstable"),
])
def test_symmetric_stability(scale, expected):
    f = const_form(scale * np.eye(3), np.eye(3))
    assert symmetric_stability(f, [0.0]) == expected


def test_symmetric_stability_rejects_convection(fem):
    with pytest.raises(NotSymmetric):
        symmetric_stability(fem, [5.0, 0.0])
    assert symmetric_stability(fem, [0.0, 1.0]) == "asymptotically_stable"


@pytest.fixture(scope="module")
def fem_certs(fem):
    return [build_p(fem, [20.0, 0.0]), build_p(fem, [28.25, 0.0])]


@pytest.mark.parametrize("mu2", [0.0, 2.0])
def test_scenarios_fully_covered(fem, fem_certs, mu2):
    rep = coverage_report(fem, fem_certs, ParameterBox([0, mu2], [30, mu2]), 61)
    assert len(rep.rows) == 61
    assert rep.fully_covered


def test_negative_reaction_not_covered(fem, fem_certs, tmp_path):
    rep = coverage_report(fem, fem_certs, ParameterBox([0, -0.4], [30, -0.4]), 61)
    assert not rep.fully_covered
    path = tmp_path / "cov.csv"
    rep.write_csv(path)
    lines = open(path).read().splitlines()
    assert lines[0] == "mu1,mu2,alpha,alpha_phi1,alpha_phi2,covered"
    assert len(lines) == 62


def test_hull_proofs(fem):
    rep = coverage_report(fem, [], ParameterBox([0, 0], [30, 2]), 3,
                          hull_sets=[[[0, 0], [0, 2], [12, 0], [17, 2]]])
    (h,) = rep.hulls
    assert h["proven"] and h["lower_bound"] > 0
    assert rep.symmetric_verdicts is None


def test_symmetric_operator_verdicts(rng):
    n = 5
    X = spd(rng, n)
    theta = ThetaMap.from_strings(["1", "mu1"], 1)
    f = AffineForm((X, -X), theta, X)
    rep = coverage_report(f, [], ParameterBox([0], [2]), 5)
    assert rep.symmetric_verdicts == [
        "asymptotically_stable", "asymptotically_stable", "stable", "unstable", "unstable"
    ]

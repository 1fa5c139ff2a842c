import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from stabcert.bounds import (
    NotInExtrapolationCone,
    Simplex,
    YBank,
    barycentric,
    bisect,
    extrapolate_upper_bound,
    hull_min_bound,
    interp_lower_bound,
    longest_edge,
    ypoint_upper_bound,
)
from stabcert.errors import DegenerateSimplex, InsideSimplex, NotInAffineHull, OutsideSimplex
from stabcert.operator import alpha_theta

CURVE_SIMPLEX = np.array([[1.0, 0, 0], [1, 1, 0], [1, 1, 1]])


def test_barycentric_vertex_and_centroid():
    s = Simplex(CURVE_SIMPLEX, [0, 0, 0])
    for k in range(3):
        assert_allclose(barycentric(s, CURVE_SIMPLEX[k]).coefficients, np.eye(3)[k], atol=1e-15)
    assert_allclose(barycentric(s, CURVE_SIMPLEX.mean(0)).coefficients, [1 / 3] * 3)


@pytest.mark.parametrize("mu", [0.0, 0.2, 0.5, 0.9, 1.0])
def test_barycentric_on_parabola(mu):
    s = Simplex(CURVE_SIMPLEX, [0, 0, 0])
    c = barycentric(s, [1, mu, mu * mu]).coefficients
    assert_allclose(c, [1 - mu, mu - mu * mu, mu * mu], atol=1e-15)


def test_not_in_affine_hull():
    s = Simplex([[1.0, 0, 0], [1, 1, 0]], [0, 0])
    with pytest.raises(NotInAffineHull):
        barycentric(s, [1, 0.5, 0.1])


def test_degenerate_simplex():
    with pytest.raises(DegenerateSimplex):
        Simplex([[0.0, 0], [1, 1], [2, 2]], [0, 0, 0])
    with pytest.raises(DegenerateSimplex):
        Simplex([[0.0, 0], [1, 0], [0, 1], [1, 1]], [0, 0, 0, 0])


def test_interp_vertex_exact():
    s = Simplex(CURVE_SIMPLEX, [0.3, -0.2, 0.7])
    assert interp_lower_bound(s, CURVE_SIMPLEX[1]) == pytest.approx(-0.2)


def test_interp_outside_raises():
    s = Simplex(CURVE_SIMPLEX, [0, 0, 0])
    with pytest.raises(OutsideSimplex):
        interp_lower_bound(s, [1, 2, 0])


def test_interp_toy_diagonal():
    from stabcert.operator import AffineForm
    from stabcert.theta import ThetaMap

    f = AffineForm((np.eye(2), np.diag([1.0, -1.0])), ThetaMap.from_strings(["1", "mu1"], 1), np.eye(2))
    s = Simplex([[1.0, 0], [1, 1]], [alpha_theta(f, [1, 0]).alpha, alpha_theta(f, [1, 1]).alpha])
    lb = interp_lower_bound(s, [1, 0.5])
    assert lb == pytest.approx(0.5)
    assert alpha_theta(f, [1, 0.5]).alpha == pytest.approx(0.5)


def test_interp_fem_midpoint(fem):
    V = np.array([[1.0, 3.0, 0.5], [1.0, 9.0, 1.5]])
    vals = [alpha_theta(fem, v).alpha for v in V]
    s = Simplex(V, vals)
    mid = V.mean(0)
    lb = interp_lower_bound(s, mid)
    assert lb == pytest.approx(np.mean(vals))
    assert lb <= alpha_theta(fem, mid).alpha + 1e-12


def test_hull_min():
    assert hull_min_bound([1.0]) == 1.0
    assert hull_min_bound([0.3, -0.1, 0.5]) == -0.1
    with pytest.raises(ValueError):
        hull_min_bound([])


def test_hull_certificate_fem(fem):
    pts = [[0, 0], [0, 2], [12, 0], [17, 2]]
    vals = [alpha_theta(fem, [1, *p]).alpha for p in pts]
    assert hull_min_bound(vals) > 0


def test_extrapolate_chord_extension():
    # f(x) = min(x, 1) sampled at 0 and 1; chord extension gives 2 >= f(2)
    s = Simplex([[0.0], [1.0]], [0.0, 1.0])
    assert extrapolate_upper_bound(s, [2.0]) == pytest.approx(2.0)
    assert extrapolate_upper_bound(s, [-1.0]) == pytest.approx(-1.0)


def test_extrapolate_facet_continuity():
    s = Simplex([[0.0, 0], [1, 0], [0, 1]], [0.1, 0.4, 0.3])
    # a vertex: the stored value
    assert extrapolate_upper_bound(s, [1.0, 0.0]) == pytest.approx(0.4)
    # an outside point in a vertex cone, approaching the vertex
    assert extrapolate_upper_bound(s, [1.0 + 1e-9, -1e-9]) == pytest.approx(0.4, abs=1e-8)


def test_extrapolate_rejects_inside_and_edge_cone():
    s = Simplex([[0.0, 0], [1, 0], [0, 1]], [0, 0, 0])
    with pytest.raises(InsideSimplex):
        extrapolate_upper_bound(s, [0.2, 0.2])
    with pytest.raises(NotInExtrapolationCone):
        extrapolate_upper_bound(s, [0.7, 0.7])


def test_extrapolate_fem_ray(fem):
    V = np.array([[1.0, 0, 0], [1.0, 5, 0]])
    s = Simplex(V, [alpha_theta(fem, v).alpha for v in V])
    ub = extrapolate_upper_bound(s, [1, 20, 0])
    assert ub == pytest.approx(alpha_theta(fem, [1, 20, 0]).alpha, abs=1e-9)


def _concave(seed, Q):
    r = np.random.default_rng(seed)
    G, h = r.normal(size=(6, Q)), r.normal(size=6)
    return lambda x: float(np.min(G @ x + h))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**31), Q=st.integers(1, 4), t=st.floats(1.01, 5.0))
def test_concave_sandwich(seed, Q, t):
    f = _concave(seed, Q)
    r = np.random.default_rng(seed + 1)
    V = r.normal(size=(Q + 1, Q))
    s = Simplex(V, [f(v) for v in V])
    c = r.dirichlet(np.ones(Q + 1))
    psi = c @ V
    assert interp_lower_bound(s, psi) <= f(psi) + 1e-12
    # push through one vertex: exactly one positive coefficient beyond it
    k = int(r.integers(Q + 1))
    other = np.delete(V, k, axis=0).mean(0)
    out = other + t * (V[k] - other)
    assert extrapolate_upper_bound(s, out) >= f(out) - 1e-10


def test_ypoint_bounds(fem, rng):
    psi0 = np.array([1.0, 4.0, 1.0])
    r0 = alpha_theta(fem, psi0)
    assert ypoint_upper_bound(psi0, [r0.y_point]) == pytest.approx(r0.alpha, abs=1e-12)
    for psi in rng.normal(size=(20, 3)):
        assert ypoint_upper_bound(psi, [r0.y_point]) >= alpha_theta(fem, psi).alpha - 1e-12
        assert ypoint_upper_bound(psi, [r0.y_point]) == pytest.approx(psi @ r0.y_point)


def test_ypoint_affine_segment_tight(fem):
    bank = YBank()
    for psi in ([1.0, 0, 0], [1.0, 12, 0]):
        bank.add(alpha_theta(fem, psi).y_point)
    ub = bank.upper_bound([1, 6, 0])
    assert ub == pytest.approx(alpha_theta(fem, [1, 6, 0]).alpha, abs=1e-6)


def test_ybank_dedupe_and_cap(rng):
    bank = YBank(cap=5)
    y = rng.normal(size=3)
    bank.add(y)
    bank.add(y.copy())
    assert len(bank) == 1
    for z in rng.normal(size=(20, 3)):
        bank.add(z)
    assert len(bank) == 5


def test_longest_edge_and_bisect():
    V = np.array([[0.0, 0], [4, 0], [0, 1]])
    assert longest_edge(V) == (1, 2)
    s = Simplex(V, [0, 1, 2])
    a, b = bisect(s, mid_value=1.5)
    mid = np.array([2.0, 0.5])
    assert any(np.allclose(v, mid) for v in a.vertices)
    assert any(np.allclose(v, mid) for v in b.vertices)
    area = lambda t: abs(np.linalg.det(t.vertices[1:] - t.vertices[0])) / 2
    assert area(a) + area(b) == pytest.approx(area(s))

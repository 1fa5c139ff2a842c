"""Bounds on a concave function of psi from values at finitely many points.

Every bound here uses only concavity of ``alpha_Theta``:

* on a simplex, the affine interpolant of vertex values is a lower bound;
* over a convex hull, the minimum vertex value is a lower bound;
* outside a simplex, in a cone where a single barycentric coefficient is
  positive, the affine extension is an upper bound;
* every harvested ``y`` point gives the upper bound ``psi @ y``.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import (
    DegenerateSimplex,
    InsideSimplex,
    NotInAffineHull,
    OutsideSimplex,
    StabCertError,
)


class NotInExtrapolationCone(StabCertError):
    """More than one positive barycentric coefficient: no upper bound there."""


@dataclass(frozen=True, eq=False)
class Simplex:
    vertices: np.ndarray              # (m, Q)
    values: np.ndarray                # (m,)
    y_points: np.ndarray = None       # (m, Q) or None
    rank_tol: float = DEFAULT_TOLERANCES.rank

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        vals = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "values", vals)
        if self.y_points is not None:
            object.__setattr__(self, "y_points", np.atleast_2d(np.asarray(self.y_points, dtype=float)))
        m, Q = V.shape
        if not 1 <= m <= Q + 1:
            raise DegenerateSimplex(f"{m} vertices in R^{Q}")
        if vals.shape != (m,):
            raise ValueError("one value per vertex required")
        if m > 1:
            s = np.linalg.svd(V[1:] - V[0], compute_uv=False)
            if s[0] == 0.0 or s[-1] < self.rank_tol * s[0]:
                raise DegenerateSimplex("vertex differences are rank deficient")

    @property
    def m(self):
        return self.vertices.shape[0]

    @cached_property
    def _pinv(self):
        D = (self.vertices[1:] - self.vertices[0]).T
        return np.linalg.pinv(D) if self.m > 1 else np.zeros((0, self.vertices.shape[1]))

    def centroid(self):
        return self.vertices.mean(axis=0)


@dataclass(frozen=True)
class Barycentric:
    coefficients: np.ndarray

    def inside(self, tol=DEFAULT_TOLERANCES.inside):
        return bool(np.all(self.coefficients >= -tol))


def barycentric(s, psi, tol=DEFAULT_TOLERANCES):
    """Affine coordinates of ``psi`` w.r.t. the simplex vertices.

    Raises
    ------
    NotInAffineHull
        If ``psi`` cannot be reconstructed from the vertices to relative
        accuracy ``tol.affine_hull``.
    """
    psi = np.asarray(psi, dtype=float).ravel()
    V = s.vertices
    if psi.size != V.shape[1]:
        raise ValueError("dimension mismatch")
    rest = s._pinv @ (psi - V[0])
    c = np.concatenate([[1.0 - rest.sum()], rest])
    recon = c @ V
    scale = max(1.0, np.max(np.abs(V)), np.max(np.abs(psi)))
    if np.linalg.norm(recon - psi) > tol.affine_hull * scale:
        raise NotInAffineHull("point is not in the affine hull of the simplex")
    return Barycentric(c)


def interp_lower_bound(s, psi, tol=DEFAULT_TOLERANCES):
    """``sum_i c_i(psi) * values_i`` for ``psi`` inside the simplex."""
    b = barycentric(s, psi, tol)
    if not b.inside(tol.inside):
        raise OutsideSimplex("point lies outside the simplex")
    return float(b.coefficients @ s.values)


def hull_min_bound(values):
    """Lower bound valid on the whole convex hull of the evaluated points."""
    values = list(values)
    if not values:
        raise ValueError("hull_min_bound needs at least one value")
    return float(min(values))


def extrapolate_upper_bound(s, psi, tol=DEFAULT_TOLERANCES):
    """Affine extension of the vertex values, an upper bound outside the simplex.

    Valid where exactly one barycentric coefficient is positive: that vertex
    is then a convex combination of ``psi`` and the other vertices, and
    concavity at the vertex bounds the value at ``psi`` from above. A vertex
    itself (one coefficient 1, others 0) is the boundary case and returns the
    stored value.

    Raises
    ------
    InsideSimplex
        For points in the simplex other than vertices (use
        :func:`interp_lower_bound`).
    NotInExtrapolationCone
        For outside points with two or more positive coefficients.
    """
    c = barycentric(s, psi, tol).coefficients
    n_pos = int(np.sum(c > tol.inside))
    if n_pos > 1:
        if np.all(c >= -tol.inside):
            raise InsideSimplex("point lies inside the simplex")
        raise NotInExtrapolationCone("no concavity upper bound at this point")
    return float(c @ s.values)


def ypoint_upper_bound(psi, bank):
    """``min_y psi @ y`` over banked y points (each lies in the y-set of the form)."""
    Y = bank.array if isinstance(bank, YBank) else np.atleast_2d(np.asarray(bank, dtype=float))
    if Y.size == 0:
        raise ValueError("empty y-point bank")
    return float(np.min(Y @ np.asarray(psi, dtype=float)))


@dataclass
class YBank:
    """Bounded store of y points.

    When full, the point closest to its nearest neighbour is evicted, which
    keeps the retained set spread out (furthest-point retention). Any subset
    of y points still yields valid upper bounds.
    """

    cap: int = DEFAULT_TOLERANCES.ybank_cap
    _Y: list = field(default_factory=list)

    def __len__(self):
        return len(self._Y)

    @property
    def array(self):
        return np.array(self._Y) if self._Y else np.zeros((0, 0))

    def add(self, y):
        y = np.asarray(y, dtype=float).ravel()
        for z in self._Y:
            if np.array_equal(z, y):
                return
        self._Y.append(y)
        if len(self._Y) > self.cap:
            Y = np.array(self._Y)
            d = np.linalg.norm(Y[:, None, :] - Y[None, :, :], axis=-1)
            np.fill_diagonal(d, np.inf)
            self._Y.pop(int(np.argmin(d.min(axis=1))))

    def upper_bound(self, psi):
        return ypoint_upper_bound(psi, self)


def longest_edge(vertices):
    """Indices ``(i, j)``, ``i < j``, of the longest edge (first in lexicographic order on ties)."""
    m = len(vertices)
    best, best_len = (0, 1), -1.0
    for i in range(m):
        for j in range(i + 1, m):
            L = float(np.linalg.norm(vertices[i] - vertices[j]))
            if L > best_len:
                best, best_len = (i, j), L
    return best


def bisect(s, mid_value, mid_y=None, edge=None):
    """Split ``s`` at the midpoint of ``edge`` (default: longest) into two simplexes.

    ``mid_value`` must be a valid lower bound of the function at the midpoint
    (typically its exact value).
    """
    i, j = longest_edge(s.vertices) if edge is None else edge
    mid = (s.vertices[i] + s.vertices[j]) / 2
    children = []
    for drop in (i, j):
        V = s.vertices.copy()
        vals = s.values.copy()
        V[drop] = mid
        vals[drop] = mid_value
        Y = None
        if s.y_points is not None and mid_y is not None:
            Y = s.y_points.copy()
            Y[drop] = mid_y
        children.append(Simplex(V, vals, Y, s.rank_tol))
    return tuple(children)

"""Domain-wide procedures: boundary stability certification and adaptive bound meshes.

Both work in coefficient space (psi = Theta(mu)), where the coercivity
constant is concave. A stability proof only needs the boundary of Theta(D);
a bound mesh covers all of Theta(D) with interior-disjoint simplexes whose
vertex values interpolate to lower bounds.
"""
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import Simplex, YBank, longest_edge
from .config import DEFAULT_TOLERANCES
from .errors import (
    BudgetExhausted,
    DegenerateSimplex,
    OutsideCover,
    UnsupportedTheta,
)
from .operator import alpha_theta
from .scm import ScmState, scm_lower_bound
from .theta import ThetaMap, classify_coeffs, eval_theta, poly1d_deriv, poly1d_eval


@dataclass(frozen=True, eq=False)
class ParameterBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have the same length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("parameter box must be finite")
        if np.any(hi < lo):
            raise ValueError("empty parameter interval")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def parse(cls, text):
        """``"0:30,0:2"`` -> box; a bare number ``"0"`` is a degenerate interval."""
        lo, hi = [], []
        for part in text.split(","):
            a, _, b = part.partition(":")
            lo.append(float(a))
            hi.append(float(b) if b else float(a))
        return cls(lo, hi)

    def __str__(self):
        return ",".join(f"{a!r}:{b!r}" for a, b in zip(self.lower, self.upper))

    @property
    def p(self):
        return self.lower.size

    @property
    def free_dims(self):
        return [d for d in range(self.p) if self.upper[d] > self.lower[d]]

    def contains(self, mu, tol=0.0):
        mu = np.asarray(mu, dtype=float)
        return bool(np.all(mu >= self.lower - tol) and np.all(mu <= self.upper + tol))

    def to_dict(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["lower"], d["upper"])


def kuhn_simplices(lower, upper, dims, resolution=1):
    """Kuhn triangulation of the box over coordinates ``dims``.

    Other coordinates stay at ``lower``. Returns a list of ``(k+1, p)``
    vertex arrays, ``k = len(dims)``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    k = len(dims)
    base = lower.copy()
    if k == 0:
        return [base[None, :]]
    h = (upper - lower) / resolution
    out = []
    for cell in itertools.product(range(resolution), repeat=k):
        corner = base.copy()
        for d, i in zip(dims, cell):
            corner[d] = lower[d] + i * h[d] if i < resolution else upper[d]
        for perm in itertools.permutations(range(k)):
            verts = [corner.copy()]
            v = corner.copy()
            for j in perm:
                d = dims[j]
                v = v.copy()
                idx = cell[j] + 1
                v[d] = upper[d] if idx == resolution else lower[d] + idx * h[d]
                verts.append(v)
            out.append(np.array(verts))
    return out


# ---------------------------------------------------------------------------
# boundary enclosures


@dataclass(frozen=True, eq=False)
class EnclosureCell:
    """A piece of the boundary of Theta(D) and a finite point set whose hull contains its image.

    ``kind`` is ``"affine"`` (points are the exact images of ``mu_vertices``)
    or ``"curve"`` (a 1D piece ``t in [t0, t1]`` of parameter ``var``,
    enclosed by secants and tangents of each convex/concave component).
    """

    mu_vertices: np.ndarray
    points: np.ndarray
    on_curve: np.ndarray
    kind: str
    var: int = -1

    @property
    def is_simplex(self):
        try:
            Simplex(self.points, np.zeros(len(self.points)))
        except DegenerateSimplex:
            return False
        return True

    def simplex(self, values):
        return Simplex(self.points, values)


def _dedupe_points(points, on_curve):
    keep, seen = [], {}
    for i, p in enumerate(points):
        key = tuple(np.round(p, 15).tolist())
        if key in seen:
            j = seen[key]
            on_curve[keep[j]] = on_curve[keep[j]] or on_curve[i]
            continue
        seen[key] = len(keep)
        keep.append(i)
    return points[keep], on_curve[keep]


def _curve_cell(theta, var, base_mu, t0, t1):
    p_idx = var + 1
    fixed = {j + 1: base_mu[j] for j in range(theta.p) if j != var}
    comps = []
    for q, e in enumerate(theta.exprs):
        coeffs = e.restrict(p_idx, fixed)
        shape = classify_coeffs(coeffs, (t0, t1))
        if shape == "unknown":
            raise UnsupportedTheta(
                f"Theta_{q + 1} = {e.source!r} is neither convex nor concave on "
                f"mu{p_idx} in [{t0}, {t1}]; supply enclosures manually"
            )
        comps.append((shape, coeffs))

    def f(q, t):
        return poly1d_eval(comps[q][1], t)

    def df(q, t):
        return poly1d_eval(poly1d_deriv(comps[q][1]), t)

    nonlinear = [q for q, (shape, _) in enumerate(comps) if shape != "affine"]
    if len(nonlinear) > 4:
        raise UnsupportedTheta("more than four nonlinear components on one boundary piece")

    # lower/upper envelopes of each nonlinear component, piecewise linear in t
    apex = {}
    for q in nonlinear:
        f0, f1, d0, d1 = f(q, t0), f(q, t1), df(q, t0), df(q, t1)
        if d0 == d1:
            apex[q] = ((t0 + t1) / 2, (f0 + f1) / 2)
        else:
            ts = (f1 - f0 + d0 * t0 - d1 * t1) / (d0 - d1)
            ts = min(max(ts, t0), t1)
            apex[q] = (ts, f0 + d0 * (ts - t0))

    def envelopes(q, t):
        f0, f1 = f(q, t0), f(q, t1)
        secant = f0 + (f1 - f0) * (t - t0) / (t1 - t0)
        ts, fs = apex[q]
        if t <= ts:
            tang = f0 + (fs - f0) * (t - t0) / (ts - t0) if ts > t0 else fs
        else:
            tang = fs + (f1 - fs) * (t - ts) / (t1 - ts) if t1 > ts else fs
        return (tang, secant) if comps[q][0] == "convex" else (secant, tang)

    breaks = sorted({t0, t1, *(apex[q][0] for q in nonlinear)})
    points, on_curve = [], []
    for t in breaks:
        ranges = [envelopes(q, t) for q in nonlinear]
        interior = t not in (t0, t1)
        for pick in itertools.product((0, 1), repeat=len(nonlinear)):
            # all-secant points inside the piece lie on the chord between the endpoints
            if interior and all(
                (b == 1) == (comps[q][0] == "convex") for q, b in zip(nonlinear, pick)
            ):
                continue
            choice = [r[b] for r, b in zip(ranges, pick)]
            psi = np.array([f(q, t) for q in range(len(comps))])
            for q, v in zip(nonlinear, choice):
                psi[q] = v
            points.append(psi)
            on_curve.append(t in (t0, t1))
    pts, oc = _dedupe_points(np.array(points), np.array(on_curve))
    mu0, mu1 = base_mu.copy(), base_mu.copy()
    mu0[var], mu1[var] = t0, t1
    return EnclosureCell(np.array([mu0, mu1]), pts, oc, "curve", var)


def enclose_boundary(D, theta, resolution=1):
    """Cells whose point hulls cover the boundary of Theta(D).

    For affine Theta the boundary facets of ``D`` are Kuhn-triangulated and
    mapped exactly. For polynomial Theta on a one-parameter domain the whole
    curve Theta(D) is its own boundary in R^Q; it is split into
    ``resolution`` pieces, each enclosed by secant/tangent bounds.

    Raises
    ------
    UnsupportedTheta
        Non-affine Theta with more than one free parameter, or a component
        that cannot be proven convex or concave on a piece.
    """
    free = D.free_dims
    if theta.is_affine():
        if not free:
            pts = eval_theta(theta, D.lower)[None, :]
            return [EnclosureCell(D.lower[None, :], pts, np.array([True]), "affine")]
        cells = []
        for d in free:
            others = [e for e in free if e != d]
            for side in (D.lower[d], D.upper[d]):
                lo, hi = D.lower.copy(), D.upper.copy()
                lo[d] = hi[d] = side
                for mu_simp in kuhn_simplices(lo, hi, others, resolution):
                    pts = np.array([eval_theta(theta, m) for m in mu_simp])
                    cells.append(
                        EnclosureCell(mu_simp, pts, np.ones(len(pts), dtype=bool), "affine")
                    )
        return cells
    if len(free) > 1:
        raise UnsupportedTheta(
            "automatic boundary enclosures for non-affine Theta need a one-parameter domain"
        )
    if not free:
        pts = eval_theta(theta, D.lower)[None, :]
        return [EnclosureCell(D.lower[None, :], pts, np.array([True]), "affine")]
    var = free[0]
    edges = np.linspace(D.lower[var], D.upper[var], resolution + 1)
    return [_curve_cell(theta, var, D.lower.copy(), a, b) for a, b in zip(edges[:-1], edges[1:])]


# ---------------------------------------------------------------------------
# evaluation helpers


def _threads():
    try:
        return max(1, int(os.environ.get("STABCERT_THREADS", "1")))
    except ValueError:
        return 1


def _evaluate_many(form, psis, threads=None):
    threads = _threads() if threads is None else threads
    if threads <= 1 or len(psis) <= 1:
        return [alpha_theta(form, p) for p in psis]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda p: alpha_theta(form, p), psis))


def _key(psi):
    return tuple(float(v) for v in psi)


# ---------------------------------------------------------------------------
# stability certification


@dataclass(eq=False)
class StabilityCertificate:
    verdict: str                      # "stable" | "unstable" | "inconclusive"
    witness: dict                     # {"mu", "psi", "alpha"} for unstable, else None
    points: list                      # [{"psi", "alpha", "on_curve", "mu"}]
    cells: list                       # [{"mu_vertices", "points", "kind", "lower_bound"}]
    domain: ParameterBox
    theta: list
    tol: float
    max_iter: int
    resolution: int
    iterations: int
    short_circuit: bool
    operator_hash: str = ""
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "witness": self.witness,
            "points": self.points,
            "cells": self.cells,
            "domain": self.domain.to_dict(),
            "theta": list(self.theta),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "resolution": self.resolution,
            "iterations": self.iterations,
            "short_circuit": self.short_circuit,
            "operator_hash": self.operator_hash,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["domain"] = ParameterBox.from_dict(d["domain"])
        return cls(**d)

    def min_cell_bound(self):
        return min(c["lower_bound"] for c in self.cells)


def certify_stability(form, D, tol=0.0, max_iter=50, resolution=1, threads=None):
    """Prove ``alpha > tol`` on Theta(D), or find a boundary point with ``alpha <= 0``.

    Every cell's certified bound is the minimum of the coercivity constant
    over its enclosure points, valid on their convex hull. If all initial
    points are already above ``tol`` the proof is immediate. Otherwise the
    cell with the smallest bound is split at the curve point where its
    interpolated bound is smallest, that point is evaluated, and both halves
    are re-enclosed. The loop ends in ``stable``, ``unstable`` (a point on the
    boundary with ``alpha <= 0``) or, when refinement cannot help or the
    budget is spent, ``inconclusive``.
    """
    theta = form.theta
    cells = enclose_boundary(D, theta, resolution)
    cache = {}
    points = []

    def register(psi, on_curve, mu):
        k = _key(psi)
        if k in cache:
            idx = cache[k]
            if on_curve and not points[idx]["on_curve"]:
                points[idx]["on_curve"] = True
                points[idx]["mu"] = [float(v) for v in mu]
            return idx
        cache[k] = len(points)
        points.append({"psi": list(k), "alpha": None, "on_curve": bool(on_curve),
                       "mu": [float(v) for v in mu] if on_curve else None})
        return cache[k]

    def cell_mu_of_point(cell, j):
        if cell.kind == "affine":
            return cell.mu_vertices[j]
        # curve cells: on-curve points are the endpoints
        for m in cell.mu_vertices:
            if np.allclose(eval_theta(theta, m), cell.points[j], rtol=0, atol=1e-13):
                return m
        return None

    def index_cell(cell):
        idx = []
        for j, psi in enumerate(cell.points):
            mu = cell_mu_of_point(cell, j) if cell.on_curve[j] else None
            idx.append(register(psi, cell.on_curve[j] and mu is not None, mu))
        return idx

    def evaluate_pending():
        todo = [i for i, pt in enumerate(points) if pt["alpha"] is None]
        res = _evaluate_many(form, [np.array(points[i]["psi"]) for i in todo], threads)
        for i, r in zip(todo, res):
            points[i]["alpha"] = r.alpha

    cell_idx = [index_cell(c) for c in cells]
    evaluate_pending()

    def bound(ci):
        return min(points[i]["alpha"] for i in cell_idx[ci])

    iterations = 0
    verdict, witness, notes = "inconclusive", None, []
    while True:
        bad = [i for i, pt in enumerate(points) if pt["on_curve"] and pt["alpha"] <= 0.0]
        if bad:
            w = min(bad, key=lambda i: (points[i]["alpha"], i))
            verdict = "unstable"
            witness = {"mu": points[w]["mu"], "psi": points[w]["psi"], "alpha": points[w]["alpha"]}
            break
        bounds_now = [bound(ci) for ci in range(len(cells))]
        if min(bounds_now) > tol:
            verdict = "stable"
            break
        if iterations >= max_iter:
            notes.append("iteration budget exhausted")
            break
        worst = int(np.argmin(bounds_now))
        cell = cells[worst]
        attained = [i for i in cell_idx[worst] if points[i]["alpha"] == bounds_now[worst]]
        if cell.kind != "curve" or any(points[i]["on_curve"] for i in attained):
            notes.append("minimum bound attained on the boundary itself; refinement cannot raise it")
            break
        t0, t1 = cell.mu_vertices[0][cell.var], cell.mu_vertices[1][cell.var]
        fracs = [0.5, 0.375, 0.625, 0.25, 0.75, 0.125, 0.875]
        cand = []
        vals = np.array([points[i]["alpha"] for i in cell_idx[worst]])
        simplex = cell.simplex(vals) if cell.is_simplex else None
        for fr in fracs:
            mu = cell.mu_vertices[0].copy()
            mu[cell.var] = t0 + fr * (t1 - t0)
            psi = eval_theta(theta, mu)
            if simplex is not None:
                c = np.clip(np.asarray(_bary(simplex, psi)), 0.0, None)
                b = float(c @ vals / c.sum())
            else:
                b = bounds_now[worst]
            cand.append((b, mu))
        best = min(range(len(cand)), key=lambda k: (cand[k][0], k))
        mu_c = cand[best][1]
        tc = mu_c[cell.var]
        left = _curve_cell(theta, cell.var, cell.mu_vertices[0].copy(), t0, tc)
        right = _curve_cell(theta, cell.var, cell.mu_vertices[0].copy(), tc, t1)
        cells[worst:worst + 1] = [left, right]
        cell_idx[worst:worst + 1] = [index_cell(left), index_cell(right)]
        evaluate_pending()
        iterations += 1

    cell_records = [
        {
            "mu_vertices": c.mu_vertices.tolist(),
            "points": idx,
            "kind": c.kind,
            "lower_bound": bound(ci),
        }
        for ci, (c, idx) in enumerate(zip(cells, cell_idx))
    ]
    if any(c.kind == "curve" for c in cells):
        notes.append("curved boundary pieces enclosed by secant/tangent simplexes and re-enclosed after splits")
    return StabilityCertificate(
        verdict=verdict,
        witness=witness,
        points=points,
        cells=cell_records,
        domain=D,
        theta=theta.sources,
        tol=float(tol),
        max_iter=int(max_iter),
        resolution=int(resolution),
        iterations=iterations,
        short_circuit=(verdict == "stable" and iterations == 0),
        operator_hash=form.digest(),
        notes=notes,
    )


def _bary(simplex, psi):
    rest = simplex._pinv @ (psi - simplex.vertices[0])
    return np.concatenate([[1.0 - rest.sum()], rest])


# ---------------------------------------------------------------------------
# adaptive bound mesh


@dataclass(eq=False)
class BoundMesh:
    theta: list
    p: int
    domain: ParameterBox
    vertices: np.ndarray              # (V, Q)
    values: np.ndarray                # (V,) lower bounds at vertices
    provenance: list                  # "exact" | "scm" per vertex
    simplices: list                   # [tuple of vertex indices]
    gaps: list                        # centroid gap per simplex
    y_bank: np.ndarray                # (B, Q)
    tol: float
    budget: int
    evaluations: int
    converged: bool
    operator_hash: str = ""
    scm: dict = None                  # serialized ScmState when use_scm
    gap_convention: str = "centroid: y-bank upper bound minus interpolated lower bound"

    @property
    def theta_map(self):
        return ThetaMap.from_strings(self.theta, self.p)

    def simplex(self, i):
        idx = list(self.simplices[i])
        return Simplex(self.vertices[idx], self.values[idx])

    def to_dict(self):
        return {
            "theta": list(self.theta),
            "p": self.p,
            "domain": self.domain.to_dict(),
            "vertices": self.vertices.tolist(),
            "values": self.values.tolist(),
            "provenance": list(self.provenance),
            "simplices": [list(s) for s in self.simplices],
            "gaps": [float(g) for g in self.gaps],
            "y_bank": self.y_bank.tolist(),
            "tol": self.tol,
            "budget": self.budget,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "operator_hash": self.operator_hash,
            "scm": self.scm,
            "gap_convention": self.gap_convention,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["domain"] = ParameterBox.from_dict(d["domain"])
        Q = len(d["theta"])
        d["vertices"] = np.array(d["vertices"], dtype=float).reshape(-1, Q)
        d["values"] = np.array(d["values"], dtype=float)
        d["y_bank"] = np.array(d["y_bank"], dtype=float).reshape(-1, Q)
        d["simplices"] = [tuple(s) for s in d["simplices"]]
        return cls(**d)


def _initial_cover(form, D, resolution):
    theta = form.theta
    free = D.free_dims
    if theta.is_affine():
        simps = [np.array([eval_theta(theta, m) for m in s])
                 for s in kuhn_simplices(D.lower, D.upper, free, resolution)]
        try:
            for s in simps:
                Simplex(s, np.zeros(len(s)))
            return simps
        except DegenerateSimplex:
            pass
    elif len(free) == 1:
        cells = enclose_boundary(D, theta, resolution)
        if all(len(c.points) == 3 and c.is_simplex for c in cells):
            return [c.points for c in cells]
    # fallback: per-coordinate interval hull of Theta(D), triangulated
    lo = np.empty(form.Q)
    hi = np.empty(form.Q)
    for q, e in enumerate(theta.exprs):
        lo[q], hi[q] = e.interval(D.lower, D.upper)
        if e.degree() == 0:
            lo[q] = hi[q] = e.evaluate(D.lower)
    box_free = [q for q in range(form.Q) if hi[q] > lo[q]]
    return kuhn_simplices(lo, hi, box_free, resolution)


def build_bound_mesh(form, D, tol, use_scm=False, budget=5000, scm_vertices=False,
                     scm_tol=None, resolution=1, threads=None, ybank_cap=None):
    """Adaptive simplex mesh of lower bounds over an enclosing polytope of Theta(D).

    Each simplex records the gap between the y-bank upper bound and the
    interpolated lower bound at its centroid. Simplexes with gap above
    ``tol`` are bisected along their longest edge and the midpoint is
    evaluated, until all gaps are within ``tol``.

    With ``scm_vertices`` (requires ``use_scm``) new vertices take the SCM
    lower bound when its SCM gap is at most ``scm_tol`` (default ``tol/2``);
    otherwise they are evaluated exactly and feed the SCM constraints.

    Raises
    ------
    BudgetExhausted
        When ``budget`` evaluations are spent first; ``partial`` holds the
        mesh, whose bounds remain valid.
    """
    if scm_vertices and not use_scm:
        raise ValueError("scm_vertices requires use_scm")
    scm_tol = tol / 2 if scm_tol is None else scm_tol
    cap = DEFAULT_TOLERANCES.ybank_cap if ybank_cap is None else ybank_cap
    bank = YBank(cap)
    state = ScmState.for_form(form, cap) if use_scm else None

    verts, values, prov, index = [], [], [], {}
    evaluations = 0

    def add_vertices(psis, allow_scm):
        nonlocal evaluations
        new = []
        for psi in psis:
            k = _key(psi)
            if k not in index:
                index[k] = len(verts)
                verts.append(np.array(k))
                values.append(None)
                prov.append(None)
                new.append(index[k])
        exact = []
        for i in new:
            if allow_scm and state is not None and state.constraints and len(bank):
                lb = scm_lower_bound(state, verts[i])
                ub = bank.upper_bound(verts[i])
                if ub - lb <= scm_tol:
                    values[i], prov[i] = lb, "scm"
                    continue
            exact.append(i)
        res = _evaluate_many(form, [verts[i] for i in exact], threads)
        evaluations += len(exact)
        for i, r in zip(exact, res):
            values[i], prov[i] = r.alpha, "exact"
            bank.add(r.y_point)
            if state is not None:
                state.add(verts[i], r)

    simplices = []
    for s in _initial_cover(form, D, resolution):
        add_vertices(list(s), allow_scm=False)
        simplices.append(tuple(index[_key(p)] for p in s))

    def gaps_of(simps):
        V = np.array(verts)
        vals = np.array(values, dtype=float)
        S = np.array(simps)
        cent = V[S].mean(axis=1)
        lb = vals[S].mean(axis=1)
        Y = bank.array
        ub = np.min(cent @ Y.T, axis=1) if len(bank) else np.full(len(simps), np.inf)
        return ub - lb

    converged = False
    while True:
        gaps = gaps_of(simplices)
        todo = [i for i, g in enumerate(gaps) if g > tol]
        if not todo:
            converged = True
            break
        remaining = budget - evaluations
        if remaining <= 0:
            break
        edges, mids, seen = {}, [], set()
        for i in todo:
            s = simplices[i]
            a, b = longest_edge(np.array([verts[j] for j in s]))
            mid = (verts[s[a]] + verts[s[b]]) / 2
            k = _key(mid)
            if k not in index and k not in seen:
                if len(mids) >= remaining:
                    continue
                seen.add(k)
                mids.append(mid)
            edges[i] = (a, b, k)
        add_vertices(mids, allow_scm=scm_vertices)
        new_simplices = []
        for i, s in enumerate(simplices):
            if i not in edges:
                new_simplices.append(s)
                continue
            a, b, k = edges[i]
            m = index[k]
            left, right = list(s), list(s)
            left[b] = m
            right[a] = m
            new_simplices.extend([tuple(left), tuple(right)])
        simplices = new_simplices

    mesh = BoundMesh(
        theta=form.theta.sources,
        p=form.p,
        domain=D,
        vertices=np.array(verts),
        values=np.array(values, dtype=float),
        provenance=prov,
        simplices=simplices,
        gaps=[float(g) for g in gaps_of(simplices)],
        y_bank=bank.array.reshape(-1, form.Q),
        tol=float(tol),
        budget=int(budget),
        evaluations=evaluations,
        converged=converged,
        operator_hash=form.digest(),
        scm=state.to_dict() if state is not None else None,
    )
    if not converged:
        raise BudgetExhausted(f"budget of {budget} evaluations exhausted", partial=mesh)
    return mesh


def query_lower_bound(mesh, mu, tol=DEFAULT_TOLERANCES):
    """Interpolated lower bound at ``mu`` from the mesh.

    Where ``Theta(mu)`` lies in several simplexes (shared faces, hanging
    vertices) the largest of their bounds is returned; each is valid.

    Raises
    ------
    OutsideCover
        If ``Theta(mu)`` is in no simplex of the mesh.
    """
    psi = eval_theta(mesh.theta_map, mu)
    return query_lower_bound_psi(mesh, psi, tol)


def query_lower_bound_psi(mesh, psi, tol=DEFAULT_TOLERANCES):
    S = np.array(mesh.simplices)
    V = mesh.vertices[S]                            # (S, m, Q)
    D = np.transpose(V[:, 1:, :] - V[:, :1, :], (0, 2, 1))   # (S, Q, m-1)
    pinv = _cached_pinv(mesh, D)
    rest = np.einsum("sjq,sq->sj", pinv, psi[None, :] - V[:, 0, :])
    c = np.concatenate([1.0 - rest.sum(axis=1, keepdims=True), rest], axis=1)
    recon = np.einsum("sm,smq->sq", c, V)
    scale = max(1.0, float(np.max(np.abs(mesh.vertices))), float(np.max(np.abs(psi))))
    ok = (np.linalg.norm(recon - psi, axis=1) <= tol.affine_hull * scale) & np.all(
        c >= -tol.inside, axis=1
    )
    if not np.any(ok):
        raise OutsideCover("Theta(mu) lies outside the mesh cover")
    vals = mesh.values[S]
    return float(np.max(np.einsum("sm,sm->s", c[ok], vals[ok])))


def _cached_pinv(mesh, D):
    cache = getattr(mesh, "_pinv_cache", None)
    if cache is not None and cache[0] == len(mesh.simplices):
        return cache[1]
    P = np.linalg.pinv(D) if D.shape[2] else np.zeros((D.shape[0], 0, D.shape[1]))
    mesh._pinv_cache = (len(mesh.simplices), P)
    return P

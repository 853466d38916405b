"""Fuchsian cone-manifolds glued from prisms over a triangulated cone-metric.

Given a cone-metric and a height for every vertex, each face carries a prism
(see :mod:`fuchscone.hyptrig`).  Gluing the prisms along their lateral faces
produces a cone-manifold whose upper boundary is the metric surface and whose
lower boundary is totally geodesic.  This module collects the per-prism data
into per-edge dihedral angles and per-vertex particle curvatures, evaluates
the discrete curvature functional, and re-triangulates by edge flips until the
upper boundary is convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import hyptrig
from .errors import (
    FlipBudgetExceeded,
    NoSuchTrapezoid,
    PreconditionViolated,
    PrismNonexistent,
    UnflippableConcaveQuad,
    UnflippableEdge,
    UnflippableLoopConfiguration,
)
from .hyptrig import mink, solve_prism
from .surface import ConeMetric, develop_quad, diameter_upper_bound, flip, vertex_angles

TOL_FLAT = 1e-9
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class FuchsianConeManifold:
    """Immutable snapshot of a glued cone-manifold.

    Per-half-edge arrays refer to the prism of the face containing the
    half-edge ``h`` running u -> w: ``he_phi`` is the dihedral angle at the
    upper edge, ``he_alpha`` the trapezoid angle at u, ``he_alpha_rev`` the
    trapezoid angle at w and ``he_lower`` the lower edge length.
    """

    metric: ConeMetric
    heights: np.ndarray
    prisms: tuple
    phi: np.ndarray
    kappa: np.ndarray
    omega: np.ndarray
    he_phi: np.ndarray
    he_alpha: np.ndarray
    he_alpha_rev: np.ndarray
    he_lower: np.ndarray
    he_omega: np.ndarray
    tol_flat: float = TOL_FLAT
    volumes: dict = field(default_factory=dict, repr=False)

    @property
    def surface(self):
        return self.metric.surface

    @cached_property
    def theta(self) -> np.ndarray:
        return math.pi - self.phi

    @cached_property
    def strict_edges(self) -> tuple[int, ...]:
        return tuple(int(e) for e in np.nonzero(self.phi < math.pi - self.tol_flat)[0])

    @cached_property
    def concave_edges(self) -> tuple[int, ...]:
        return tuple(int(e) for e in np.nonzero(self.phi > math.pi + self.tol_flat)[0])

    @property
    def convex(self) -> bool:
        return not self.concave_edges

    @cached_property
    def ultraparallel(self) -> bool:
        return all(p.ultraparallel for p in self.prisms)

    @cached_property
    def nu(self) -> np.ndarray:
        return vertex_angles(self.metric)[1]

    def volume(self, vol_tol: float = 1e-10) -> float:
        key = float(vol_tol)
        if key not in self.volumes:
            self.volumes[key] = math.fsum(hyptrig.prism_volume(p, vol_tol) for p in self.prisms)
        return self.volumes[key]

    def strict_edge_signature(self, digits: int = 9) -> list[tuple]:
        """Chart-independent description of the strict edges (endpoints, length)."""
        S = self.surface
        out = []
        for e in self.strict_edges:
            h = int(S.edge_halfedge[e])
            u, w = int(S.origin[h]), S.dest(h)
            out.append((min(u, w), max(u, w), round(float(self.metric.lengths[e]), digits)))
        return sorted(out)


def _prism_key(metric: ConeMetric, heights, tri):
    a, b, c = tri
    S = metric.surface
    va, vb, vc = (int(S.origin[x]) for x in tri)
    return (metric.length(a), metric.length(c), metric.length(b), heights[va], heights[vb], heights[vc])


def assemble(
    metric: ConeMetric,
    heights,
    require_convex: bool = False,
    tol_flat: float = TOL_FLAT,
    cache: dict | None = None,
) -> FuchsianConeManifold:
    """Glue the prisms of all faces.

    Prism vertex k of a face (a, b, c) is the origin of its k-th half-edge, so
    upper lengths are (l12, l13, l23) = (|a|, |c|, |b|).
    """
    S = metric.surface
    h = np.asarray(heights, dtype=float)
    if h.shape != (S.n_vertices,):
        raise PreconditionViolated(f"expected {S.n_vertices} heights, got shape {h.shape}")
    if set(metric.marked) != set(range(S.n_vertices)):
        raise PreconditionViolated("every vertex of the triangulation must be marked")
    n = S.n_halfedges
    he_phi = np.empty(n)
    he_alpha = np.empty(n)
    he_alpha_rev = np.empty(n)
    he_lower = np.empty(n)
    he_omega = np.empty(n)
    prisms = []
    for f, tri in enumerate(S.faces):
        key = _prism_key(metric, h, tri)
        p = cache.get(key) if cache is not None else None
        if p is None:
            try:
                p = solve_prism(*key)
            except (PrismNonexistent, NoSuchTrapezoid) as exc:
                raise PrismNonexistent(f"face {f}: {exc}", face=f) from exc
            if cache is not None:
                cache[key] = p
        if require_convex and not p.ultraparallel:
            raise PrismNonexistent(f"face {f} prism is not ultraparallel {p.bad_faces}", face=f)
        prisms.append(p)
        for k, he in enumerate(tri):
            k1 = (k + 1) % 3
            he_phi[he] = p.phi(k, k1)
            he_alpha[he] = p.alpha[k][k1]
            he_alpha_rev[he] = p.alpha[k1][k]
            he_lower[he] = p.lower(k, k1)
            he_omega[he] = p.om[k]
    phi = np.empty(S.n_edges)
    for e in range(S.n_edges):
        he = int(S.edge_halfedge[e])
        phi[e] = he_phi[he] + he_phi[S.twin[he]]
    omega = np.array([math.fsum(he_omega[g] for g in out) for out in S.outgoing])
    P = FuchsianConeManifold(
        metric, h, tuple(prisms), phi, TWO_PI - omega, omega,
        he_phi, he_alpha, he_alpha_rev, he_lower, he_omega, tol_flat,
    )
    if require_convex and not P.convex:
        raise PreconditionViolated(f"concave edges {P.concave_edges}")
    return P


def discrete_curvature(P: FuchsianConeManifold, vol_tol: float = 1e-10) -> float:
    """S = -2 vol + sum kappa_v h_v + sum theta_e l_e."""
    S_h = math.fsum(P.kappa * P.heights)
    S_l = math.fsum(P.theta * P.metric.lengths)
    return -2.0 * P.volume(vol_tol) + S_h + S_l


# ---------------------------------------------------------------------------
# extended height function


def face_covector(P: FuchsianConeManifold, positions, face_vertices) -> np.ndarray:
    """Height covector X of a face developed at ``positions``: sinh h(p) = -<X, p>."""
    hs = [P.heights[v] for v in face_vertices]
    return hyptrig.height_covector(positions, hs, math.sinh)


def edge_convexity_margin(P: FuchsianConeManifold, e: int) -> float:
    """Height gap at the far vertex: (extension of face 1) minus (actual), in sinh units."""
    q, pos = develop_quad(P.metric, e)
    org = P.surface.origin
    a, b, c, d = (int(org[x]) for x in (q.h, q.h1, q.h2, q.t2))
    X1 = face_covector(P, [pos["a"], pos["b"], pos["c"]], [a, b, c])
    return -mink(X1, pos["d"]) - math.sinh(P.heights[d])


def _sample_points(tri_pts, k: int, rng) -> list[np.ndarray]:
    w = rng.dirichlet(np.ones(3), size=k)
    out = []
    for wi in w:
        x = wi[0] * tri_pts[0] + wi[1] * tri_pts[1] + wi[2] * tri_pts[2]
        out.append(x / math.sqrt(-mink(x, x)))
    return out


def _bary(tri_pts, p):
    M = np.column_stack(tri_pts)
    return np.linalg.solve(M, p)


def flip_height_gain(P: FuchsianConeManifold, e: int, samples: int = 16, seed: int = 0) -> float:
    """Minimum over quad sample points of sinh h~_after - sinh h~_before for flipping e."""
    q, pos = develop_quad(P.metric, e)
    org = P.surface.origin
    a, b, c, d = (int(org[x]) for x in (q.h, q.h1, q.h2, q.t2))
    A, B, C, D = pos["a"], pos["b"], pos["c"], pos["d"]
    old = [((A, B, C), face_covector(P, [A, B, C], [a, b, c])), ((B, A, D), face_covector(P, [B, A, D], [b, a, d]))]
    new = [((A, D, C), face_covector(P, [A, D, C], [a, d, c])), ((D, B, C), face_covector(P, [D, B, C], [d, b, c]))]
    rng = np.random.default_rng(seed)
    pts = _sample_points(old[0][0], samples, rng) + _sample_points(old[1][0], samples, rng)

    def value(pieces, p):
        for tri, X in pieces:
            if np.all(_bary(tri, p) >= -1e-12):
                return -mink(X, p)
        return None

    worst = math.inf
    for p in pts:
        before, after = value(old, p), value(new, p)
        if before is None or after is None:
            continue
        worst = min(worst, after - before)
    return worst


# ---------------------------------------------------------------------------
# flip algorithm


@dataclass
class FlipLog:
    flips: list = field(default_factory=list)
    height_gains: list = field(default_factory=list)


def canonicalize_convex(
    metric: ConeMetric,
    heights,
    max_flips: int = 1000,
    tol_flat: float = TOL_FLAT,
    log: FlipLog | None = None,
    check_heights: bool = False,
    cache: dict | None = None,
) -> FuchsianConeManifold:
    """Flip concave edges until the upper boundary is convex.

    Concave edges are tried in increasing edge id; the first one that can be
    flipped is flipped.  With ``check_heights`` the pointwise gain of the
    extended height function is recorded in ``log`` for every flip.
    """
    if cache is None:
        cache = {}
    P = assemble(metric, heights, tol_flat=tol_flat, cache=cache)
    count = 0
    while P.concave_edges:
        if count >= max_flips:
            raise FlipBudgetExceeded(f"more than {max_flips} flips", concave=P.concave_edges)
        for e in P.concave_edges:
            try:
                new_metric = flip(P.metric, e)
            except (UnflippableConcaveQuad, UnflippableLoopConfiguration):
                continue
            if check_heights and log is not None:
                log.height_gains.append(flip_height_gain(P, e))
            if log is not None:
                log.flips.append(e)
            P = assemble(new_metric, heights, tol_flat=tol_flat, cache=cache)
            break
        else:
            raise UnflippableEdge(
                f"no concave edge among {P.concave_edges} can be flipped",
                concave=P.concave_edges,
                phi=[float(P.phi[e]) for e in P.concave_edges],
            )
        count += 1
    return P


def height_scaling(P: FuchsianConeManifold, t: float) -> FuchsianConeManifold:
    """Move every vertex up along sinh h' = e^t sinh h, keeping the triangulation."""
    h = np.arcsinh(math.exp(t) * np.sinh(P.heights))
    return assemble(P.metric, h, tol_flat=P.tol_flat)


# ---------------------------------------------------------------------------
# spherical links


@dataclass(frozen=True)
class LinkEntry:
    halfedge: int
    edge: int
    alpha: float
    phi_plus: float
    phi_minus: float
    strict: bool


@dataclass(frozen=True)
class SphericalLink:
    vertex: int
    entries: tuple
    omega: float
    kappa: float
    nu: float

    @property
    def perimeter(self) -> float:
        return TWO_PI - self.nu

    @property
    def strict_entries(self) -> list[LinkEntry]:
        return [x for x in self.entries if x.strict]


def spherical_link(P: FuchsianConeManifold, v: int) -> SphericalLink:
    S = P.surface
    strict = set(P.strict_edges)
    entries = []
    for he in S.outgoing[v]:
        e = int(S.edge_of[he])
        entries.append(
            LinkEntry(
                int(he), e, float(P.he_alpha[he]),
                float(P.he_phi[he]), float(P.he_phi[S.twin[he]]), e in strict,
            )
        )
    return SphericalLink(v, tuple(entries), float(P.omega[v]), float(P.kappa[v]), float(P.nu[v]))


def link_area_inequality(link: SphericalLink, tol: float = 1e-12) -> tuple[float, float]:
    """Both sides of sum (cot phi+ + cot phi-) cot(alpha) / (2 sin alpha) >= nu - kappa."""
    ents = link.strict_entries
    problems = []
    if link.kappa > tol:
        problems.append(f"kappa = {link.kappa:.3e} > 0")
    if not link.perimeter < TWO_PI:
        problems.append("link perimeter is not below 2 pi")
    if not ents:
        problems.append("no strict edges at the vertex")
    for x in ents:
        if not x.phi_plus + x.phi_minus < math.pi:
            problems.append(f"edge {x.edge} is not strictly convex")
    if problems:
        raise PreconditionViolated("; ".join(problems), vertex=link.vertex)
    lhs = math.fsum(
        (1.0 / math.tan(x.phi_plus) + 1.0 / math.tan(x.phi_minus)) / (2.0 * math.sin(x.alpha)) / math.tan(x.alpha)
        for x in ents
    )
    return lhs, link.nu - link.kappa


# ---------------------------------------------------------------------------
# slope and angle bounds


@dataclass
class SlopeReport:
    alpha_bound: float
    diameter_bound: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def slope_bound(diameter: float) -> float:
    """arccot(2 cosh diameter)."""
    return math.atan2(1.0, 2.0 * math.cosh(diameter))


def slope_report(P: FuchsianConeManifold, tol: float = 1e-12) -> SlopeReport:
    D = diameter_upper_bound(P.metric)
    ab = slope_bound(D)
    rep = SlopeReport(ab, D)
    S = P.surface
    for f, p in enumerate(P.prisms):
        for k in range(3):
            sl = p.vertex_slope(k)
            if sl < ab - tol:
                rep.violations.append(("slope", f, k, sl))
    for he in range(S.n_halfedges):
        x = P.he_phi[he]
        if not (ab - tol <= x <= math.pi - ab + tol):
            rep.violations.append(("one-sided dihedral", int(he), float(x)))
    cap = TWO_PI / math.sin(ab)
    strict = set(P.strict_edges)
    for v in range(S.n_vertices):
        if P.omega[v] > cap + tol:
            rep.violations.append(("vertex angle", v, float(P.omega[v])))
        turn = math.fsum(math.pi - P.phi[S.edge_of[g]] for g in S.outgoing[v] if int(S.edge_of[g]) in strict)
        if not turn < P.omega[v]:
            rep.violations.append(("edge turning", v, turn, float(P.omega[v])))
    return rep

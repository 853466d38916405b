"""Curvature merging on cone-triangles and swept triangles.

A *cone-triangle* is a triangulated disk with three boundary corners and
interior cone points of positive curvature.  Merging two cone points glues a
bigon (two copies of a triangle over the segment joining them, with base
angles half their curvatures) into the cut along that segment.  Both points
become flat and the bigon apex becomes a single new cone point.  Repeating
this until one cone point is left yields a *swept triangle*: three geodesic
sides and a single interior cone point ``O``.  That triangle is described by
the distances ``x_i = |O A_i|`` and the angles ``beta_i`` at ``O`` opposite
``A_i``.

The map ``theta`` sends such a triangle to its side lengths and corner
angles; ``theta_inverse`` recovers it by developing the triangle cut along
``O A_1`` and locating ``O`` on a perpendicular bisector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial import Delaunay

from .errors import (
    BudgetExceeded,
    NoBigon,
    NoSuchTriangle,
    NotInImage,
    NotShort,
    NotTetrahedral,
    PathNotEdge,
    PreconditionViolated,
    UnflippableConcaveQuad,
    UnflippableLoopConfiguration,
)
from .hyptrig import (
    boost_to_origin,
    eta,
    hdist,
    hyp_angle,
    hyp_side,
    lorentz_cross,
    mink,
    polar_point,
    triangle_from_base_angles,
)
from .surface import ConeMetric, CombSurface, vertex_angles

TWO_PI = 2.0 * math.pi
FLAT_TOL = 1e-9


# ---------------------------------------------------------------------------
# swept triangles and theta


@dataclass(frozen=True)
class SweptTriangle:
    x: tuple
    beta: tuple

    @property
    def curvature(self) -> float:
        return TWO_PI - sum(self.beta)

    def in_sct(self) -> bool:
        return all(v > 0 for v in self.x) and all(0 < b < math.pi for b in self.beta) and sum(self.beta) < TWO_PI

    def as_array(self) -> np.ndarray:
        return np.array(list(self.x) + list(self.beta))


@dataclass(frozen=True)
class HyperbolicTriangle:
    """Boundary case of the swept triangles: no interior curvature left."""

    sides: tuple
    angles: tuple


def theta(st: SweptTriangle) -> tuple[float, ...]:
    """(l1, l2, l3, lam1, lam2, lam3) of a swept triangle.

    l_i is the side opposite A_i, the base of the triangle O A_j A_k with apex
    angle beta_i; lam_i adds up the two base angles meeting at A_i.
    """
    x, b = st.x, st.beta
    sides = [0.0] * 3
    lam = [0.0] * 3
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        li = hyp_side(x[j], x[k], b[i])
        sides[i] = li
        lam[j] += hyp_angle(x[k], x[j], li)
        lam[k] += hyp_angle(x[j], x[k], li)
    return tuple(sides) + tuple(lam)


def _ccw_angle(P, Q, R) -> float:
    """Counterclockwise angle at P from ray PQ to ray PR, in [0, 2 pi)."""
    T = boost_to_origin(P)
    q, r = T @ Q, T @ R
    a = math.atan2(r[2], r[1]) - math.atan2(q[2], q[1])
    return a % TWO_PI


def _translate_x(d: float) -> np.ndarray:
    return np.array([[math.cosh(d), math.sinh(d), 0.0], [math.sinh(d), math.cosh(d), 0.0], [0.0, 0.0, 1.0]])


def _cut_polygon(six):
    l1, l2, l3, lam1, lam2, lam3 = six
    A2 = np.array([1.0, 0.0, 0.0])
    A3 = polar_point(l1, 0.0)
    A1a = polar_point(l3, lam2)
    A1b = _translate_x(l1) @ polar_point(l2, math.pi - lam3)
    return A1a, A2, A3, A1b


def theta_inverse(six, tol: float = 1e-10, allow_boundary: bool = True):
    """Swept triangle with the given side lengths and corner angles.

    Develop the triangle cut along O A1 as the polygon A1' A2 A3 A1'' O.  O lies
    on the perpendicular bisector of A1' A1''; its position is pinned down by
    requiring the polygon angles at A1' and A1'' to add up to lam1.
    """
    six = tuple(float(v) for v in six)
    if len(six) != 6 or min(six) <= 0:
        raise NotInImage("six positive numbers are required")
    A1a, A2, A3, A1b = _cut_polygon(six)
    gap = hdist(A1a, A1b)
    if gap < 1e-10:
        tri = HyperbolicTriangle(six[:3], six[3:])
        if allow_boundary:
            return tri
        raise NotInImage("the data describe a hyperbolic triangle (no interior curvature)", boundary=tri)
    mid = A1a + A1b
    mid = mid / math.sqrt(-mink(mid, mid))
    diff = A1a - A1b
    N = lorentz_cross(mid, diff)
    N = N / math.sqrt(mink(N, N))
    base_mid = A2 + A3
    base_mid = base_mid / math.sqrt(-mink(base_mid, base_mid))
    if -mink(mid * math.cosh(1e-3) + N * math.sinh(1e-3), base_mid) > -mink(mid * math.cosh(1e-3) - N * math.sinh(1e-3), base_mid):
        N = -N  # orient the bisector towards the side A2 A3

    def point(s):
        return mid * math.cosh(s) + N * math.sinh(s)

    lam1 = six[3]

    def residual(s):
        # wrapped to (-pi, pi]: near a reflex corner the true root sits where
        # one of the ccw angles passes through 2 pi
        O = point(s)
        return math.remainder(_ccw_angle(A1a, A2, O) + _ccw_angle(A1b, O, A3) - lam1, TWO_PI)

    span = 4.0 * (six[0] + six[1] + six[2]) + 1.0
    grid = np.linspace(-span, span, 801)
    vals = [residual(s) for s in grid]
    candidates = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            candidates.append(grid[i])
        elif vals[i] * vals[i + 1] < 0 and abs(vals[i] - vals[i + 1]) < math.pi:
            candidates.append(brentq(residual, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15, maxiter=500))
    for s in candidates:
        O = point(s)
        x = (hdist(O, A1a), hdist(O, A2), hdist(O, A3))
        b1 = _angle_at(O, A2, A3)
        b2 = _angle_at(O, A3, A1b)
        b3 = _angle_at(O, A1a, A2)
        st = SweptTriangle(x, (b1, b2, b3))
        if st.in_sct() and np.max(np.abs(np.array(theta(st)) - np.array(six))) <= tol:
            return st
    raise NotInImage("no point on the bisector reproduces the data", six=six)


def _angle_at(P, Q, R) -> float:
    """Unsigned angle at P between rays to Q and R (hyperboloid model, any dimension)."""
    u = Q + mink(P, Q) * P
    v = R + mink(P, R) * P
    c = mink(u, v)
    s2 = mink(u, u) * mink(v, v) - c * c
    return math.atan2(math.sqrt(max(s2, 0.0)), c)


# ---------------------------------------------------------------------------
# budgets


@dataclass(frozen=True)
class MergeBudget:
    delta: float
    delta_nu: float
    delta_d: float

    @property
    def eta(self) -> float:
        return eta(self.delta)

    def __post_init__(self):
        if not self.delta > 0:
            raise PreconditionViolated("Delta must be positive")
        nu_cap = min(2.0 * self.eta / math.cosh(self.delta), self.delta / math.sinh(self.delta))
        if not 0 < self.delta_nu < nu_cap:
            raise PreconditionViolated(f"delta_nu must lie in (0, {nu_cap:.6g})")
        d_cap = self.delta - self.delta_nu * math.sinh(self.delta)
        if not 0 < self.delta_d < d_cap:
            raise PreconditionViolated(f"delta_D must lie in (0, {d_cap:.6g})")

    @classmethod
    def from_delta(cls, delta: float, nu_share: float = 0.5, d_share: float = 0.9) -> "MergeBudget":
        nu_cap = min(2.0 * eta(delta) / math.cosh(delta), delta / math.sinh(delta))
        dnu = nu_share * nu_cap
        return cls(delta, dnu, d_share * (delta - dnu * math.sinh(delta)))


# ---------------------------------------------------------------------------
# cone-triangles


@dataclass(frozen=True, eq=False)
class ConeTriangle:
    """Triangulated disk; ``twin == -1`` marks boundary half-edges.

    ``he_len`` stores the length of every half-edge (equal on twins).
    ``corners`` lists the three corner vertices in boundary order.
    """

    twin: np.ndarray
    nxt: np.ndarray
    origin: np.ndarray
    he_len: np.ndarray
    corners: tuple

    def __post_init__(self):
        for name, dt in (("twin", np.int64), ("nxt", np.int64), ("origin", np.int64), ("he_len", float)):
            arr = np.array(getattr(self, name), dtype=dt)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "corners", tuple(int(c) for c in self.corners))

    # -- combinatorics ------------------------------------------------------
    @property
    def n_halfedges(self) -> int:
        return len(self.twin)

    @property
    def n_vertices(self) -> int:
        return int(self.origin.max()) + 1

    def faces(self) -> list[tuple[int, int, int]]:
        seen = np.zeros(self.n_halfedges, dtype=bool)
        out = []
        for h in range(self.n_halfedges):
            if not seen[h]:
                b = int(self.nxt[h])
                c = int(self.nxt[b])
                seen[[h, b, c]] = True
                out.append((h, b, c))
        return out

    def dest(self, h: int) -> int:
        return int(self.origin[self.nxt[h]])

    def boundary_vertices(self) -> set[int]:
        return {int(self.origin[h]) for h in range(self.n_halfedges) if self.twin[h] < 0}

    def interior_vertices(self) -> list[int]:
        bd = self.boundary_vertices()
        return [v for v in range(self.n_vertices) if v not in bd]

    def edges(self) -> list[int]:
        """Representative half-edge of every edge."""
        return [h for h in range(self.n_halfedges) if self.twin[h] < 0 or h < self.twin[h]]

    def find_edge(self, u: int, v: int) -> list[int]:
        return [
            h for h in range(self.n_halfedges)
            if self.twin[h] >= 0 and int(self.origin[h]) == u and self.dest(h) == v
        ]

    # -- metric -------------------------------------------------------------
    def corner_angles(self) -> np.ndarray:
        ang = np.empty(self.n_halfedges)
        L = self.he_len
        for a, b, c in self.faces():
            ang[a] = hyp_angle(L[b], L[a], L[c])
            ang[b] = hyp_angle(L[c], L[b], L[a])
            ang[c] = hyp_angle(L[a], L[c], L[b])
        return ang

    def total_angles(self) -> np.ndarray:
        ang = self.corner_angles()
        lam = np.zeros(self.n_vertices)
        np.add.at(lam, self.origin, ang)
        return lam

    def curvatures(self) -> dict[int, float]:
        lam = self.total_angles()
        return {v: TWO_PI - lam[v] for v in self.interior_vertices()}

    def cone_points(self, tol: float = FLAT_TOL) -> list[int]:
        return [v for v, k in self.curvatures().items() if abs(k) > tol]

    def total_curvature(self) -> float:
        return math.fsum(self.curvatures().values())

    def boundary_cycle(self) -> list[int]:
        """Boundary half-edges in order, starting at the one leaving corners[0]."""
        bd = {int(self.origin[h]): h for h in range(self.n_halfedges) if self.twin[h] < 0}
        start = bd[self.corners[0]]
        out = [start]
        h = start
        while True:
            h = bd[self.dest(h)]
            if h == start:
                return out
            out.append(h)

    def six_tuple(self) -> tuple[float, ...]:
        """(l1, l2, l3, lam1, lam2, lam3): side l_i is opposite corner A_i."""
        lam = self.total_angles()
        cyc = self.boundary_cycle()
        sides = {}
        k = 0
        acc = 0.0
        for h in cyc:
            acc += float(self.he_len[h])
            if self.dest(h) in self.corners:
                sides[k] = acc
                acc = 0.0
                k += 1
        # the boundary runs A1 -> A2 -> A3 -> A1; the side A1A2 is opposite A3
        l3, l1, l2 = sides[0], sides[1], sides[2]
        return (l1, l2, l3) + tuple(float(lam[c]) for c in self.corners)

    def check(self) -> list[str]:
        errs = []
        n = self.n_halfedges
        tw, nx = self.twin, self.nxt
        for h in range(n):
            if nx[nx[nx[h]]] != h:
                errs.append(f"half-edge {h} is not in a triangle")
            if tw[h] >= 0 and (tw[tw[h]] != h or tw[h] == h):
                errs.append(f"twin of {h} is inconsistent")
            if tw[h] >= 0 and abs(self.he_len[h] - self.he_len[tw[h]]) > 0:
                errs.append(f"lengths of {h} and its twin differ")
            if tw[h] >= 0 and self.origin[tw[h]] != self.dest(h):
                errs.append(f"origin of the twin of {h} is wrong")
        if errs:
            return errs
        for a, b, c in self.faces():
            la, lb, lc = self.he_len[a], self.he_len[b], self.he_len[c]
            if not (la + lb > lc and la + lc > lb and lb + lc > la):
                errs.append(f"face {(a, b, c)} violates the triangle inequality")
        if errs:
            return errs
        V, F = self.n_vertices, len(self.faces())
        E = len(self.edges())
        if V - E + F != 1:
            errs.append(f"Euler characteristic {V - E + F} is not that of a disk")
        if len(set(self.corners)) != 3 or not set(self.corners) <= self.boundary_vertices():
            errs.append("corners must be three distinct boundary vertices")
        lam = self.total_angles()
        for v in self.boundary_vertices():
            if v in self.corners:
                if lam[v] > math.pi + 1e-12:
                    errs.append(f"corner {v} has angle {lam[v]:.6f} > pi")
            elif abs(lam[v] - math.pi) > 1e-9:
                errs.append(f"boundary vertex {v} has angle {lam[v]:.6f} != pi")
        for v, k in self.curvatures().items():
            if k < -FLAT_TOL:
                errs.append(f"interior vertex {v} has negative curvature {k:.3e}")
        return errs


def _arrays(T: ConeTriangle):
    return T.twin.copy(), T.nxt.copy(), T.origin.copy(), T.he_len.copy()


def flip_edge(T: ConeTriangle, h: int) -> ConeTriangle:
    """Flip the interior edge of half-edge h (see :func:`fuchscone.surface.flip`)."""
    t = int(T.twin[h])
    if t < 0:
        raise UnflippableLoopConfiguration("boundary edges cannot be flipped")
    h1, t1 = int(T.nxt[h]), int(T.nxt[t])
    h2 = int(T.nxt[h1])
    if t in (h1, h2):
        raise UnflippableLoopConfiguration("edge has one triangle on both sides")
    ang = T.corner_angles()
    A, B = ang[h] + ang[t1], ang[h1] + ang[t]
    if A >= math.pi - 1e-12 or B >= math.pi - 1e-12:
        raise UnflippableConcaveQuad("quadrilateral is not strictly convex")
    return _flip(T, h, A)


def _flip(T: ConeTriangle, h: int, A: float) -> ConeTriangle:
    """Flip without checks; A is the quad angle at the origin of h."""
    t = int(T.twin[h])
    h1, t1 = int(T.nxt[h]), int(T.nxt[t])
    h2, t2 = int(T.nxt[h1]), int(T.nxt[t1])
    new_len = hyp_side(T.he_len[h2], T.he_len[t1], A)
    tw, nx, org, L = _arrays(T)
    c, d = int(org[h2]), int(org[t2])
    nx[t2], nx[h1], nx[h] = h1, h, t2
    nx[t1], nx[t], nx[h2] = t, h2, t1
    org[h], org[t] = c, d
    L[h] = L[t] = new_len
    return ConeTriangle(tw, nx, org, L, T.corners)


def _compact(tw, nx, org, L, corners, drop_he, drop_vertex):
    keep = np.ones(len(tw), dtype=bool)
    keep[list(drop_he)] = False
    new_id = -np.ones(len(tw), dtype=np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    vmap = np.arange(int(org.max()) + 1)
    if drop_vertex is not None:
        vmap[drop_vertex + 1:] -= 1
    tw2 = np.where(tw[keep] >= 0, new_id[np.maximum(tw[keep], 0)], -1)
    nx2 = new_id[nx[keep]]
    org2 = vmap[org[keep]]
    return ConeTriangle(tw2, nx2, org2, L[keep], tuple(int(vmap[c]) for c in corners))


def remove_flat_vertex(T: ConeTriangle, v: int) -> ConeTriangle:
    """Delete a flat interior vertex: flip its edges away until it has degree
    three, then merge its three triangles into one."""
    for _ in range(4 * T.n_halfedges):
        out = [h for h in range(T.n_halfedges) if T.origin[h] == v]
        if len(out) <= 3:
            break
        for h in out:
            try:
                T = flip_edge(T, h)
                break
            except (UnflippableConcaveQuad, UnflippableLoopConfiguration):
                continue
        else:
            h = _straight_spoke(T, v, out)
            if h is None:
                raise PreconditionViolated(f"cannot reduce the degree of vertex {v}")
            # v lies on the new edge; the degenerate face it leaves behind
            # disappears when the last three faces are merged
            ang = T.corner_angles()
            T = _flip(T, h, ang[h] + ang[int(T.nxt[int(T.twin[h])])])
    out = [h for h in range(T.n_halfedges) if T.origin[h] == v]
    if len(out) != 3:
        raise PreconditionViolated(f"vertex {v} has degree {len(out)} after reduction")
    tw, nx, org, L = _arrays(T)
    outer = {}
    drop = []
    for g in out:
        o = int(nx[g])
        back = int(nx[o])
        outer[g] = o
        drop += [g, back]
    for g in out:
        o = outer[g]
        back = int(T.nxt[o])
        g_next = int(T.twin[back])
        nx[o] = outer[g_next]
    return _compact(tw, nx, org, L, T.corners, drop, v)


def _straight_spoke(T: ConeTriangle, v: int, out: list[int], tol: float = 1e-9) -> int | None:
    """A spoke whose flip would put v on the new edge: the quad is convex at
    the far end and straight (angle pi) at v."""
    ang = T.corner_angles()
    for h in out:
        t = int(T.twin[h])
        if t < 0:
            continue
        h1, t1 = int(T.nxt[h]), int(T.nxt[t])
        if t in (h1, int(T.nxt[h1])):
            continue
        A, B = ang[h] + ang[t1], ang[h1] + ang[t]
        if abs(A - math.pi) <= tol and B < math.pi - 1e-12:
            return h
    return None


def remove_flat_vertices(T: ConeTriangle, tol: float = FLAT_TOL) -> ConeTriangle:
    while True:
        curv = T.curvatures()
        flat = [v for v in sorted(curv) if abs(curv[v]) <= tol]
        if not flat:
            return T
        T = remove_flat_vertex(T, flat[-1])


def glue_bigon(T: ConeTriangle, h: int, side_u: float, side_v: float) -> tuple[ConeTriangle, int]:
    """Cut along interior half-edge h (u -> v) and glue a bigon whose sides
    from the new apex to u and v have the given lengths.  Returns the new
    disk and the apex vertex id."""
    t = int(T.twin[h])
    if t < 0:
        raise PathNotEdge("the merging edge lies on the boundary")
    tw, nx, org, L = _arrays(T)
    n = len(tw)
    u, v = int(org[h]), int(org[t])
    w = T.n_vertices
    hp, x1, x2, tp, y1, y2 = range(n, n + 6)
    tw = np.concatenate([tw, [h, y2, y1, t, x2, x1]])
    tw[h], tw[t] = hp, tp
    nx = np.concatenate([nx, [x1, x2, hp, y1, y2, tp]])
    org = np.concatenate([org, [v, u, w, u, v, w]])
    l = float(L[h])
    L = np.concatenate([L, [l, side_u, side_v, l, side_v, side_u]])
    return ConeTriangle(tw, nx, org, L, T.corners), w


# -- distances ----------------------------------------------------------------


def _geodesic_point(p, q, s, length):
    if length == 0:
        return p
    return (math.sinh(length - s) * p + math.sinh(s) * q) / math.sinh(length)


def _inradius(la, lb, lc) -> float:
    A = hyp_angle(lb, la, lc)
    s = 0.5 * (la + lb + lc)
    return math.atanh(math.tan(0.5 * A) * math.sinh(s - lb))


@dataclass
class DistanceGraph:
    dist: np.ndarray
    vertex_node: dict
    slack: float

    @property
    def estimate(self) -> float:
        return float(self.dist.max())

    @property
    def upper_bound(self) -> float:
        return self.estimate + 2.0 * self.slack


def distance_graph(T: ConeTriangle, samples: int = 12) -> DistanceGraph:
    """Shortest paths through points sampled on every edge.

    Within a face any two boundary points are joined by a straight segment, so
    the graph distances are lengths of genuine paths: upper bounds for the
    intrinsic distances between the sampled points.  ``slack`` bounds how far
    any point of the disk is from the nearest sampled point.
    """
    reps = T.edges()
    rep_of = {}
    for h in reps:
        rep_of[h] = h
        if T.twin[h] >= 0:
            rep_of[int(T.twin[h])] = h
    nV = T.n_vertices
    node_of_edge = {h: [nV + k * samples + j for j in range(samples)] for k, h in enumerate(reps)}
    n_nodes = nV + samples * len(reps)
    rows, cols, vals = [], [], []
    slack = 0.0
    for a, b, c in T.faces():
        la, lb, lc = (float(T.he_len[x]) for x in (a, b, c))
        P0 = np.array([1.0, 0.0, 0.0])
        P1 = polar_point(la, 0.0)
        P2 = polar_point(lc, hyp_angle(lb, la, lc))
        pos = {a: (P0, P1), b: (P1, P2), c: (P2, P0)}
        pts, ids = [P0, P1, P2], [int(T.origin[a]), int(T.origin[b]), int(T.origin[c])]
        for g in (a, b, c):
            p, q = pos[g]
            r = rep_of[g]
            lg = float(T.he_len[g])
            for j in range(samples):
                s = (j + 1) / (samples + 1) * lg
                if r != g:
                    s = lg - s
                pts.append(_geodesic_point(p, q, s, lg))
                ids.append(node_of_edge[r][j])
        for i in range(len(pts)):
            for k in range(i + 1, len(pts)):
                rows.append(ids[i])
                cols.append(ids[k])
                vals.append(hdist(pts[i], pts[k]))
        slack = max(slack, _inradius(la, lb, lc) + 0.5 * max(la, lb, lc) / (samples + 1))
    mat = coo_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    D = shortest_path(mat, directed=False)
    return DistanceGraph(D, {v: v for v in range(nV)}, slack)


def is_shortest_edge(T: ConeTriangle, h: int, graph: DistanceGraph | None = None, tol: float = 1e-9) -> bool:
    graph = graph or distance_graph(T)
    u, v = int(T.origin[h]), T.dest(h)
    return bool(graph.dist[u, v] >= T.he_len[h] - tol)


# ---------------------------------------------------------------------------
# merging


@dataclass
class MergeRecord:
    u: int
    v: int
    nu_u: float
    nu_v: float
    nu_w: float
    distance: float
    diam_before: float
    diam_after: float
    diam_bound_before: float
    diam_bound_after: float


def merge_pair(
    T: ConeTriangle,
    u: int,
    v: int,
    budget: MergeBudget,
    record: list | None = None,
    samples: int = 12,
) -> tuple[ConeTriangle, int]:
    """Merge cone points u and v into one; returns the new disk and the new point."""
    curv = T.curvatures()
    if u not in curv or v not in curv or u == v:
        raise PreconditionViolated("u and v must be distinct interior vertices")
    hs = T.find_edge(u, v)
    if not hs:
        raise PathNotEdge(f"cone points {u} and {v} are not joined by an edge")
    graph = distance_graph(T, samples)
    h = min(hs, key=lambda g: (T.he_len[g], g))
    if not is_shortest_edge(T, h, graph):
        raise PathNotEdge(f"edge {u}-{v} is not a shortest path")
    a = float(T.he_len[h])
    nu_u, nu_v = curv[u], curv[v]
    if a >= budget.delta:
        raise NoBigon(f"distance {a:.6g} is not below Delta = {budget.delta}")
    try:
        tri = triangle_from_base_angles(a, 0.5 * nu_u, 0.5 * nu_v)
    except NoSuchTriangle as exc:
        raise NoBigon(str(exc)) from exc
    if not tri.alpha > 0.5 * math.pi:
        raise NoBigon("bigon apex angle is not obtuse")
    # tri.b is opposite beta (at u), so it is the side from the apex to v
    T2, w = glue_bigon(T, h, tri.c, tri.b)
    for x in sorted((u, v), reverse=True):
        T2 = remove_flat_vertex(T2, x)
        if w > x:
            w -= 1
    if record is not None:
        g2 = distance_graph(T2, samples)
        nu_w = T2.curvatures()[w]
        record.append(
            MergeRecord(u, v, nu_u, nu_v, nu_w, a, graph.estimate, g2.estimate, graph.upper_bound, g2.upper_bound)
        )
    return T2, w


def _make_adjacent(T: ConeTriangle, w: int, x: int) -> ConeTriangle:
    """Try single flips that join w and x by an edge."""
    if T.find_edge(w, x):
        return T
    for h in range(T.n_halfedges):
        if T.origin[h] != w:
            continue
        opp = int(T.nxt[h])  # edge opposite w in this face
        if T.twin[opp] < 0:
            continue
        far = T.dest(int(T.nxt[int(T.twin[opp])]))
        if far == x:
            try:
                return flip_edge(T, opp)
            except (UnflippableConcaveQuad, UnflippableLoopConfiguration):
                continue
    return T


@dataclass
class SweepResult:
    result: object
    records: list = field(default_factory=list)
    triangle: ConeTriangle | None = None


def extract_swept(T: ConeTriangle):
    """Read off (x, beta) from a disk with a single interior vertex."""
    interior = T.interior_vertices()
    if not interior:
        faces = T.faces()
        if len(faces) != 1:
            raise PreconditionViolated("a disk without interior vertices must be a single triangle")
        six = T.six_tuple()
        return HyperbolicTriangle(six[:3], six[3:])
    if len(interior) != 1 or len(T.faces()) != 3:
        raise PreconditionViolated("expected one interior vertex joined to the three corners")
    w = interior[0]
    ang = T.corner_angles()
    x = [0.0] * 3
    beta = [0.0] * 3
    idx = {c: i for i, c in enumerate(T.corners)}
    for h in range(T.n_halfedges):
        if T.origin[h] == w:
            i = idx[T.dest(h)]
            x[i] = float(T.he_len[h])
            # the corner at w between h and the previous half-edge faces the
            # corner that is not in this face
            a, b = T.dest(h), int(T.origin[T.nxt[T.nxt[h]]])
            k = 3 - idx[a] - idx[b]
            beta[k] = float(ang[h])
    return SweptTriangle(tuple(x), tuple(beta))


def sweep_in(
    T: ConeTriangle,
    budget: MergeBudget,
    order: list | None = None,
    samples: int = 12,
) -> SweepResult:
    """Merge all cone points of T into one and return the swept triangle.

    ``order`` lists cone points: the first two are merged, then the result is
    merged with the third, and so on.  By default cone points are taken in
    increasing vertex id.
    """
    T = remove_flat_vertices(T)
    cones = T.cone_points()
    nu_total = sum(T.curvatures()[v] for v in cones)
    g0 = distance_graph(T, samples)
    if not g0.upper_bound < budget.delta_d:
        raise BudgetExceeded(f"diameter bound {g0.upper_bound:.6g} is not below delta_D = {budget.delta_d:.6g}")
    if not nu_total < budget.delta_nu:
        raise BudgetExceeded(f"total curvature {nu_total:.6g} is not below delta_nu = {budget.delta_nu:.6g}")
    if order is None:
        order = list(cones)
    order = [int(v) for v in order]
    if sorted(order) != sorted(cones):
        raise PreconditionViolated("order must list every cone point exactly once")
    records: list = []
    if len(order) >= 2:
        ids = list(order)
        w = ids[0]
        for k in range(1, len(ids)):
            nxt = ids[k]
            T = _make_adjacent(T, w, nxt)
            T, w_new = merge_pair(T, w, nxt, budget, records, samples)
            removed = (w, nxt)
            ids = [i - sum(1 for r in removed if r < i) for i in ids]
            w = w_new
            rec = records[-1]
            if not rec.diam_bound_after < budget.delta:
                raise BudgetExceeded(f"diameter bound {rec.diam_bound_after:.6g} reached Delta")
            if not rec.nu_w < 2.0 * budget.eta:
                raise BudgetExceeded(f"merged curvature {rec.nu_w:.6g} reached 2 eta")
            if not rec.nu_w < nu_total * math.cosh(budget.delta):
                raise BudgetExceeded("merged curvature exceeds nu cosh(Delta)")
    return SweepResult(extract_swept(T), records, T)


def sweep_surface(triangles, budget: MergeBudget, samples: int = 12) -> list[SweepResult]:
    """Apply :func:`sweep_in` to every coarse face of a surface independently."""
    return [sweep_in(T, budget, samples=samples) for T in triangles]


# -- fixtures -------------------------------------------------------------------


def cone_triangle_from_points(corner_pts, interior_pts) -> ConeTriangle:
    """Geodesic triangulation of a hyperbolic triangle with extra interior points.

    Points are hyperboloid vectors.  The triangulation is the Euclidean
    Delaunay triangulation in the Klein model, whose straight edges are
    hyperbolic geodesics.
    """
    pts = [np.asarray(p, float) for p in list(corner_pts) + list(interior_pts)]
    klein = np.array([p[1:] / p[0] for p in pts])
    tri = Delaunay(klein)
    faces = []
    for s in tri.simplices:
        a, b, c = (int(i) for i in s)
        pa, pb, pc = klein[a], klein[b], klein[c]
        if (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]) < 0:
            b, c = c, b
        faces.append((a, b, c))
    nxt, org, L = [], [], []
    key = {}
    for f, (a, b, c) in enumerate(faces):
        for k, (p, q) in enumerate(((a, b), (b, c), (c, a))):
            h = 3 * f + k
            nxt.append(3 * f + (k + 1) % 3)
            org.append(p)
            L.append(hdist(pts[p], pts[q]))
            key[(p, q)] = h
    twin = [key.get((org[nxt[h]], org[h]), -1) for h in range(len(org))]
    return ConeTriangle(twin, nxt, org, L, (0, 1, 2))


def with_curvatures(T: ConeTriangle, targets: dict) -> ConeTriangle:
    """Stretch the edges at chosen interior vertices until they have the target curvatures.

    Every edge at vertex v is multiplied by (1 + s_v); the s_v are found by
    Newton iteration on the curvature residuals.
    """
    verts = sorted(targets)
    base = T.he_len.copy()

    def build(s):
        L = base.copy()
        for k, v in enumerate(verts):
            for h in range(T.n_halfedges):
                if T.origin[h] == v or T.dest(h) == v:
                    L[h] *= 1.0 + s[k]
        return ConeTriangle(T.twin, T.nxt, T.origin, L, T.corners)

    s = np.zeros(len(verts))
    for _ in range(50):
        C = build(s).curvatures()
        r = np.array([C[v] - targets[v] for v in verts])
        if np.abs(r).max() < 1e-14:
            break
        J = np.empty((len(verts), len(verts)))
        eps = 1e-7
        for k in range(len(verts)):
            sp = s.copy()
            sp[k] += eps
            Cp = build(sp).curvatures()
            J[:, k] = [(Cp[v] - C[v]) / eps for v in verts]
        s = s - np.linalg.solve(J, r)
    out = build(s)
    errs = out.check()
    if errs:
        raise PreconditionViolated("; ".join(errs))
    return out


def triangle_corners(l1: float, l2: float, l3: float):
    """Corner points of a hyperbolic triangle with side l_i opposite corner i (ccw)."""
    A1 = np.array([1.0, 0.0, 0.0])
    A2 = polar_point(l3, 0.0)
    A3 = polar_point(l2, hyp_angle(l1, l2, l3))
    return A1, A2, A3


def interior_point(corners, weights):
    x = sum(w * p for w, p in zip(weights, corners))
    return x / math.sqrt(-mink(x, x))


# ---------------------------------------------------------------------------
# dissolve path


def _tetra_points(st: SweptTriangle):
    b1, b2, b3 = st.beta
    r1 = np.array([1.0, 0.0, 0.0])
    r2 = np.array([math.cos(b3), math.sin(b3), 0.0])
    y = (math.cos(b1) - math.cos(b2) * math.cos(b3)) / math.sin(b3)
    z2 = 1.0 - math.cos(b2) ** 2 - y * y
    r3 = np.array([math.cos(b2), y, math.sqrt(max(z2, 0.0))])
    O = np.array([1.0, 0.0, 0.0, 0.0])
    A = [np.concatenate([[math.cosh(x)], math.sinh(x) * r]) for x, r in zip(st.x, (r1, r2, r3))]
    return O, A


def is_tetrahedral(st: SweptTriangle) -> bool:
    b = st.beta
    return all(b[i] <= b[(i + 1) % 3] + b[(i + 2) % 3] for i in range(3))


def dissolve_path(st: SweptTriangle, n_steps: int = 20, nudge: float = 1e-6) -> list[SweptTriangle]:
    """Move the cone point straight towards the plane of the corners.

    With O A1 A2 A3 realized as a tetrahedron, O_t runs along the segment from
    O to its orthogonal projection O' onto the plane of the corners; every
    O_t gives a swept triangle with the same side lengths, and O' itself gives
    the flat triangle.
    """
    if not is_tetrahedral(st):
        raise NotTetrahedral(f"angles {st.beta} violate the triangle inequality")
    six = theta(st)
    if not max(six[3:]) < math.pi:
        raise NotShort(f"corner angles {six[3:]} are not all below pi")
    O, A = _tetra_points(st)
    M = np.array(A)
    M[:, 0] = -M[:, 0]
    # unit normal of the plane spanned by the corners
    _, _, vt = np.linalg.svd(M)
    n = vt[-1]
    n = n / math.sqrt(mink(n, n))
    Op = O - mink(O, n) * n
    Op = Op / math.sqrt(-mink(Op, Op))
    w = np.linalg.lstsq(np.array(A).T, Op, rcond=None)[0]
    if np.any(w <= 0):
        # fall back to a point just inside the triangle, along the segment
        # from the projection to the corner barycentre
        c = sum(A)
        c = c / math.sqrt(-mink(c, c))
        wc = np.linalg.lstsq(np.array(A).T, c, rcond=None)[0]
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            wm = (1 - mid) * w + mid * wc
            if np.all(wm > 0):
                hi = mid
            else:
                lo = mid
        wm = (1 - hi) * w + hi * wc
        wm = wm + nudge
        Op = sum(x * a for x, a in zip(wm, A))
        Op = Op / math.sqrt(-mink(Op, Op))
    tau = hdist(O, Op)
    path = []
    for k in range(n_steps + 1):
        t = tau * k / n_steps
        Ot = _geodesic_point(O, Op, t, tau) if k < n_steps else Op
        x = tuple(hdist(Ot, a) for a in A)
        beta = (_angle_at(Ot, A[1], A[2]), _angle_at(Ot, A[2], A[0]), _angle_at(Ot, A[0], A[1]))
        path.append(SweptTriangle(x, beta))
    return path


# ---------------------------------------------------------------------------
# continuous bigon family on closed surfaces


@dataclass
class BigonFamily:
    times: list
    metrics: list
    apex: int
    tau: float
    split: tuple


def _split_edge(metric: ConeMetric, e: int, lens: dict) -> ConeMetric:
    """Subdivide edge e at a new vertex w joined to both opposite corners."""
    S = metric.surface
    h = int(S.edge_halfedge[e])
    t = int(S.twin[h])
    h1, t1 = int(S.nxt[h]), int(S.nxt[t])
    h2, t2 = int(S.nxt[h1]), int(S.nxt[t1])
    c, d = int(S.origin[h2]), int(S.origin[t2])
    n = S.n_halfedges
    w = S.n_vertices
    p1, q1, r1, p2, q2, r2 = range(n, n + 6)
    twin = np.concatenate([S.twin, [r1, t, p1, r2, h, p2]])
    twin[h], twin[t] = q2, q1
    nxt = np.concatenate([S.nxt, [h2, h1, q1, t2, t1, q2]])
    nxt[h], nxt[t] = p1, p2
    nxt[h1] = r1
    nxt[t1] = r2
    org = np.concatenate([S.origin, [w, w, c, w, w, d]])
    new = CombSurface(twin, nxt, org)
    # edge ids are renumbered by the split, so copy lengths half-edge by half-edge
    L = np.empty(new.n_edges)
    for k in range(new.n_edges):
        g = int(new.edge_halfedge[k])
        L[k] = metric.length(g) if g < n else math.nan
    L[new.edge_of[h]] = lens["uw"]
    L[new.edge_of[t]] = lens["vw"]
    L[new.edge_of[p1]] = lens["wc"]
    L[new.edge_of[p2]] = lens["wd"]
    return ConeMetric(new, L, tuple(metric.marked) + (w,))


def bigon_family(metric: ConeMetric, u: int, v: int, n_steps: int = 10, delta: float | None = None) -> BigonFamily:
    """Metrics d_t, t in [0, tau], opening a bigon along the edge uv.

    The bigon at time t consists of two copies of the triangle A_t B C with
    BC = d(u, v) and A_t on the altitude AH of the full bigon triangle at
    distance t from H.  At t = 0 the apex w is a flat point on uv; at
    t = tau = |AH| the vertices u and v are flat and w carries the curvature.
    """
    S = metric.surface
    cand = [int(S.edge_of[h]) for h in range(S.n_halfedges) if S.origin[h] == u and S.dest(h) == v]
    if u == v or not cand:
        raise PathNotEdge(f"vertices {u} and {v} are not joined by an edge")
    e = min(cand, key=lambda k: (metric.lengths[k], k))
    h = int(S.edge_halfedge[e])
    if int(S.origin[h]) != u:
        u, v = v, u
    _, nu = vertex_angles(metric)
    a = float(metric.lengths[e])
    if delta is not None and not (a < delta and nu[u] + nu[v] < 2.0 * eta(delta)):
        raise NoBigon("distance or curvature budget violated")
    try:
        tri = triangle_from_base_angles(a, 0.5 * nu[u], 0.5 * nu[v])
    except NoSuchTriangle as exc:
        raise NoBigon(str(exc)) from exc
    # tri.c is the side A B (apex to u); the altitude foot H splits BC
    BH = math.atanh(math.tanh(tri.c) * math.cos(tri.beta))
    CH = a - BH
    tau = math.asinh(math.sinh(tri.c) * math.sin(tri.beta))
    ang = metric.corner_angles
    t_h = int(S.twin[h])
    h1 = int(S.nxt[h])
    t1 = int(S.nxt[t_h])
    h2 = int(S.nxt[h1])
    times, metrics = [], []
    for k in range(n_steps + 1):
        t = tau * k / n_steps
        uw = math.acosh(math.cosh(t) * math.cosh(BH))
        vw = math.acosh(math.cosh(t) * math.cosh(CH))
        at_u = math.atan2(math.tanh(t), math.sinh(BH))
        # upper copy faces the triangle of h, lower copy the triangle of twin(h)
        wc = hyp_side(uw, metric.length(h2), at_u + ang[h])
        wd = hyp_side(uw, metric.length(t1), at_u + ang[t1])
        times.append(t)
        metrics.append(_split_edge(metric, e, {"uw": uw, "vw": vw, "wc": wc, "wd": wd}))
    return BigonFamily(times, metrics, S.n_vertices, tau, (BH, CH))

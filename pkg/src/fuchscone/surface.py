"""Triangulated closed surfaces with hyperbolic cone-metrics.

A :class:`CombSurface` is a half-edge map: three integer arrays ``twin``,
``nxt`` and ``origin`` indexed by half-edge id.  Faces are the orbits of
``nxt`` (all of length three), edges are twin pairs and vertices are the orbits
of ``he -> nxt[twin[he]]``.  Loops and multiple edges are allowed, so a corner
is always addressed by the half-edge leaving it, never by a vertex pair.

Edge ids are dense and ordered by the smallest half-edge id of the pair, which
makes them stable under flips (a flip keeps both half-edge ids of the edge).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import (
    InvariantViolation,
    NotConvex,
    TriangleInequalityViolated,
    UnflippableConcaveQuad,
    UnflippableLoopConfiguration,
)
from .hyptrig import hyp_angle, hyp_side

TWO_PI = 2.0 * math.pi
GAUSS_BONNET_TOL = 1e-10
QUAD_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class CombSurface:
    twin: np.ndarray
    nxt: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        for name in ("twin", "nxt", "origin"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # -- sizes -------------------------------------------------------------
    @property
    def n_halfedges(self) -> int:
        return len(self.twin)

    @cached_property
    def n_vertices(self) -> int:
        return int(self.origin.max()) + 1 if len(self.origin) else 0

    @cached_property
    def edge_of(self) -> np.ndarray:
        eid = np.full(self.n_halfedges, -1, dtype=np.int64)
        k = 0
        for h in range(self.n_halfedges):
            if eid[h] < 0:
                eid[h] = k
                eid[self.twin[h]] = k
                k += 1
        return eid

    @property
    def n_edges(self) -> int:
        return self.n_halfedges // 2

    @property
    def n_faces(self) -> int:
        return self.n_halfedges // 3

    @cached_property
    def edge_halfedge(self) -> np.ndarray:
        """Representative (lowest) half-edge of every edge."""
        rep = np.empty(self.n_edges, dtype=np.int64)
        for h in range(self.n_halfedges - 1, -1, -1):
            rep[self.edge_of[h]] = h
        return rep

    @cached_property
    def faces(self) -> list[tuple[int, int, int]]:
        """Faces as half-edge triples, each starting at its lowest half-edge."""
        seen = np.zeros(self.n_halfedges, dtype=bool)
        out = []
        for h in range(self.n_halfedges):
            if not seen[h]:
                a = h
                b = int(self.nxt[a])
                c = int(self.nxt[b])
                seen[[a, b, c]] = True
                out.append((a, b, c))
        return out

    @cached_property
    def face_of(self) -> np.ndarray:
        f = np.empty(self.n_halfedges, dtype=np.int64)
        for k, tri in enumerate(self.faces):
            f[list(tri)] = k
        return f

    def prev(self, h: int) -> int:
        return int(self.nxt[self.nxt[h]])

    def dest(self, h: int) -> int:
        return int(self.origin[self.twin[h]])

    @cached_property
    def outgoing(self) -> list[list[int]]:
        """Outgoing half-edges of every vertex in rotation order."""
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        seen = np.zeros(self.n_halfedges, dtype=bool)
        for h in range(self.n_halfedges):
            if seen[h]:
                continue
            v = int(self.origin[h])
            cyc = []
            g = h
            while not seen[g]:
                seen[g] = True
                cyc.append(g)
                g = int(self.nxt[self.twin[g]])
            if out[v]:
                raise InvariantViolation(f"vertex {v} has a disconnected link")
            out[v] = cyc
        return out

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic()) // 2

    def check(self) -> list[str]:
        """Structural invariants; returns a list of violations (empty if valid)."""
        errs = []
        n = self.n_halfedges
        tw, nx, org = self.twin, self.nxt, self.origin
        if n == 0 or n % 6:
            errs.append(f"half-edge count {n} is not a positive multiple of 6")
            return errs
        if tw.min() < 0 or tw.max() >= n or nx.min() < 0 or nx.max() >= n:
            errs.append("twin/next index out of range")
            return errs
        if np.any(tw[tw] != np.arange(n)) or np.any(tw == np.arange(n)):
            errs.append("twin is not a fixed-point-free involution")
        if np.any(nx[nx[nx]] != np.arange(n)) or np.any(nx == np.arange(n)):
            errs.append("next-orbits are not all of length 3")
        if org.min() < 0 or len(np.unique(org)) != org.max() + 1:
            errs.append("vertex ids are not dense")
        if errs:
            return errs
        # the origin of next(twin(h)) must equal origin(h); origin(next(h)) = dest(h)
        if np.any(org[nx] != org[tw]):
            errs.append("origins are inconsistent with twin/next")
        try:
            self.outgoing
        except InvariantViolation as exc:
            errs.append(str(exc))
        if not self._connected():
            errs.append("surface is not connected")
        chi = self.euler_characteristic()
        if chi % 2 or chi > 2:
            errs.append(f"Euler characteristic {chi} is not that of a closed oriented surface")
        return errs

    def _connected(self) -> bool:
        seen = np.zeros(self.n_halfedges, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            h = stack.pop()
            for g in (int(self.twin[h]), int(self.nxt[h])):
                if not seen[g]:
                    seen[g] = True
                    stack.append(g)
        return bool(seen.all())

    def signature(self) -> frozenset:
        """Labelling-free description: faces as rotation-normalised cycles of (edge, origin)."""
        sig = []
        for tri in self.faces:
            cyc = [(int(self.edge_of[h]), int(self.origin[h])) for h in tri]
            k = cyc.index(min(cyc))
            sig.append(tuple(cyc[k:] + cyc[:k]))
        return frozenset(sig)


def build_surface(twin, nxt, origin=None) -> CombSurface:
    """Build a surface from twin/next, computing vertex ids if not given."""
    twin = np.asarray(twin, dtype=np.int64)
    nxt = np.asarray(nxt, dtype=np.int64)
    if origin is None:
        origin = np.full(len(twin), -1, dtype=np.int64)
        v = 0
        for h in range(len(twin)):
            if origin[h] < 0:
                g = h
                while origin[g] < 0:
                    origin[g] = v
                    g = nxt[twin[g]]
                v += 1
    return CombSurface(twin, nxt, origin)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True, eq=False)
class ConeMetric:
    surface: CombSurface
    lengths: np.ndarray
    marked: tuple = field(default=None)

    def __post_init__(self):
        arr = np.array(self.lengths, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "lengths", arr)
        if self.marked is None:
            object.__setattr__(self, "marked", tuple(range(self.surface.n_vertices)))
        else:
            object.__setattr__(self, "marked", tuple(sorted(int(v) for v in self.marked)))

    def length(self, h: int) -> float:
        return float(self.lengths[self.surface.edge_of[h]])

    @cached_property
    def corner_angles(self) -> np.ndarray:
        """Angle at the origin of every half-edge inside its face."""
        S = self.surface
        ang = np.empty(S.n_halfedges)
        L = self.lengths[S.edge_of]
        for a, b, c in S.faces:
            la, lb, lc = L[a], L[b], L[c]
            ang[a] = hyp_angle(lb, la, lc)
            ang[b] = hyp_angle(lc, lb, la)
            ang[c] = hyp_angle(la, lc, lb)
        return ang

    def face_violations(self) -> list[int]:
        S = self.surface
        L = self.lengths[S.edge_of]
        bad = []
        for k, (a, b, c) in enumerate(S.faces):
            la, lb, lc = L[a], L[b], L[c]
            if not (la + lb > lc and la + lc > lb and lb + lc > la and min(la, lb, lc) > 0):
                bad.append(k)
        return bad

    def area(self) -> float:
        ang = self.corner_angles
        return float(sum(math.pi - ang[a] - ang[b] - ang[c] for a, b, c in self.surface.faces))

    def gauss_bonnet_residual(self) -> float:
        _, nu = vertex_angles(self)
        return float(nu.sum() - self.area() - 2.0 * math.pi * self.surface.euler_characteristic())

    def with_lengths(self, lengths) -> "ConeMetric":
        return ConeMetric(self.surface, lengths, self.marked)


def vertex_angles(metric: ConeMetric) -> tuple[np.ndarray, np.ndarray]:
    """Total angles and curvatures per vertex (corners at loops are counted twice)."""
    S = metric.surface
    lam = np.zeros(S.n_vertices)
    ang = metric.corner_angles
    for v, hs in enumerate(S.outgoing):
        lam[v] = math.fsum(ang[h] for h in hs)
    return lam, TWO_PI - lam


def check_metric(metric: ConeMetric, require_convex: bool = True) -> list[str]:
    """All structural and metric invariants; returns human-readable violations."""
    errs = list(metric.surface.check())
    if errs:
        return errs
    S = metric.surface
    if metric.lengths.shape != (S.n_edges,):
        return [f"expected {S.n_edges} edge lengths, got {metric.lengths.shape}"]
    if np.any(~np.isfinite(metric.lengths)) or np.any(metric.lengths <= 1e-12):
        errs.append("edge lengths must be finite and > 1e-12")
        return errs
    for k in metric.face_violations():
        errs.append(f"face {k} violates the strict triangle inequality")
    if errs:
        return errs
    lam, nu = vertex_angles(metric)
    marked = set(metric.marked)
    for v in range(S.n_vertices):
        if v not in marked and abs(nu[v]) > 1e-9:
            errs.append(f"vertex {v} is unmarked but has curvature {nu[v]:.3e}")
        if require_convex and lam[v] > TWO_PI + 1e-12:
            errs.append(f"vertex {v} is not convex: total angle {lam[v]:.12f} > 2 pi")
    gb = metric.gauss_bonnet_residual()
    if abs(gb) > GAUSS_BONNET_TOL:
        errs.append(f"Gauss-Bonnet residual {gb:.3e}")
    return errs


# ---------------------------------------------------------------------------
# builders


def canonical_surface(genus: int) -> CombSurface:
    """One-vertex triangulation of the 4g-gon with word a1 b1 a1^-1 b1^-1 ...

    The polygon is fanned from its first corner into 4g - 2 triangles.
    """
    if genus < 1:
        raise ValueError("genus must be at least 1")
    n = 4 * genus
    nf = n - 2
    twin = np.full(3 * nf, -1, dtype=np.int64)
    nxt = np.empty(3 * nf, dtype=np.int64)
    for k in range(nf):
        nxt[3 * k], nxt[3 * k + 1], nxt[3 * k + 2] = 3 * k + 1, 3 * k + 2, 3 * k
    for k in range(nf - 1):  # diagonal P0 P_{k+2}
        twin[3 * k + 2], twin[3 * k + 3] = 3 * k + 3, 3 * k + 2

    def side(j: int) -> int:
        if j == 0:
            return 0
        if j == n - 1:
            return 3 * (nf - 1) + 2
        return 3 * (j - 1) + 1

    for blk in range(genus):
        for off in (0, 1):
            i, j = side(4 * blk + off), side(4 * blk + off + 2)
            twin[i], twin[j] = j, i
    return build_surface(twin, nxt)


def equilateral_length(alpha: float) -> float:
    """Side of the equilateral hyperbolic triangle with angles alpha."""
    c = math.cos(alpha)
    return math.acosh(c / (1.0 - c))


def build_canonical(genus: int, alpha: float, strict: bool = False) -> ConeMetric:
    """Canonical one-vertex metric made of equilateral triangles with angle alpha.

    Raises :class:`NotConvex` when the vertex angle exceeds 2 pi; with
    ``strict=True`` an angle of exactly 2 pi (up to 1e-12) is rejected too.
    """
    S = canonical_surface(genus)
    if not 0.0 < alpha < math.pi / 3.0:
        raise ValueError("corner angle must lie in (0, pi/3)")
    lam = 3 * S.n_faces * alpha
    if lam > TWO_PI + 1e-12 or (strict and lam >= TWO_PI - 1e-12):
        raise NotConvex(f"vertex angle {lam:.12f} is not below 2 pi", angle=lam)
    return ConeMetric(S, np.full(S.n_edges, equilateral_length(alpha)))


# ---------------------------------------------------------------------------
# flips


@dataclass(frozen=True)
class Quad:
    """The two triangles around an edge, ``h`` running a -> b.

    ``h1`` (b -> c) and ``h2`` (c -> a) complete the face of ``h``; ``t1``
    (a -> d) and ``t2`` (d -> b) complete the face of ``t = twin(h)``.
    """

    h: int
    h1: int
    h2: int
    t: int
    t1: int
    t2: int
    angle_a: float
    angle_b: float


def quad_of(metric: ConeMetric, e: int) -> Quad:
    S = metric.surface
    h = int(S.edge_halfedge[e])
    t = int(S.twin[h])
    h1 = int(S.nxt[h])
    h2 = int(S.nxt[h1])
    if t in (h1, h2):
        raise UnflippableLoopConfiguration(f"edge {e} has the same triangle on both sides", edge=e)
    t1 = int(S.nxt[t])
    t2 = int(S.nxt[t1])
    ang = metric.corner_angles
    return Quad(h, h1, h2, t, t1, t2, ang[h] + ang[t1], ang[h1] + ang[t])


def flip_length(metric: ConeMetric, e: int) -> float:
    """Length of the other diagonal of the quadrilateral around edge e."""
    q = quad_of(metric, e)
    if q.angle_a >= math.pi - QUAD_MARGIN or q.angle_b >= math.pi - QUAD_MARGIN:
        raise UnflippableConcaveQuad(
            f"edge {e}: quadrilateral angles {q.angle_a:.6f}, {q.angle_b:.6f} are not below pi", edge=e
        )
    return hyp_side(metric.length(q.h2), metric.length(q.t1), q.angle_a)


def flip(metric: ConeMetric, e: int) -> ConeMetric:
    """Replace edge e by the other diagonal of its quadrilateral.

    The half-edge ``h`` of the edge is re-pointed from c to d (rotating the
    diagonal one step counterclockwise); the underlying metric is unchanged.
    """
    new_len = flip_length(metric, e)
    S = metric.surface
    q = quad_of(metric, e)
    nxt = S.nxt.copy()
    org = S.origin.copy()
    c = int(S.origin[q.h2])
    d = int(S.origin[q.t2])
    nxt[q.t2], nxt[q.h1], nxt[q.h] = q.h1, q.h, q.t2
    nxt[q.t1], nxt[q.t], nxt[q.h2] = q.t, q.h2, q.t1
    org[q.h], org[q.t] = c, d
    lengths = metric.lengths.copy()
    lengths[e] = new_len
    return ConeMetric(CombSurface(S.twin, nxt, org), lengths, metric.marked)


# ---------------------------------------------------------------------------
# scaling, refinement, diameter


def scale(metric: ConeMetric, t: float) -> ConeMetric:
    if not t > 0:
        raise ValueError("scale factor must be positive")
    out = metric.with_lengths(metric.lengths * t)
    if t < 1.0 and out.face_violations():
        raise TriangleInequalityViolated(f"scaling by {t} breaks faces {out.face_violations()}")
    return out


def incenter_distances(la: float, lb: float, lc: float) -> tuple[float, float, float]:
    """Distances from the corners of a triangle to its incenter.

    ``la`` is the side a -> b, ``lb`` is b -> c and ``lc`` is c -> a; the
    returned distances are for the corners a, b, c.
    """
    A = hyp_angle(lb, la, lc)
    B = hyp_angle(lc, la, lb)
    C = hyp_angle(la, lb, lc)
    s = 0.5 * (la + lb + lc)
    tanh_r = math.tan(0.5 * A) * math.sinh(s - lb)
    sinh_r = tanh_r / math.sqrt((1.0 - tanh_r) * (1.0 + tanh_r))
    return tuple(math.asinh(sinh_r / math.sin(0.5 * X)) for X in (A, B, C))


def refine(metric: ConeMetric, face: int) -> ConeMetric:
    """Insert a flat vertex at the incenter of a face, joined to its three corners."""
    S = metric.surface
    a_h, b_h, c_h = S.faces[face]
    n = S.n_halfedges
    w = S.n_vertices
    va, vb, vc = (int(S.origin[x]) for x in (a_h, b_h, c_h))
    # new half-edges: n: b->w, n+1: w->a, n+2: c->w, n+3: w->b, n+4: a->w, n+5: w->c
    twin = np.concatenate([S.twin, [n + 3, n + 4, n + 5, n, n + 1, n + 2]])
    nxt = np.concatenate([S.nxt, np.zeros(6, dtype=np.int64)])
    org = np.concatenate([S.origin, [vb, w, vc, w, va, w]])
    nxt[a_h], nxt[n], nxt[n + 1] = n, n + 1, a_h
    nxt[b_h], nxt[n + 2], nxt[n + 3] = n + 2, n + 3, b_h
    nxt[c_h], nxt[n + 4], nxt[n + 5] = n + 4, n + 5, c_h
    da, db, dc = incenter_distances(metric.length(a_h), metric.length(b_h), metric.length(c_h))
    new = CombSurface(twin, nxt, org)
    lengths = np.empty(new.n_edges)
    lengths[: S.n_edges] = metric.lengths
    for he, val in ((n, db), (n + 1, da), (n + 2, dc)):
        lengths[new.edge_of[he]] = val
    return ConeMetric(new, lengths, tuple(metric.marked) + (w,))


def refine_many(metric: ConeMetric, count: int, rng: np.random.Generator) -> ConeMetric:
    """Insert ``count`` incenter vertices into randomly chosen largest-area faces."""
    for _ in range(count):
        ang = metric.corner_angles
        areas = np.array([math.pi - ang[a] - ang[b] - ang[c] for a, b, c in metric.surface.faces])
        order = np.argsort(-areas, kind="stable")
        k = int(order[rng.integers(0, max(1, len(order) // 3))])
        metric = refine(metric, k)
    return metric


def diameter_upper_bound(metric: ConeMetric) -> float:
    """Upper bound on the intrinsic diameter.

    Every point lies in a triangle whose vertices are within its longest side,
    so diam <= (graph diameter of the 1-skeleton) + 2 * (longest edge).
    """
    S = metric.surface
    rows = S.origin
    cols = S.origin[S.twin]
    w = metric.lengths[S.edge_of]
    # keep the shortest of parallel edges; loops do not matter for distances
    keep = rows != cols
    n = S.n_vertices
    best: dict[tuple[int, int], float] = {}
    for r, c, x in zip(rows[keep], cols[keep], w[keep]):
        key = (int(r), int(c))
        if key not in best or x < best[key]:
            best[key] = float(x)
    if n == 1 or not best:
        graph_diam = 0.0
    else:
        keys = list(best)
        mat = coo_matrix(([best[k] for k in keys], ([k[0] for k in keys], [k[1] for k in keys])), shape=(n, n))
        graph_diam = float(shortest_path(mat.tocsr(), directed=False).max())
    return graph_diam + 2.0 * float(metric.lengths.max())


def develop_quad(metric: ConeMetric, e: int) -> tuple[Quad, dict[str, np.ndarray]]:
    """Hyperboloid positions of the quadrilateral around edge e.

    ``a`` is at the origin, ``b`` on the positive x axis, ``c`` (the third
    vertex of the face of ``h``) above it and ``d`` below.
    """
    from .hyptrig import polar_point

    q = quad_of(metric, e)
    ang = metric.corner_angles
    pos = {
        "a": np.array([1.0, 0.0, 0.0]),
        "b": polar_point(metric.length(q.h), 0.0),
        "c": polar_point(metric.length(q.h2), ang[q.h]),
        "d": polar_point(metric.length(q.t1), -ang[q.t1]),
    }
    return q, pos

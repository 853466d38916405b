"""Hyperbolic and spherical trigonometry for trapezoids, prisms and triangles.

Conventions
-----------
A *trapezoid* is the convex hull of a segment ``A1A2`` (the upper edge) and its
orthogonal projection ``B1B2`` onto a line ultraparallel to it.  A *prism* is
the three-dimensional analogue over an upper triangle ``A1A2A3``.  Heights are
the lateral edge lengths ``h_i = A_iB_i``.

Points of the hyperbolic plane are represented in the hyperboloid model
``{x : <x, x> = -1, x0 > 0}`` with ``<x, y> = -x0 y0 + x1 y1 + x2 y2``.

All angles are extracted with two-argument forms (``atan2`` or half-angle
tangents) so that values near ``0`` and ``pi`` keep full relative accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import (
    DegenerateUpperTriangle,
    NonPositiveInput,
    NoSuchTrapezoid,
    NoSuchTriangle,
    PreconditionViolated,
    PrismNonexistent,
    QuadratureDidNotConverge,
)

DEGENERATE = 1e-12
GRAM_TOL = 1e-10

# ---------------------------------------------------------------------------
# basic kernels


def mink(x: np.ndarray, y: np.ndarray) -> float:
    """Minkowski product of signature (-, +, +, ...)."""
    return float(-x[0] * y[0] + np.dot(x[1:], y[1:]))


def hdist(p: np.ndarray, q: np.ndarray) -> float:
    """Distance between hyperboloid points, accurate for nearby points."""
    d = p - q
    chord2 = max(0.0, mink(d, d))  # = 2 (cosh r - 1) = 4 sinh^2(r/2)
    return 2.0 * math.asinh(0.5 * math.sqrt(chord2))


def hyp_angle(opposite: float, b: float, c: float) -> float:
    """Angle of a hyperbolic triangle opposite ``opposite``, adjacent sides b, c.

    Half-angle form tan(A/2)^2 = sinh(s-b) sinh(s-c) / (sinh s sinh(s-a)).
    """
    a = opposite
    s = 0.5 * (a + b + c)
    num = math.sinh(s - b) * math.sinh(s - c)
    den = math.sinh(s) * math.sinh(s - a)
    return 2.0 * math.atan2(math.sqrt(max(num, 0.0)), math.sqrt(max(den, 0.0)))


def hyp_side(b: float, c: float, angle: float) -> float:
    """Side opposite ``angle`` between sides b and c (hyperbolic cosine rule).

    Written as sinh^2(a/2) = sinh^2((b-c)/2) + sinh b sinh c sin^2(A/2), which
    has no cancellation for short sides or small angles.
    """
    s2 = math.sinh(0.5 * (b - c)) ** 2 + math.sinh(b) * math.sinh(c) * math.sin(0.5 * angle) ** 2
    return 2.0 * math.asinh(math.sqrt(max(s2, 0.0)))


def sph_angle(opposite: float, b: float, c: float) -> float:
    """Angle of a spherical triangle opposite side ``opposite``."""
    a = opposite
    s = 0.5 * (a + b + c)
    num = math.sin(s - b) * math.sin(s - c)
    den = math.sin(s) * math.sin(s - a)
    return 2.0 * math.atan2(math.sqrt(max(num, 0.0)), math.sqrt(max(den, 0.0)))


def triangle_area(l1: float, l2: float, l3: float) -> float:
    """Area of the hyperbolic triangle with the given sides (angle defect)."""
    return math.pi - hyp_angle(l1, l2, l3) - hyp_angle(l2, l1, l3) - hyp_angle(l3, l1, l2)


def strict_triangle(l1: float, l2: float, l3: float, margin: float = 0.0) -> bool:
    return l1 + l2 > l3 + margin and l1 + l3 > l2 + margin and l2 + l3 > l1 + margin


def polar_point(r: float, theta: float) -> np.ndarray:
    """Hyperboloid point at distance r from the origin in direction theta."""
    sr = math.sinh(r)
    return np.array([math.cosh(r), sr * math.cos(theta), sr * math.sin(theta)])


def boost_to_origin(p: np.ndarray) -> np.ndarray:
    """Matrix of an orientation-preserving isometry sending ``p`` to the origin."""
    b0, b1, b2 = p
    k = 1.0 / (1.0 + b0)
    return np.array(
        [
            [b0, -b1, -b2],
            [-b1, 1.0 + b1 * b1 * k, b1 * b2 * k],
            [-b2, b1 * b2 * k, 1.0 + b2 * b2 * k],
        ]
    )


def lorentz_cross(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vector Minkowski-orthogonal to p and q (normal of the line through them)."""
    c = np.cross(p, q)
    c[0] = -c[0]
    return c


def place_triangle(l12: float, l13: float, lam1: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard chart: first vertex at the origin, second on the +x axis, third above."""
    return (
        np.array([1.0, 0.0, 0.0]),
        polar_point(l12, 0.0),
        polar_point(l13, lam1),
    )


def height_covector(points, heights, fn=math.sinh) -> np.ndarray:
    """Solve <X, P_i> = -fn(h_i) for X.

    For a prism, ``sinh h(p) = -<X, p>`` on the upper face (``fn = sinh``) and
    ``tanh H(q) = -<Y, q>`` on the lower face (``fn = tanh``).  X is timelike
    exactly when the two planes are ultraparallel.
    """
    P = np.array(points, float)
    J = P.copy()
    J[:, 0] = -J[:, 0]
    rhs = -np.array([fn(h) for h in heights])
    return np.linalg.solve(J, rhs)


# ---------------------------------------------------------------------------
# trapezoids


@dataclass(frozen=True)
class TrapezoidSolved:
    l12: float
    h1: float
    h2: float
    a12: float
    alpha12: float
    alpha21: float
    hperp: float
    foot1: float
    foot2: float
    gram: float
    ultraparallel: bool


def _check_positive(**values):
    for name, v in values.items():
        if not (v > DEGENERATE) or not math.isfinite(v):
            raise NonPositiveInput(f"{name} must be > {DEGENERATE}, got {v!r}", name=name, value=v)


def lower_length(l12: float, h1: float, h2: float) -> float:
    """Length of the projected edge, from cosh a cosh h1 cosh h2 = sinh h1 sinh h2 + cosh l."""
    # cosh a - 1 = (cosh l - cosh(h1 - h2)) / (cosh h1 cosh h2)
    num = 2.0 * math.sinh(0.5 * (l12 + h1 - h2)) * math.sinh(0.5 * (l12 - h1 + h2))
    if num <= 0.0:
        raise NoSuchTrapezoid(
            f"|h1 - h2| = {abs(h1 - h2)!r} is not below the upper length {l12!r}", l12=l12, h1=h1, h2=h2
        )
    s2 = num / (2.0 * math.cosh(h1) * math.cosh(h2))
    return 2.0 * math.asinh(math.sqrt(s2))


def solve_trapezoid(l12: float, h1: float, h2: float) -> TrapezoidSolved:
    _check_positive(l12=l12, h1=h1, h2=h2)
    a12 = lower_length(l12, h1, h2)
    sh1, sh2 = math.sinh(h1), math.sinh(h2)
    ch1, ch2 = math.cosh(h1), math.cosh(h2)
    sl, cl = math.sinh(l12), math.cosh(l12)
    sa = math.sinh(a12)
    alpha12 = math.atan2(sa * ch1 * ch2, cl * sh1 - sh2)
    alpha21 = math.atan2(sa * ch1 * ch2, cl * sh2 - sh1)
    # Gram determinant of the unit normals of the two lines, 1 - <n, m>^2.
    # It equals -sinh^2 of their distance when they are ultraparallel.
    shp2 = (4.0 * sh1 * sh2 * math.sinh(0.5 * l12) ** 2 - (sh1 - sh2) ** 2) / sl**2
    gram = -shp2
    ultra = gram < -GRAM_TOL
    if ultra:
        shp = math.sqrt(shp2)
        hperp = math.asinh(shp)
        foot1 = math.asinh((sh2 - sh1 * cl) / (sl * shp))
        foot2 = math.asinh((sh2 * cl - sh1) / (sl * shp))
    else:
        hperp, foot1, foot2 = 0.0, math.nan, math.nan
    return TrapezoidSolved(l12, h1, h2, a12, alpha12, alpha21, hperp, foot1, foot2, gram, ultra)


def right_trapezoid_h1(l12: float, h2: float) -> float:
    """Height over the acute corner of a trapezoid whose other upper angle is a right angle."""
    return math.asinh(math.cosh(l12) * math.sinh(h2))


# ---------------------------------------------------------------------------
# prisms


@dataclass(frozen=True)
class PrismSolved:
    """A prism over an upper triangle with vertices 1, 2, 3.

    ``alpha[i][j]`` is the angle at upper vertex i of the lateral trapezoid over
    edge ij (``alpha[i][i]`` is unused and zero).  ``phi[i][j]`` is the dihedral
    angle at the upper edge ij.  ``foot`` is the foot of the common
    perpendicular on the upper plane, as a hyperboloid point in the chart
    returned by :meth:`upper_chart`.
    """

    l12: float
    l13: float
    l23: float
    h1: float
    h2: float
    h3: float
    a12: float
    a13: float
    a23: float
    lam1: float
    lam2: float
    lam3: float
    alpha: tuple
    om1: float
    om2: float
    om3: float
    phi12: float
    phi13: float
    phi23: float
    hperp: float
    foot: np.ndarray = field(repr=False)
    covector: np.ndarray = field(repr=False)
    lower_covector: np.ndarray = field(repr=False)
    ultraparallel: bool = True
    bad_faces: tuple = ()

    # convenient indexed views ------------------------------------------------
    @property
    def heights(self) -> tuple[float, float, float]:
        return (self.h1, self.h2, self.h3)

    @property
    def lam(self) -> tuple[float, float, float]:
        return (self.lam1, self.lam2, self.lam3)

    @property
    def om(self) -> tuple[float, float, float]:
        return (self.om1, self.om2, self.om3)

    def upper(self, i: int, j: int) -> float:
        return _pair(i, j, self.l12, self.l13, self.l23)

    def lower(self, i: int, j: int) -> float:
        return _pair(i, j, self.a12, self.a13, self.a23)

    def phi(self, i: int, j: int) -> float:
        return _pair(i, j, self.phi12, self.phi13, self.phi23)

    def upper_chart(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return place_triangle(self.l12, self.l13, self.lam1)

    def lower_chart(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return place_triangle(self.a12, self.a13, self.om1)

    def vertex_slope(self, i: int) -> float:
        """Angle at upper vertex i between the downward vertical and the foot."""
        r = hdist(self.upper_chart()[i], self.foot)
        return math.atan2(1.0, math.sinh(r) * math.tanh(self.hperp))


def _pair(i, j, v12, v13, v23):
    key = (min(i, j), max(i, j))
    return {(0, 1): v12, (0, 2): v13, (1, 2): v23}[key]


def solve_prism(l12: float, l13: float, l23: float, h1: float, h2: float, h3: float) -> PrismSolved:
    _check_positive(l12=l12, l13=l13, l23=l23, h1=h1, h2=h2, h3=h3)
    if not strict_triangle(l12, l13, l23):
        raise DegenerateUpperTriangle(f"upper lengths ({l12}, {l13}, {l23}) violate the triangle inequality")
    L = [[0.0, l12, l13], [l12, 0.0, l23], [l13, l23, 0.0]]
    H = (h1, h2, h3)
    traps = {}
    bad = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        try:
            t = solve_trapezoid(L[i][j], H[i], H[j])
        except NoSuchTrapezoid as exc:
            raise PrismNonexistent(str(exc), face=(i, j)) from exc
        traps[(i, j)] = t
        if not t.ultraparallel:
            bad.append((i, j))
    alpha = [[0.0] * 3 for _ in range(3)]
    for (i, j), t in traps.items():
        alpha[i][j] = t.alpha12
        alpha[j][i] = t.alpha21
    lam = [hyp_angle(l23, l12, l13), hyp_angle(l13, l12, l23), hyp_angle(l12, l13, l23)]

    om = [0.0, 0.0, 0.0]
    phi_ends = {}
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        a_ij, a_ik = alpha[i][j], alpha[i][k]
        # spherical link at A_i: sides lam_i, a_ij, a_ik; the vertex opposite
        # lam_i is the downward vertical, the others are the upper edges.
        if not (lam[i] < a_ij + a_ik and a_ij < lam[i] + a_ik and a_ik < lam[i] + a_ij):
            raise PrismNonexistent(f"spherical link at vertex {i} is degenerate", vertex=i)
        om[i] = sph_angle(lam[i], a_ij, a_ik)
        phi_ends.setdefault((min(i, j), max(i, j)), []).append(sph_angle(a_ik, lam[i], a_ij))
        phi_ends.setdefault((min(i, k), max(i, k)), []).append(sph_angle(a_ij, lam[i], a_ik))
    phi = {key: 0.5 * (v[0] + v[1]) for key, v in phi_ends.items()}

    a12, a13, a23 = traps[(0, 1)].a12, traps[(0, 2)].a12, traps[(1, 2)].a12
    if not min(a12, a13, a23) > DEGENERATE:
        # tanh h rounds to 1 for large heights and the lower triangle collapses
        raise PrismNonexistent(f"lower triangle ({a12:.3e}, {a13:.3e}, {a23:.3e}) is numerically degenerate")
    X = height_covector(place_triangle(l12, l13, lam[0]), H, math.sinh)
    Y = height_covector(place_triangle(a12, a13, om[0]), H, math.tanh)
    xx = mink(X, X)
    plane_ultra = xx < -GRAM_TOL and X[0] > 0
    if plane_ultra:
        shp = math.sqrt(-xx)
        hperp = math.asinh(shp)
        foot = X / shp
    else:
        hperp = 0.0
        foot = np.full(3, np.nan)
    return PrismSolved(
        l12, l13, l23, h1, h2, h3, a12, a13, a23,
        lam[0], lam[1], lam[2],
        tuple(tuple(r) for r in alpha),
        om[0], om[1], om[2],
        phi[(0, 1)], phi[(0, 2)], phi[(1, 2)],
        hperp, foot, X, Y,
        ultraparallel=bool(plane_ultra and not bad),
        bad_faces=tuple(bad),
    )


def prism_volume(prism: PrismSolved, tol: float = 1e-10) -> float:
    """Volume of an ultraparallel prism.

    In Fermi coordinates over the lower plane the volume element is
    cosh^2(x) dx dA, so the volume is the integral over the lower triangle of
    (H + sinh H cosh H)/2 with tanh H(q) = tanh(hperp) cosh(dist(q, foot)).
    In polar coordinates about the lower foot, with u = cosh r, the radial
    integral is exact: d/du [u artanh(c u)] = H + sinh H cosh H.  What remains
    is an angular integral over the three signed sectors from the foot to the
    lower edges, done by adaptive quadrature.
    """
    if not prism.ultraparallel:
        raise PreconditionViolated("prism is not ultraparallel", bad_faces=prism.bad_faces)
    Y = prism.lower_covector
    c2 = -mink(Y, Y)
    if not (c2 > 0.0 and Y[0] > 0):
        raise PreconditionViolated("lower height covector is not timelike")
    c = math.sqrt(c2)
    hp = math.atanh(c)
    foot = Y / c
    T = boost_to_origin(foot)
    pts = [T @ p for p in prism.lower_chart()]
    theta = [math.atan2(p[2], p[1]) for p in pts]

    def sector(p, q, t0, t1):
        n = lorentz_cross(p, q)
        n = n / math.sqrt(mink(n, n))
        s0 = n[0]  # <n, origin> = -n0, so sinh(dist) = |n0|
        if abs(s0) < 1e-15:
            return 0.0, 0.0
        tp = math.tanh(math.asinh(abs(s0)))
        tdir = math.atan2(s0 * n[2], s0 * n[1])

        # Integrate along the edge: in the Klein chart about the foot the edge
        # is the line at distance tp, and x = tp tan(t - tdir) is the
        # coordinate along it, so tanh r = sqrt(tp^2 + x^2) and
        # dt = tp dx / (tp^2 + x^2).  This stays smooth when the foot is
        # close to the edge, where the angular integrand degenerates.
        def g(x):
            q = tp * tp + x * x
            cr = 1.0 / math.sqrt(1.0 - q)
            return 0.5 * (cr * math.atanh(c * cr) - hp) * tp / q

        dt = math.remainder(t1 - t0, 2.0 * math.pi)
        x0 = tp * math.tan(t0 - tdir)
        x1 = tp * math.tan(t0 + dt - tdir)
        val, err, *rest = integrate.quad(g, x0, x1, epsabs=tol / 3.0, epsrel=0.0, limit=200, full_output=1)
        if err > tol / 3.0:
            raise QuadratureDidNotConverge(f"sector error estimate {err:.3e} exceeds {tol / 3.0:.3e}")
        return val, err

    vol = 0.0
    for i in range(3):
        j = (i + 1) % 3
        v, _ = sector(pts[i], pts[j], theta[i], theta[j])
        vol += v
    return vol


# ---------------------------------------------------------------------------
# triangles from a base and two base angles


@dataclass(frozen=True)
class TriangleSolved:
    """Hyperbolic triangle with base ``a`` opposite ``alpha``; ``b`` opposite ``beta``."""

    a: float
    b: float
    c: float
    alpha: float
    beta: float
    gamma: float


def eta(delta: float) -> float:
    """Largest base-angle sum that forces an obtuse apex over a base of length delta."""
    return 2.0 * math.asin(1.0 / (math.sqrt(2.0) * math.cosh(0.5 * delta)))


def triangle_from_base_angles(a: float, beta: float, gamma: float) -> TriangleSolved:
    _check_positive(a=a, beta=beta, gamma=gamma)
    cos_alpha = -math.cos(beta) * math.cos(gamma) + math.sin(beta) * math.sin(gamma) * math.cosh(a)
    if not (-1.0 < cos_alpha < 1.0):
        raise NoSuchTriangle(f"apex cosine {cos_alpha!r} outside (-1, 1)", a=a, beta=beta, gamma=gamma)
    alpha = math.atan2(math.sqrt((1.0 - cos_alpha) * (1.0 + cos_alpha)), cos_alpha)
    ratio = math.sinh(a) / math.sin(alpha)
    b = math.asinh(ratio * math.sin(beta))
    c = math.asinh(ratio * math.sin(gamma))
    return TriangleSolved(a, b, c, alpha, beta, gamma)


def curvature_transfer_bound(tri: TriangleSolved) -> float:
    """Margin in pi - alpha < beta + gamma cosh a (positive when the bound holds)."""
    if not tri.alpha > 0.5 * math.pi:
        raise PreconditionViolated(f"apex angle {tri.alpha!r} is not obtuse")
    return tri.beta + tri.gamma * math.cosh(tri.a) - (math.pi - tri.alpha)

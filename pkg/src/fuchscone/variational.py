"""Gradient and Hessian of the discrete curvature in the heights, Newton
realization of convex polyhedral Fuchsian manifolds, and the constrained
height flow used to bound the drop of the functional.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .conemanifold import (
    FuchsianConeManifold,
    TOL_FLAT,
    canonicalize_convex,
    discrete_curvature,
)
from .errors import (
    ContinuationStalled,
    FlipBudgetExceeded,
    LineSearchFailed,
    MaxIterExceeded,
    NotStrictlyConvex,
    PrismNonexistent,
    UnflippableEdge,
)
from .surface import ConeMetric, vertex_angles

TRACE_VERSION = "fuchscone-trace v1"
_INFEASIBLE = (PrismNonexistent, UnflippableEdge, FlipBudgetExceeded)


def gradient(P: FuchsianConeManifold) -> np.ndarray:
    """dS/dh_v = kappa_v, in vertex order."""
    return np.array(P.kappa, dtype=float)


def hessian(P: FuchsianConeManifold) -> np.ndarray:
    """Matrix of d kappa_u / d h_v assembled prism by prism over strict edges.

    Inside a prism the particle angle at u depends on h through the trapezoid
    angle alpha_uw of each upper edge uw, with
    d omega_u / d alpha_uw = -cot(phi_uw) / sin(alpha_uw),
    d alpha_uw / d h_u = -coth(a_uw) / cosh(h_u) and
    d alpha_uw / d h_w = 1 / (cosh(h_u) sinh(a_uw)).
    Summing both prisms at an edge gives the factor cot phi+ + cot phi-,
    which vanishes on flat edges; those are skipped outright.
    """
    S = P.surface
    n = S.n_vertices
    H = np.zeros((n, n))
    strict = np.zeros(S.n_edges, dtype=bool)
    strict[list(P.strict_edges)] = True
    ch = np.cosh(P.heights)
    for he in range(S.n_halfedges):
        if not strict[S.edge_of[he]]:
            continue
        u, w = int(S.origin[he]), S.dest(he)
        a = P.he_lower[he]
        cot = 1.0 / math.tan(P.he_phi[he])
        sa, ca = math.sinh(a), math.cosh(a)
        cu = cot / math.sin(P.he_alpha[he]) / ch[u]
        cw = cot / math.sin(P.he_alpha_rev[he]) / ch[w]
        H[u, u] -= cu * ca / sa
        H[u, w] += cu / sa
        H[w, w] -= cw * ca / sa
        H[w, u] += cw / sa
    return H


def isolated_vertices(P: FuchsianConeManifold) -> list[int]:
    """Vertices with no strict edge; their rows of the Hessian vanish."""
    S = P.surface
    strict = set(P.strict_edges)
    return [v for v in range(S.n_vertices) if not any(int(S.edge_of[g]) in strict for g in S.outgoing[v])]


def _newton_direction(H: np.ndarray, g: np.ndarray, active: list[int], shift: float = 1e-12) -> np.ndarray:
    """Solve (-H) d = g on the active index set (dense symmetric solve)."""
    d = np.zeros_like(g)
    if not active:
        return d
    A = -H[np.ix_(active, active)]
    A = 0.5 * (A + A.T)
    rhs = g[active]
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        L = np.linalg.cholesky(A + shift * max(1.0, np.abs(A).max()) * np.eye(len(active)))
    y = np.linalg.solve(L, rhs)
    d[active] = np.linalg.solve(L.T, y)
    return d


# ---------------------------------------------------------------------------
# realization


@dataclass
class RealizeOptions:
    tol: float = 1e-10
    max_iter: int = 200
    h0: float | None = None
    vol_tol: float = 1e-10
    max_flips: int = 2000
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_halvings: int = 40
    max_step: float = 1.0


@dataclass
class RealizeResult:
    manifold: FuchsianConeManifold
    iterations: int
    trace: list = field(default_factory=list)

    @property
    def max_kappa(self) -> float:
        return float(np.abs(self.manifold.kappa).max())


def realize(metric: ConeMetric, opts: RealizeOptions | None = None) -> RealizeResult:
    """Maximize the discrete curvature over heights by damped Newton ascent.

    Every trial point is re-charted by the flip algorithm; a trial is rejected
    as infeasible when no convex manifold with those heights is found.  A step
    is accepted when it satisfies the Armijo condition on S, or when it
    lowers max |kappa| (S is only known to quadrature accuracy, which hides
    the Armijo decrease once |kappa| is small).
    """
    opts = opts or RealizeOptions()
    S = metric.surface
    _, nu = vertex_angles(metric)
    bad = [v for v in metric.marked if not nu[v] > TOL_FLAT]
    if bad:
        raise NotStrictlyConvex(f"vertices {bad} are not strictly convex (curvature <= 0)", vertices=bad)
    if S.genus < 2:
        raise NotStrictlyConvex("genus must be at least 2")
    h0 = opts.h0 if opts.h0 is not None else 0.1 * float(metric.lengths.min())
    h = np.full(S.n_vertices, h0)
    cache: dict = {}
    P = canonicalize_convex(metric, h, max_flips=opts.max_flips, cache=cache)
    Sval = discrete_curvature(P, opts.vol_tol)
    noise = 4.0 * S.n_faces * opts.vol_tol
    trace = [(0, float(np.abs(P.kappa).max()), Sval, 0.0)]
    for it in range(1, opts.max_iter + 1):
        g = gradient(P)
        kmax = float(np.abs(g).max())
        if kmax <= opts.tol:
            return RealizeResult(P, it - 1, trace)
        H = hessian(P)
        iso = set(isolated_vertices(P))
        active = [v for v in range(S.n_vertices) if v not in iso]
        d = _newton_direction(H, g, active)
        for v in iso:  # kappa_v = nu_v > 0 here: plain ascent
            d[v] = g[v]
        # near h = 0 the Hessian is tiny and the Newton step would leave the
        # range where prism volumes are computable in double precision
        dmax = float(np.abs(d).max())
        if dmax > opts.max_step:
            d *= opts.max_step / dmax
        slope = float(g @ d)
        step = 1.0
        for _ in range(opts.max_halvings):
            trial = P.heights + step * d
            if np.all(trial > 0):
                try:
                    Q = canonicalize_convex(P.metric, trial, max_flips=opts.max_flips, cache=cache)
                except _INFEASIBLE:
                    Q = None
                if Q is not None:
                    Sq = discrete_curvature(Q, opts.vol_tol)
                    armijo = Sq >= Sval + opts.armijo * step * slope - noise
                    if armijo or float(np.abs(Q.kappa).max()) < kmax:
                        P, Sval = Q, Sq
                        trace.append((it, float(np.abs(P.kappa).max()), Sval, step))
                        break
            step *= opts.backtrack
        else:
            raise LineSearchFailed(
                f"no admissible step at iteration {it}", heights=P.heights.tolist(), kappa=g.tolist()
            )
    if float(np.abs(P.kappa).max()) <= opts.tol:
        return RealizeResult(P, opts.max_iter, trace)
    raise MaxIterExceeded(f"max |kappa| = {np.abs(P.kappa).max():.3e} after {opts.max_iter} iterations")


def write_trace(rows, header, stream) -> None:
    """CSV with a versioned comment line and a fixed column order."""
    stream.write(f"# {TRACE_VERSION}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


# ---------------------------------------------------------------------------
# constrained flow


@dataclass
class FlowState:
    t: float
    heights: np.ndarray
    kappa_w: np.ndarray
    S: float
    max_free_kappa: float
    kink: bool = False


@dataclass
class FlowConstants:
    nu: float
    m: float
    M: float
    tau: float


def flow_constants(P0: FuchsianConeManifold, W, tau: float) -> FlowConstants:
    W = list(W)
    h0 = P0.heights[W]
    nu = float(P0.nu[W].sum())
    m = float(np.tanh(h0).min())
    M = float(np.max(np.cosh(np.arcsinh(math.exp(tau) * np.sinh(h0))) ** 2))
    return FlowConstants(nu, m, M, tau)


def _corrector(metric, h, free, tol, max_iter, max_flips, cache):
    """Newton on kappa_free = 0 with the other heights fixed."""
    P = canonicalize_convex(metric, h, max_flips=max_flips, cache=cache)
    for _ in range(max_iter):
        g = P.kappa
        err = float(np.abs(g[free]).max()) if free else 0.0
        if err <= tol:
            return P
        H = hessian(P)
        d = np.zeros_like(g)
        d[free] = _newton_direction(H[np.ix_(free, free)], g[free], list(range(len(free))))
        step = 1.0
        for _ in range(30):
            trial = P.heights + step * d
            try:
                if np.all(trial > 0):
                    Q = canonicalize_convex(P.metric, trial, max_flips=max_flips, cache=cache)
                    if float(np.abs(Q.kappa[free]).max()) < err:
                        P = Q
                        break
            except _INFEASIBLE:
                pass
            step *= 0.5
        else:
            return None
    return P if (not free or float(np.abs(P.kappa[free]).max()) <= tol) else None


def constrained_flow(
    P0: FuchsianConeManifold,
    W,
    tau: float,
    n_steps: int = 20,
    tol: float = 1e-10,
    vol_tol: float = 1e-10,
    max_flips: int = 2000,
    max_bisections: int = 12,
    kink_threshold: float = 1e-9,
) -> list[FlowState]:
    """Track the maximizer of S when the heights of W are pushed up.

    Along the path sinh h_w(t) = e^t sinh h_w(0) for w in W while every other
    vertex keeps kappa_v = 0.  Predictor: the tangent from H_FF dh_F = -H_FW dh_W
    with dh_w/dt = tanh h_w.  Corrector: Newton on the free block.  A failed
    corrector halves the step.
    """
    W = sorted(int(w) for w in W)
    n = P0.surface.n_vertices
    free = [v for v in range(n) if v not in W]
    if free and float(np.abs(P0.kappa[free]).max()) > max(tol, 1e-8):
        raise ContinuationStalled("initial manifold is not critical on the free vertices")
    sinh0 = np.sinh(P0.heights[W])
    cache: dict = {}

    def state(P, t):
        kw = P.kappa[W].copy()
        mf = float(np.abs(P.kappa[free]).max()) if free else 0.0
        kink = bool(t > 0 and np.any(np.abs(kw) < kink_threshold))
        return FlowState(t, P.heights.copy(), kw, discrete_curvature(P, vol_tol), mf, kink)

    states = [state(P0, 0.0)]
    P, t = P0, 0.0
    dt_nominal = tau / n_steps
    targets = [tau * (k + 1) / n_steps for k in range(n_steps)]
    for target in targets:
        while t < target - 1e-15:
            dt = min(dt_nominal, target - t)
            ok = False
            for _ in range(max_bisections):
                t_new = t + dt
                h = P.heights.copy()
                hw_dot = np.tanh(P.heights[W])
                if free:
                    H = hessian(P)
                    rhs = H[np.ix_(free, W)] @ hw_dot
                    hf_dot = _newton_direction(H[np.ix_(free, free)], rhs, list(range(len(free))))
                    h[free] += dt * hf_dot
                h[W] = np.arcsinh(math.exp(t_new) * sinh0)
                try:
                    Q = _corrector(P.metric, h, free, tol, 30, max_flips, cache)
                except _INFEASIBLE:
                    Q = None
                if Q is not None:
                    P, t, ok = Q, t_new, True
                    break
                dt *= 0.5
            if not ok:
                raise ContinuationStalled(f"corrector failed near t = {t:.6f}")
        states.append(state(P, t))
    return states


@dataclass
class GapReport:
    gap: float
    bound: float
    bound_as_stated: float
    integral: float
    constants: FlowConstants
    states: list

    @property
    def ok(self) -> bool:
        return self.gap >= self.bound

    @property
    def ok_as_stated(self) -> bool:
        return self.gap >= self.bound_as_stated


def gap_bound(c: FlowConstants) -> float:
    """nu m int_0^tau (e^{t/M} - 1) dt = nu m (M (e^{tau/M} - 1) - tau)."""
    return c.nu * c.m * (c.M * math.expm1(c.tau / c.M) - c.tau)


def gap_bound_as_stated(c: FlowConstants) -> float:
    """The uncorrected closed form nu m (M e^{tau/M} - tau), kept for comparison."""
    return c.nu * c.m * (c.M * math.exp(c.tau / c.M) - c.tau)


def flow_gap(P0: FuchsianConeManifold, W, tau: float, n_steps: int = 20, **kw) -> GapReport:
    states = constrained_flow(P0, W, tau, n_steps, **kw)
    c = flow_constants(P0, W, tau)
    W = sorted(int(w) for w in W)
    rate = [-float(np.dot(s.kappa_w, np.tanh(s.heights[W]))) for s in states]
    ts = [s.t for s in states]
    integral = float(np.trapezoid(rate, ts)) if hasattr(np, "trapezoid") else float(np.trapz(rate, ts))
    gap = states[0].S - states[-1].S
    return GapReport(gap, gap_bound(c), gap_bound_as_stated(c), integral, c, states)


def flow_trace_csv(states, W) -> str:
    W = sorted(int(w) for w in W)
    n = len(states[0].heights)
    header = ["t", "S"] + [f"kappa_{w}" for w in W] + [f"h_{v}" for v in range(n)]
    rows = [[s.t, s.S, *s.kappa_w.tolist(), *s.heights.tolist()] for s in states]
    buf = io.StringIO()
    write_trace(rows, header, buf)
    return buf.getvalue()

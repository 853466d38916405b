import math

import numpy as np
import pytest

from fuchscone.conemanifold import (
    FlipLog,
    assemble,
    canonicalize_convex,
    discrete_curvature,
    edge_convexity_margin,
    height_scaling,
    link_area_inequality,
    slope_bound,
    slope_report,
    spherical_link,
)
from fuchscone.errors import PreconditionViolated, PrismNonexistent, UnflippableConcaveQuad, UnflippableLoopConfiguration
from fuchscone.fixtures import canonical, perturbed_manifold, refined
from fuchscone.surface import ConeMetric, equilateral_length, flip
from fuchscone.variational import realize

import oracles

# canonical genus-2 metric (alpha = pi/10) with unit height, from the hyperboloid oracle
KAPPA_CANONICAL_H1 = -1.944475539776736


@pytest.fixture(scope="module")
def realized():
    return realize(refined(2, count=6)).manifold


def random_chart(metric: ConeMetric, heights, rng: np.random.Generator, n_flips: int = 12) -> ConeMetric:
    """Same metric, different triangulation compatible with ``heights``.

    Random flips are kept only when every face still carries a prism.
    """
    m = metric
    done = 0
    for _ in range(20 * n_flips):
        if done == n_flips:
            break
        e = int(rng.integers(m.surface.n_edges))
        try:
            trial = flip(m, e)
            assemble(trial, heights)
        except (UnflippableConcaveQuad, UnflippableLoopConfiguration, PrismNonexistent):
            continue
        m = trial
        done += 1
    return m


class TestAssemble:
    def test_small_heights_recover_cone_curvature(self):
        P = assemble(canonical(), [1e-3])
        assert P.kappa[0] == pytest.approx(P.nu[0], abs=1e-5)
        assert P.kappa[0] < P.nu[0]

    def test_unit_height_matches_oracle(self):
        P = assemble(canonical(), [1.0])
        assert P.kappa[0] == pytest.approx(KAPPA_CANONICAL_H1, abs=1e-10)
        l = equilateral_length(math.pi / 10)
        om = oracles.prism_oracle(l, l, l, 1.0, 1.0, 1.0)["om"]
        # 6 equilateral faces, each contributing 3 corners at the single vertex
        assert P.kappa[0] == pytest.approx(2 * math.pi - 6 * sum(om), abs=1e-10)

    def test_canonical_is_convex_with_all_edges_strict(self):
        P = assemble(canonical(), [1.0])
        assert P.convex and P.ultraparallel
        assert P.strict_edges == tuple(range(9))

    def test_dihedral_sum_per_edge(self, realized):
        S = realized.surface
        for e in range(S.n_edges):
            h = int(S.edge_halfedge[e])
            assert realized.phi[e] == pytest.approx(realized.he_phi[h] + realized.he_phi[S.twin[h]], abs=1e-15)

    def test_wrong_height_count(self):
        with pytest.raises(PreconditionViolated):
            assemble(canonical(), [1.0, 1.0])

    def test_unmarked_vertex_rejected(self):
        m = refined(0, count=2)
        with pytest.raises(PreconditionViolated):
            assemble(ConeMetric(m.surface, m.lengths, (0,)), np.ones(3))

    def test_require_convex(self, realized):
        # raising the cone point above its realized height makes its edges concave
        h = realized.heights.copy()
        h[0] *= 1.1
        assert assemble(realized.metric, h).concave_edges
        with pytest.raises(PreconditionViolated):
            assemble(realized.metric, h, require_convex=True)


class TestFirstVariation:
    @pytest.mark.parametrize("seed", range(5))
    def test_height_derivative_is_curvature(self, realized, seed):
        P = perturbed_manifold(realized.metric, realized.heights, np.random.default_rng(seed))
        eps = 1e-4
        for v in range(P.surface.n_vertices):
            hp, hm = P.heights.copy(), P.heights.copy()
            hp[v] += eps
            hm[v] -= eps
            Sp = discrete_curvature(assemble(P.metric, hp), 1e-12)
            Sm = discrete_curvature(assemble(P.metric, hm), 1e-12)
            assert (Sp - Sm) / (2 * eps) == pytest.approx(P.kappa[v], abs=1e-6)

    @pytest.mark.parametrize("seed", range(3))
    def test_length_derivative_is_exterior_angle(self, realized, seed):
        P = perturbed_manifold(realized.metric, realized.heights, np.random.default_rng(seed))
        eps = 1e-4
        for e in range(P.surface.n_edges):
            Lp, Lm = P.metric.lengths.copy(), P.metric.lengths.copy()
            Lp[e] += eps
            Lm[e] -= eps
            Sp = discrete_curvature(assemble(P.metric.with_lengths(Lp), P.heights), 1e-12)
            Sm = discrete_curvature(assemble(P.metric.with_lengths(Lm), P.heights), 1e-12)
            assert (Sp - Sm) / (2 * eps) == pytest.approx(P.theta[e], abs=1e-6)


class TestFlipAlgorithm:
    def test_charts_agree(self, realized):
        rng = np.random.default_rng(7)
        ref = canonicalize_convex(realized.metric, realized.heights)
        sig = ref.strict_edge_signature()
        S_ref = discrete_curvature(ref, 1e-12)
        for _ in range(10):
            start = random_chart(realized.metric, realized.heights, rng)
            P = canonicalize_convex(start, realized.heights)
            assert P.convex
            assert P.strict_edge_signature() == sig
            assert discrete_curvature(P, 1e-12) == pytest.approx(S_ref, abs=1e-9)

    def test_extended_height_never_decreases(self, realized):
        rng = np.random.default_rng(3)
        for _ in range(5):
            log = FlipLog()
            canonicalize_convex(random_chart(realized.metric, realized.heights, rng), realized.heights, log=log, check_heights=True)
            assert len(log.height_gains) == len(log.flips)
            assert all(g >= -1e-12 for g in log.height_gains)

    def test_convex_edges_have_nonnegative_margin(self, realized):
        for e in range(realized.surface.n_edges):
            assert edge_convexity_margin(realized, e) >= -1e-12

    def test_convex_input_needs_no_flips(self, realized):
        log = FlipLog()
        P = canonicalize_convex(realized.metric, realized.heights, log=log)
        assert log.flips == []
        assert P.metric.surface.signature() == realized.metric.surface.signature()


class TestHeightScaling:
    def test_zero_is_identity(self, realized):
        P = height_scaling(realized, 0.0)
        assert np.allclose(P.heights, realized.heights, atol=1e-15)

    def test_raises_every_height(self, realized):
        P = height_scaling(realized, 0.1)
        assert np.allclose(np.sinh(P.heights), math.exp(0.1) * np.sinh(realized.heights), rtol=1e-13)
        assert np.all(P.heights > realized.heights)


class TestSlopesAndLinks:
    def test_slope_bound_formula(self):
        assert slope_bound(0.0) == pytest.approx(math.atan(0.5), abs=1e-15)
        assert slope_bound(2.0) < slope_bound(1.0)

    def test_realized_report_clean(self, realized):
        rep = slope_report(realized)
        assert rep.ok, rep.violations

    @pytest.mark.parametrize("seed", range(4))
    def test_perturbed_report_clean(self, realized, seed):
        P = perturbed_manifold(realized.metric, realized.heights, np.random.default_rng(seed))
        assert slope_report(P).ok

    def test_link_inequality_at_every_vertex(self, realized):
        for v in range(realized.surface.n_vertices):
            link = spherical_link(realized, v)
            lhs, rhs = link_area_inequality(link)
            assert rhs > 0
            assert lhs >= rhs

    def test_link_rejects_positive_curvature(self):
        P = assemble(canonical(), [1e-3])
        with pytest.raises(PreconditionViolated):
            link_area_inequality(spherical_link(P, 0))

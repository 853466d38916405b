import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuchscone.errors import NotConvex, UnflippableConcaveQuad
from fuchscone.fixtures import refined
from fuchscone.surface import (
    ConeMetric,
    build_canonical,
    build_surface,
    canonical_surface,
    check_metric,
    diameter_upper_bound,
    equilateral_length,
    flip,
    flip_length,
    quad_of,
    refine,
    refine_many,
    scale,
    vertex_angles,
)

import oracles

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def canonical():
    return build_canonical(2, math.pi / 10)


class TestCombinatorics:
    @pytest.mark.parametrize("g", [1, 2, 3, 4])
    def test_canonical_counts(self, g):
        S = canonical_surface(g)
        assert S.check() == []
        assert S.n_vertices == 1
        assert S.n_faces == 4 * g - 2
        assert S.n_edges == 6 * g - 3
        assert S.genus == g

    def test_outgoing_is_a_full_rotation(self):
        S = canonical_surface(2)
        assert sorted(S.outgoing[0]) == list(range(S.n_halfedges))

    def test_broken_twin_detected(self):
        S = canonical_surface(2)
        twin = S.twin.copy()
        twin[0], twin[1] = twin[1], twin[0]
        bad = build_surface(twin, S.nxt, S.origin)
        assert bad.check()

    def test_refined_surface_valid(self):
        m = refined(3, count=10)
        assert m.surface.check() == []
        assert m.surface.n_vertices == 11
        assert m.surface.genus == 2


class TestCanonicalMetric:
    def test_counts_and_gauss_bonnet(self, canonical):
        S = canonical.surface
        assert (S.n_faces, S.n_edges, S.n_vertices) == (6, 9, 1)
        lam, nu = vertex_angles(canonical)
        assert lam[0] == pytest.approx(1.8 * math.pi, abs=1e-12)
        assert canonical.area() == pytest.approx(4.2 * math.pi, abs=1e-12)
        assert nu[0] - canonical.area() == pytest.approx(-4 * math.pi, abs=1e-12)

    def test_side_length(self, canonical):
        c = math.cos(math.pi / 10)
        assert canonical.lengths[0] == pytest.approx(math.acosh(c / (1 - c)), abs=1e-14)
        # oracle: place an equilateral triangle with this side and measure its angle
        l = equilateral_length(math.pi / 10)
        A, B, C = oracles.place_triangle(l, l, l)
        ang = oracles.angle_between(oracles.tangent(A, B), oracles.tangent(A, C))
        assert ang == pytest.approx(math.pi / 10, abs=1e-10)

    def test_boundary_case_two_pi(self):
        m = build_canonical(2, math.pi / 9)
        lam, _ = vertex_angles(m)
        assert lam[0] == pytest.approx(TWO_PI, abs=1e-12)
        assert check_metric(m) == []
        with pytest.raises(NotConvex):
            build_canonical(2, math.pi / 9, strict=True)

    def test_too_large_angle_rejected(self):
        with pytest.raises(NotConvex):
            build_canonical(2, math.pi / 8.5)


class TestChecks:
    def test_halved_length_names_face(self):
        # edge 9 of this fixture borders two thin faces; halving it breaks both
        m = refined(0, count=6)
        L = m.lengths.copy()
        L[9] *= 0.5
        errs = check_metric(m.with_lengths(L))
        assert errs == [
            "face 3 violates the strict triangle inequality",
            "face 4 violates the strict triangle inequality",
        ]

    def test_halving_equilateral_side_keeps_inequality(self, canonical):
        L = canonical.lengths.copy()
        L[0] *= 0.5
        errs = check_metric(canonical.with_lengths(L))
        assert errs and all("face" not in e for e in errs)

    def test_gauss_bonnet_on_refined(self):
        for seed in range(5):
            m = refined(seed, count=8)
            assert abs(m.gauss_bonnet_residual()) < 1e-10

    def test_unmarked_cone_vertex_flagged(self):
        m = refined(1, count=2)
        unmarked = ConeMetric(m.surface, m.lengths, (0,))
        assert any("unmarked" in e for e in check_metric(unmarked))


class TestFlip:
    def test_flip_twice_restores(self, canonical):
        for e in range(canonical.surface.n_edges):
            try:
                once = flip(canonical, e)
            except UnflippableConcaveQuad:
                continue
            twice = flip(once, e)
            assert twice.surface.signature() == canonical.surface.signature()
            assert twice.lengths[e] == pytest.approx(canonical.lengths[e], abs=1e-12)

    def test_flip_preserves_angles(self):
        m = refined(4, count=6)
        lam0, _ = vertex_angles(m)
        flipped = 0
        for e in range(m.surface.n_edges):
            try:
                m2 = flip(m, e)
            except UnflippableConcaveQuad:
                continue
            flipped += 1
            lam, _ = vertex_angles(m2)
            assert np.allclose(lam, lam0, atol=1e-10)
            assert m2.area() == pytest.approx(m.area(), abs=1e-10)
        assert flipped > 5

    def test_diagonal_matches_development_oracle(self):
        m = refined(2, count=4)
        checked = 0
        for e in range(m.surface.n_edges):
            try:
                new = flip_length(m, e)
            except UnflippableConcaveQuad:
                continue
            q = quad_of(m, e)
            L = m.length
            A, B, C = oracles.place_triangle(L(q.h), L(q.h2), L(q.h1))
            _, _, D = oracles.place_triangle(L(q.h), L(q.t1), L(q.t2))
            D = D * np.array([1.0, 1.0, -1.0])
            assert new == pytest.approx(oracles.dist(C, D), abs=1e-10)
            checked += 1
        assert checked > 5

    def test_concave_quad_rejected(self, canonical):
        # at a degree-3 flat vertex two adjacent corners add up to more than pi
        m = refine(canonical, 0)
        S = m.surface
        w = S.n_vertices - 1
        spokes = {int(S.edge_of[h]) for h in S.outgoing[w]}
        assert len(spokes) == 3
        for e in spokes:
            with pytest.raises(UnflippableConcaveQuad):
                flip(m, e)


class TestScaleRefine:
    def test_identity_scale(self, canonical):
        assert np.array_equal(scale(canonical, 1.0).lengths, canonical.lengths)

    def test_scaling_decreases_angles(self):
        for m in (build_canonical(2, math.pi / 10), refined(6, count=5, stretch=1.0)):
            lam0, _ = vertex_angles(m)
            for t in (1.2, 1.5):
                lam, _ = vertex_angles(scale(m, t))
                assert np.all(lam < lam0)
                assert scale(m, t).area() > m.area()

    def test_refine_inserts_flat_vertex(self, canonical):
        m = refine(canonical, 2)
        lam, nu = vertex_angles(m)
        assert nu[-1] == pytest.approx(0.0, abs=1e-12)
        assert nu[0] == pytest.approx(vertex_angles(canonical)[1][0], abs=1e-12)
        assert m.area() == pytest.approx(canonical.area(), abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000), count=st.integers(1, 12))
    def test_refinement_keeps_metric_valid(self, seed, count):
        m = refine_many(build_canonical(2, math.pi / 10), count, np.random.default_rng(seed))
        assert check_metric(m) == []


class TestDiameter:
    def test_canonical_positive(self, canonical):
        d = diameter_upper_bound(canonical)
        assert 0 < d < math.inf
        assert d >= canonical.lengths.max()

    def test_refinement_growth_bounded(self, canonical):
        base = diameter_upper_bound(canonical)
        m = refine(canonical, 0)
        assert diameter_upper_bound(m) <= base + 2 * canonical.lengths.max()

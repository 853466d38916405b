import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuchscone.errors import NonPositiveInput, NoSuchTrapezoid, NoSuchTriangle, DegenerateUpperTriangle
from fuchscone.hyptrig import (
    curvature_transfer_bound,
    eta,
    hyp_angle,
    hyp_side,
    prism_volume,
    right_trapezoid_h1,
    solve_prism,
    solve_trapezoid,
    triangle_area,
    triangle_from_base_angles,
)

import oracles

# frozen oracle values (hyperboloid-model embedding, tests/oracles.py)
EQUILATERAL_L1_H1_OMEGA = 0.9870148588644655
EQUILATERAL_L1_H1_PHI = 1.3836982227662875
EQUILATERAL_L1_H1_VOLUME_MC = (0.21893054454901248, 0.00021683736618362143)
SCALENE_VOLUME_MC = (0.162313113713052, 0.00015466683071317913)


def random_trapezoids(n, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        l = rng.uniform(0.05, 3.0)
        h1, h2 = rng.uniform(0.01, 2.5, 2)
        if abs(h1 - h2) < 0.95 * l:
            out.append((l, h1, h2))
    return out


def random_prisms(n, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        l = rng.uniform(0.2, 2.5, 3)
        h = rng.uniform(0.05, 1.5, 3)
        if l[0] + l[1] > l[2] * 1.05 and l[0] + l[2] > l[1] * 1.05 and l[1] + l[2] > l[0] * 1.05:
            try:
                p = solve_prism(l[0], l[1], l[2], *h)
            except Exception:
                continue
            if p.ultraparallel:
                out.append((tuple(l), tuple(h)))
    return out


class TestTrapezoid:
    def test_symmetric_heights_give_equal_angles(self):
        t = solve_trapezoid(1.0, 0.7, 0.7)
        assert t.alpha12 == pytest.approx(t.alpha21, abs=1e-15)

    def test_zero_height_limit(self):
        t = solve_trapezoid(1.3, 1e-9, 1e-9)
        assert t.a12 == pytest.approx(1.3, abs=1e-8)

    def test_right_angle_identity(self):
        h1 = right_trapezoid_h1(1.0, 0.5)
        assert h1 == pytest.approx(math.asinh(math.cosh(1.0) * math.sinh(0.5)), abs=1e-15)
        t = solve_trapezoid(1.0, h1, 0.5)
        assert t.alpha21 == pytest.approx(math.pi / 2, abs=1e-12)

    @pytest.mark.parametrize("l,h1,h2", random_trapezoids(200, seed=11))
    def test_matches_hyperboloid_oracle(self, l, h1, h2):
        t = solve_trapezoid(l, h1, h2)
        o = oracles.trapezoid_oracle(l, h1, h2)
        assert t.a12 == pytest.approx(o["a12"], abs=1e-10)
        assert t.alpha12 == pytest.approx(o["alpha12"], abs=1e-10)
        assert t.alpha21 == pytest.approx(o["alpha21"], abs=1e-10)
        if t.ultraparallel:
            assert t.hperp == pytest.approx(o["hperp"], abs=1e-9)

    def test_heights_too_different(self):
        with pytest.raises(NoSuchTrapezoid):
            solve_trapezoid(0.5, 1.0, 0.2)

    def test_nonpositive(self):
        with pytest.raises(NonPositiveInput):
            solve_trapezoid(1.0, 0.0, 0.3)
        with pytest.raises(NonPositiveInput):
            solve_trapezoid(-1.0, 0.4, 0.3)

    def test_gram_sign_tracks_ultraparallel(self):
        for l, h1, h2 in random_trapezoids(100, seed=3):
            t = solve_trapezoid(l, h1, h2)
            assert t.ultraparallel == (t.gram < -1e-10)
            if t.ultraparallel:
                assert -t.gram == pytest.approx(math.sinh(t.hperp) ** 2, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(
    b=st.floats(0.01, 4.0),
    c=st.floats(0.01, 4.0),
    angle=st.floats(0.01, math.pi - 0.01),
)
def test_cosine_law_round_trip(b, c, angle):
    a = hyp_side(b, c, angle)
    assert hyp_angle(a, b, c) == pytest.approx(angle, abs=1e-10)
    # sine law
    B = hyp_angle(b, a, c)
    assert math.sin(angle) / math.sinh(a) == pytest.approx(math.sin(B) / math.sinh(b), rel=1e-8)


class TestPrism:
    def test_equilateral_symmetry(self):
        p = solve_prism(1, 1, 1, 0.8, 0.8, 0.8)
        assert p.om1 == pytest.approx(p.om2, abs=1e-14) == pytest.approx(p.om3, abs=1e-14)
        assert p.phi12 == pytest.approx(p.phi13, abs=1e-14) == pytest.approx(p.phi23, abs=1e-14)

    def test_equilateral_frozen_oracle(self):
        p = solve_prism(1, 1, 1, 1, 1, 1)
        assert p.om1 == pytest.approx(EQUILATERAL_L1_H1_OMEGA, abs=1e-10)
        assert p.phi12 == pytest.approx(EQUILATERAL_L1_H1_PHI, abs=1e-10)

    @pytest.mark.parametrize("l,h", random_prisms(40, seed=5))
    def test_angles_match_oracle(self, l, h):
        p = solve_prism(*l, *h)
        o = oracles.prism_oracle(*l, *h)
        assert np.allclose(p.om, o["om"], atol=1e-10)
        assert p.phi12 == pytest.approx(o["phi12"], abs=1e-10)
        assert p.phi13 == pytest.approx(o["phi13"], abs=1e-10)
        assert p.phi23 == pytest.approx(o["phi23"], abs=1e-10)
        assert np.allclose((p.a12, p.a13, p.a23), o["a"], atol=1e-10)

    @pytest.mark.parametrize("l,h", random_prisms(30, seed=6))
    def test_gauss_bonnet_of_upper_triangle(self, l, h):
        p = solve_prism(*l, *h)
        assert sum(p.lam) == pytest.approx(math.pi - triangle_area(*l), abs=1e-12)

    def test_degenerate_upper_triangle(self):
        with pytest.raises(DegenerateUpperTriangle):
            solve_prism(1.0, 1.0, 2.0, 0.5, 0.5, 0.5)

    def test_volume_positive_and_monte_carlo(self):
        p = solve_prism(1, 1, 1, 1, 1, 1)
        v = prism_volume(p)
        mean, err = EQUILATERAL_L1_H1_VOLUME_MC
        assert v > 0
        assert abs(v - mean) < 5 * err

    def test_scalene_volume_monte_carlo(self):
        p = solve_prism(0.9, 1.1, 1.3, 0.4, 0.7, 0.5)
        mean, err = SCALENE_VOLUME_MC
        assert abs(prism_volume(p) - mean) < 5 * err

    @pytest.mark.parametrize("l,h", random_prisms(10, seed=9))
    def test_schlaefli_in_heights(self, l, h):
        eps = 1e-4
        base = solve_prism(*l, *h)
        for i in range(3):
            hp, hm = list(h), list(h)
            hp[i] += eps
            hm[i] -= eps
            P, M = solve_prism(*l, *hp), solve_prism(*l, *hm)
            dvol = (prism_volume(P, 1e-12) - prism_volume(M, 1e-12)) / (2 * eps)
            # -2 dV = sum h_j d(omega_j) + sum l_jk d(phi_jk)
            rhs = sum(hj * (a - b) for hj, a, b in zip(h, P.om, M.om)) / (2 * eps)
            rhs += (l[0] * (P.phi12 - M.phi12) + l[1] * (P.phi13 - M.phi13) + l[2] * (P.phi23 - M.phi23)) / (2 * eps)
            assert -2 * dvol == pytest.approx(rhs, abs=1e-6)
        assert base.ultraparallel

    def test_volume_near_degenerate_foot(self):
        # the foot of the common perpendicular lies almost on an edge
        p = solve_prism(1.0795226255546821, 1.2585884040604127, 0.29444020522643755,
                        0.3391654007170874, 0.3286352418982971, 0.3566558227830602)
        assert p.ultraparallel
        assert prism_volume(p, 1e-9) == pytest.approx(prism_volume(p, 1e-13), abs=1e-9)


class TestBaseAngleTriangle:
    def test_eta_limit(self):
        assert eta(1e-8) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_obtuse_apex(self):
        tri = triangle_from_base_angles(1.0, 0.1, 0.1)
        assert tri.alpha > math.pi / 2
        assert curvature_transfer_bound(tri) > 0

    def test_no_triangle(self):
        with pytest.raises(NoSuchTriangle):
            triangle_from_base_angles(1.0, math.pi / 2, math.pi / 2)

    def test_sides_consistent_with_cosine_law(self):
        tri = triangle_from_base_angles(0.7, 0.2, 0.35)
        assert hyp_angle(tri.b, tri.a, tri.c) == pytest.approx(tri.beta, abs=1e-12)
        assert hyp_angle(tri.c, tri.a, tri.b) == pytest.approx(tri.gamma, abs=1e-12)
        assert hyp_angle(tri.a, tri.b, tri.c) == pytest.approx(tri.alpha, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(delta=st.floats(0.05, 3.0), s=st.floats(0.02, 0.98), share=st.floats(0.05, 0.95), frac=st.floats(0.05, 1.0))
    def test_transfer_bound_positive(self, delta, s, share, frac):
        a = frac * delta
        total = s * 2 * eta(delta)
        tri = triangle_from_base_angles(a, share * total / 2, (1 - share) * total / 2)
        if tri.alpha > math.pi / 2:
            assert curvature_transfer_bound(tri) > 0

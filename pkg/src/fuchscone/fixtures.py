"""Reproducible test inputs: refined genus-2 metrics and small cone-triangles."""

from __future__ import annotations

import math

import numpy as np

from .conemanifold import canonicalize_convex
from .errors import FuchsconeError, PreconditionViolated
from .surface import ConeMetric, build_canonical, refine_many, scale
from .sweep import ConeTriangle, cone_triangle_from_points, interior_point, triangle_corners, with_curvatures


def canonical(alpha: float = math.pi / 10, genus: int = 2) -> ConeMetric:
    return build_canonical(genus, alpha)


def refined(seed: int, count: int = 6, alpha: float = math.pi / 10, stretch: float = 1.05) -> ConeMetric:
    """Canonical metric with ``count`` random face subdivisions, then scaled.

    Subdividing adds flat vertices; scaling all lengths by ``stretch`` > 1
    gives every vertex positive curvature, as realization requires.
    """
    m = refine_many(build_canonical(2, alpha), count, np.random.default_rng(seed))
    return scale(m, stretch)


def cone_triangle(
    sides=(0.3, 0.28, 0.25),
    weights=((0.4, 0.35, 0.25), (0.25, 0.35, 0.4)),
    curvatures=(0.05, 0.05),
) -> ConeTriangle:
    """Hyperbolic triangle with interior points stretched into cone points.

    ``weights`` place the interior points by normalized linear combinations
    of the corners; ``curvatures`` gives each point its target curvature
    (vertex ids 3, 4, ... follow the corners 0, 1, 2).
    """
    A = triangle_corners(*sides)
    pts = [interior_point(A, w) for w in weights]
    T = cone_triangle_from_points(A, pts)
    targets = {3 + k: float(c) for k, c in enumerate(curvatures) if c > 0}
    return with_curvatures(T, targets) if targets else T


def perturbed_manifold(metric: ConeMetric, heights, rng: np.random.Generator, spread: float = 0.2, tries: int = 50):
    """Convex cone-manifold at randomly raised heights.

    Heights are multiplied by factors in [1, 1 + spread]; draws for which the
    flip algorithm finds no convex manifold (heights outside the admissible
    set) are redrawn.
    """
    last = None
    for _ in range(tries):
        h = np.asarray(heights) * (1.0 + spread * rng.uniform(0.0, 1.0, len(heights)))
        try:
            return canonicalize_convex(metric, h)
        except FuchsconeError as exc:
            last = exc
    raise PreconditionViolated(f"no admissible perturbation found in {tries} draws: {last}")

"""JSON input and output shared by every command.

A surface document looks like::

    {"genus": 2,
     "halfedges": [{"twin": 3, "next": 1, "origin": 0}, ...],
     "lengths": {"0": 1.25, ...},
     "marked_vertices": [0, 1],
     "heights": [0.49, ...]}

``heights`` is optional.  Edge ids number the edges by their lowest
half-edge.  A cone-triangle document instead carries ``"kind":
"cone_triangle"``, a ``corners`` triple, half-edges whose ``twin`` may be
``null`` on the boundary, the same ``lengths`` map, and an optional
``curvature_targets`` map that is checked against the lengths.  Unknown
fields are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FuchsconeError, ParseError
from .surface import CombSurface, ConeMetric, build_surface
from .sweep import ConeTriangle

SURFACE_FIELDS = {"kind", "genus", "halfedges", "lengths", "marked_vertices", "heights"}
CONE_TRIANGLE_FIELDS = {"kind", "corners", "halfedges", "lengths", "curvature_targets"}
HALFEDGE_FIELDS = {"twin", "next", "origin"}


@dataclass
class SurfaceDocument:
    metric: ConeMetric
    heights: np.ndarray | None = None


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ParseError(f"unknown field(s) in {where}: {', '.join(extra)}")


def _int(x, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"{what} must be an integer, got {x!r}")
    return x


def _float(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{what} must be a number, got {x!r}")
    v = float(x)
    if not math.isfinite(v):
        raise ParseError(f"{what} must be finite")
    return v


def _halfedges(raw, allow_boundary: bool):
    if not isinstance(raw, list) or not raw:
        raise ParseError("halfedges must be a non-empty list")
    twin, nxt, org = [], [], []
    for i, he in enumerate(raw):
        if not isinstance(he, dict):
            raise ParseError(f"halfedge {i} must be an object")
        _reject_unknown(he, HALFEDGE_FIELDS, f"halfedge {i}")
        missing = HALFEDGE_FIELDS - set(he)
        if missing:
            raise ParseError(f"halfedge {i} lacks {', '.join(sorted(missing))}")
        t = he["twin"]
        if t is None and allow_boundary:
            twin.append(-1)
        else:
            twin.append(_int(t, f"halfedge {i} twin"))
        nxt.append(_int(he["next"], f"halfedge {i} next"))
        org.append(_int(he["origin"], f"halfedge {i} origin"))
    n = len(raw)
    lo = -1 if allow_boundary else 0
    if any(not lo <= x < n for x in twin) or any(not 0 <= x < n for x in nxt):
        raise ParseError("half-edge index out of range")
    if min(org) < 0:
        raise ParseError("origin must be non-negative")
    return twin, nxt, org


def _edge_lengths(raw, n_edges: int) -> np.ndarray:
    if not isinstance(raw, dict):
        raise ParseError("lengths must map edge ids to numbers")
    L = np.full(n_edges, np.nan)
    for k, v in raw.items():
        try:
            e = int(k)
        except ValueError as exc:
            raise ParseError(f"edge id {k!r} is not an integer") from exc
        if not 0 <= e < n_edges:
            raise ParseError(f"edge id {e} out of range")
        L[e] = _float(v, f"length of edge {e}")
    if np.isnan(L).any():
        raise ParseError(f"missing lengths for edges {np.flatnonzero(np.isnan(L)).tolist()}")
    return L


def parse_document(doc) -> SurfaceDocument | ConeTriangle:
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    kind = doc.get("kind", "surface")
    if kind == "cone_triangle":
        return _parse_cone_triangle(doc)
    if kind != "surface":
        raise ParseError(f"unknown kind {kind!r}")
    _reject_unknown(doc, SURFACE_FIELDS, "document")
    for key in ("genus", "halfedges", "lengths"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")
    twin, nxt, org = _halfedges(doc["halfedges"], allow_boundary=False)
    try:
        surf = build_surface(twin, nxt, org)
    except FuchsconeError as exc:
        raise ParseError(f"invalid connectivity: {exc}") from exc
    genus = _int(doc["genus"], "genus")
    if surf.genus != genus:
        raise ParseError(f"declared genus {genus} but the half-edge map has genus {surf.genus}")
    L = _edge_lengths(doc["lengths"], surf.n_edges)
    marked = doc.get("marked_vertices")
    if marked is not None:
        if not isinstance(marked, list):
            raise ParseError("marked_vertices must be a list")
        marked = [_int(v, "marked vertex") for v in marked]
        if any(not 0 <= v < surf.n_vertices for v in marked):
            raise ParseError("marked vertex out of range")
    metric = ConeMetric(surf, L, marked)
    heights = doc.get("heights")
    if heights is not None:
        if not isinstance(heights, list) or len(heights) != surf.n_vertices:
            raise ParseError("heights must list one number per vertex")
        heights = np.array([_float(h, "height") for h in heights])
    return SurfaceDocument(metric, heights)


def _parse_cone_triangle(doc) -> ConeTriangle:
    _reject_unknown(doc, CONE_TRIANGLE_FIELDS, "document")
    for key in ("corners", "halfedges", "lengths"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")
    twin, nxt, org = _halfedges(doc["halfedges"], allow_boundary=True)
    for h, t in enumerate(twin):
        if t >= 0 and (twin[t] != h or t == h):
            raise ParseError(f"twin of half-edge {h} is not an involution")
    reps = [h for h in range(len(twin)) if twin[h] < 0 or h < twin[h]]
    L_edge = _edge_lengths(doc["lengths"], len(reps))
    he_len = np.empty(len(twin))
    for e, h in enumerate(reps):
        he_len[h] = L_edge[e]
        if twin[h] >= 0:
            he_len[twin[h]] = L_edge[e]
    corners = doc["corners"]
    if not isinstance(corners, list) or len(corners) != 3:
        raise ParseError("corners must list three vertices")
    T = ConeTriangle(twin, nxt, org, he_len, tuple(_int(c, "corner") for c in corners))
    try:
        errs = T.check()
    except (KeyError, IndexError, FuchsconeError) as exc:
        raise ParseError(f"invalid disk: {exc}") from exc
    if errs:
        raise ParseError("; ".join(errs))
    targets = doc.get("curvature_targets")
    if targets is not None:
        if not isinstance(targets, dict):
            raise ParseError("curvature_targets must be an object")
        curv = T.curvatures()
        for k, v in targets.items():
            vid = int(k)
            if vid not in curv:
                raise ParseError(f"vertex {vid} is not an interior vertex")
            if abs(curv[vid] - _float(v, "curvature target")) > 1e-9:
                raise ParseError(f"vertex {vid} has curvature {curv[vid]!r}, target {v!r}")
    return T


def load(path) -> SurfaceDocument | ConeTriangle:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return parse_document(doc)


def surface_document(metric: ConeMetric, heights=None) -> dict:
    S: CombSurface = metric.surface
    doc = {
        "genus": int(S.genus),
        "halfedges": [
            {"twin": int(S.twin[h]), "next": int(S.nxt[h]), "origin": int(S.origin[h])}
            for h in range(S.n_halfedges)
        ],
        "lengths": {str(e): float(metric.lengths[e]) for e in range(S.n_edges)},
        "marked_vertices": [int(v) for v in metric.marked],
    }
    if heights is not None:
        doc["heights"] = [float(h) for h in heights]
    return doc


def cone_triangle_document(T: ConeTriangle) -> dict:
    reps = T.edges()
    return {
        "kind": "cone_triangle",
        "corners": list(T.corners),
        "halfedges": [
            {"twin": None if T.twin[h] < 0 else int(T.twin[h]), "next": int(T.nxt[h]), "origin": int(T.origin[h])}
            for h in range(T.n_halfedges)
        ],
        "lengths": {str(e): float(T.he_len[h]) for e, h in enumerate(reps)},
        "curvature_targets": {str(v): float(k) for v, k in sorted(T.curvatures().items())},
    }


def dump(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n")

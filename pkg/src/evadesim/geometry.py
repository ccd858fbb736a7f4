"""Planar alpha complexes for sensor networks.

The complex over a set of sensor positions contains a simplex exactly when it
is short (circumradius at most r) and Gabriel (no other sensor strictly inside
its circumball), or is a face of such a simplex.  Two construction routes are
provided: one from full coordinates (Delaunay-filtered) and one that uses only
pairwise distances between sensors whose sensing balls overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from ._kernels import alpha_filter, local_complex

COLLINEAR_RTOL = 1e-12
JITTER_SCALE = 1e-9
MAX_JITTER_RETRIES = 8


class DegenerateSimplex(ValueError):
    """Three candidate points are collinear within tolerance."""


class InconsistentDistances(ValueError):
    """A local distance table cannot come from a planar point set."""


@dataclass(frozen=True)
class AlphaComplex:
    """Combinatorial snapshot of the covered region at one instant.

    Simplices are canonical sorted id tuples.  The complex is closed under
    faces: vertices of every edge and edges of every triangle are present.
    """

    vertices: frozenset
    edges: frozenset
    triangles: frozenset
    radius: float

    def simplices(self):
        return self.vertices, self.edges, self.triangles


@dataclass(frozen=True)
class LocalDistanceTable:
    """Pairwise distances known only for sensors within 2r of each other.

    ``near`` maps sorted id pairs to exact distances; absent pairs are more
    than 2r apart and their distance is unknown.
    """

    ids: tuple
    near: dict
    radius: float


def circumdisk(points):
    """Circumcenter and circumradius of a segment or triangle.

    For two points this is the diametral disk.  Raises DegenerateSimplex for
    collinear triples (relative tolerance ``COLLINEAR_RTOL``).
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape == (2, 2):
        center = 0.5 * (pts[0] + pts[1])
        return center, 0.5 * float(np.linalg.norm(pts[1] - pts[0]))
    if pts.shape != (3, 2):
        raise ValueError("circumdisk expects 2 or 3 planar points")
    a, b, c = pts
    ab = b - a
    ac = c - a
    cross = ab[0] * ac[1] - ab[1] * ac[0]
    scale = np.linalg.norm(ab) * np.linalg.norm(ac)
    if abs(cross) <= COLLINEAR_RTOL * scale:
        raise DegenerateSimplex("collinear points within tolerance")
    d = 2.0 * cross
    ab2 = ab @ ab
    ac2 = ac @ ac
    ux = (ac[1] * ab2 - ab[1] * ac2) / d
    uy = (ab[0] * ac2 - ac[0] * ab2) / d
    center = a + np.array([ux, uy])
    return center, float(math.hypot(ux, uy))


def _sorted_pair(i, j):
    return (i, j) if i < j else (j, i)


def _candidate_simplices(pts):
    """Delaunay edges and triangles of a coordinate array, as index arrays."""
    n = len(pts)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64), np.empty((0, 3), dtype=np.int64)
    if n == 2:
        return np.array([[0, 1]], dtype=np.int64), np.empty((0, 3), dtype=np.int64)
    tri = Delaunay(pts)
    simp = np.sort(tri.simplices.astype(np.int64), axis=1)
    raw = np.concatenate([simp[:, [0, 1]], simp[:, [0, 2]], simp[:, [1, 2]]])
    # dedupe edges via integer encoding
    codes = np.unique(raw[:, 0] * n + raw[:, 1])
    edges = np.column_stack([codes // n, codes % n])
    return edges, simp


def _build_from_coordinates(ids, pts, r):
    edge_cands, tri_cands = _candidate_simplices(pts)
    tri_keep, edge_keep, degenerate = alpha_filter(
        np.ascontiguousarray(pts, dtype=np.float64), tri_cands, edge_cands,
        float(r))
    if degenerate:
        raise DegenerateSimplex("collinear points within tolerance")
    triangles = {tuple(t) for t in tri_cands[tri_keep].tolist()}
    edges = {tuple(e) for e in edge_cands[edge_keep].tolist()}
    for i, j, k in triangles:
        edges.update([(i, j), (i, k), (j, k)])
    return edges, triangles


def alpha_complex(positions, r, rng=None):
    """Alpha complex of a sensor configuration from full coordinates.

    ``positions`` maps sensor ids to (x, y).  Candidates are generated from
    pairs within 2r (a Gabriel simplex has an empty circumball, hence is
    Delaunay, so nothing is missed) and filtered by the short-and-Gabriel
    criterion with strict interior tests; ``rng`` is accepted for call
    compatibility with the Delaunay-filtered reference builder.
    """
    if r <= 0:
        raise ValueError("sensing radius must be positive")
    ids = sorted(positions)
    pts = (np.array([positions[i] for i in ids], dtype=np.float64)
           if ids else np.empty((0, 2)))
    edges_ix, tris_ix = local_complex(np.ascontiguousarray(pts), float(r))
    edges = frozenset((ids[i], ids[j]) for i, j in edges_ix.tolist())
    triangles = frozenset((ids[i], ids[j], ids[k])
                          for i, j, k in tris_ix.tolist())
    return AlphaComplex(frozenset(ids), edges, triangles, float(r))


def alpha_complex_delaunay(positions, r, rng=None):
    """Independent reference construction filtering the Delaunay complex.

    Kept for cross-checking ``alpha_complex`` and the Delaunay-subcomplex
    invariant in tests.  On a collinear degeneracy the points are jittered by
    at most ``1e-9 * r`` with the supplied generator and retried.
    """
    if r <= 0:
        raise ValueError("sensing radius must be positive")
    ids = sorted(positions)
    pts = np.array([positions[i] for i in ids], dtype=float) if ids else np.empty((0, 2))
    if rng is None:
        rng = np.random.default_rng(0)
    for attempt in range(MAX_JITTER_RETRIES):
        try:
            edges_ix, tris_ix = _build_from_coordinates(ids, pts, r)
            break
        except (QhullError, DegenerateSimplex):
            pts = pts + rng.uniform(-JITTER_SCALE * r, JITTER_SCALE * r, size=pts.shape)
    else:
        raise DegenerateSimplex("degeneracy persisted after jitter retries")
    edges = frozenset(_sorted_pair(ids[i], ids[j]) for i, j in edges_ix)
    triangles = frozenset(tuple(sorted((ids[i], ids[j], ids[k]))) for i, j, k in tris_ix)
    return AlphaComplex(frozenset(ids), edges, triangles, float(r))


def local_distance_table(positions, r):
    """Build the 2r-truncated distance table a real network could measure."""
    ids = sorted(positions)
    near = {}
    pts = {i: np.asarray(positions[i], dtype=float) for i in ids}
    tree_ids = list(ids)
    if len(ids) >= 2:
        arr = np.array([pts[i] for i in tree_ids])
        tree = cKDTree(arr)
        for a, b in tree.query_pairs(2.0 * r):
            i, j = tree_ids[a], tree_ids[b]
            near[_sorted_pair(i, j)] = float(np.linalg.norm(pts[i] - pts[j]))
    return LocalDistanceTable(tuple(ids), near, float(r))


def _circumradius_from_sides(a, b, c):
    """Circumradius of a triangle with side lengths a, b, c (Heron)."""
    s = 0.5 * (a + b + c)
    area2 = s * (s - a) * (s - b) * (s - c)
    if area2 <= (COLLINEAR_RTOL * s * s) ** 2:
        raise DegenerateSimplex("degenerate triangle in distance table")
    area = math.sqrt(area2)
    return (a * b * c) / (4.0 * area)


def _place_triangle(dij, dik, djk):
    """Coordinates of a triangle known only by side lengths: i at the origin,
    j on the +x axis, k in the upper half plane."""
    xk = (dij * dij + dik * dik - djk * djk) / (2.0 * dij)
    yk2 = dik * dik - xk * xk
    if yk2 < -COLLINEAR_RTOL * dik * dik:
        raise InconsistentDistances("triangle inequality violated")
    yk = math.sqrt(max(yk2, 0.0))
    return xk, yk


def _trilaterate(dij, dpi, dpj):
    """Position of a point from distances to i=(0,0) and j=(dij,0); the sign
    of y is ambiguous and must be fixed by a third distance."""
    x = (dij * dij + dpi * dpi - dpj * dpj) / (2.0 * dij)
    y2 = dpi * dpi - x * x
    if y2 < -1e-9 * max(dpi * dpi, 1e-30):
        raise InconsistentDistances("trilateration has no real solution")
    return x, math.sqrt(max(y2, 0.0))


def alpha_complex_from_local_distances(table, r):
    """Alpha complex reconstructed from local distances alone.

    Candidate simplices have all pairwise distances in the table; each is
    rebuilt up to a rigid motion to compute its circumdisk, and the Gabriel
    test only needs the sensors within 2r of every vertex.
    """
    if r <= 0:
        raise ValueError("sensing radius must be positive")
    near = table.near
    for (i, j), d in near.items():
        if d < 0 or d > 2.0 * r:
            raise InconsistentDistances(
                f"near entry ({i},{j}) = {d} outside [0, 2r]")

    neighbors = {i: set() for i in table.ids}
    for i, j in near:
        neighbors[i].add(j)
        neighbors[j].add(i)

    def dist(i, j):
        return near[_sorted_pair(i, j)]

    def edge_in(i, j):
        # Every near pair is short; test Gabriel against common neighbors.
        d = dist(i, j)
        radius = 0.5 * d
        r2 = radius * radius
        for p in neighbors[i] & neighbors[j]:
            a = dist(p, i)
            b = dist(p, j)
            # squared distance from p to the midpoint of ij (median formula)
            m2 = (2.0 * a * a + 2.0 * b * b - d * d) / 4.0
            if m2 < r2:
                return False
        return True

    def triangle_in(i, j, k):
        dij, dik, djk = dist(i, j), dist(i, k), dist(j, k)
        try:
            radius = _circumradius_from_sides(dij, dik, djk)
        except DegenerateSimplex:
            raise
        if radius > r:
            return False
        xk, yk = _place_triangle(dij, dik, djk)
        # circumcenter: equidistant from i=(0,0), j=(dij,0), k=(xk,yk)
        cx = 0.5 * dij
        cy = (xk * xk + yk * yk - 2.0 * cx * xk) / (2.0 * yk)
        r2 = radius * radius
        for p in neighbors[i] & neighbors[j] & neighbors[k]:
            xp, yp_abs = _trilaterate(dij, dist(p, i), dist(p, j))
            dpk = dist(p, k)
            # resolve the mirror ambiguity with the distance to k
            cand = []
            for yp in (yp_abs, -yp_abs):
                got = math.hypot(xp - xk, yp - yk)
                cand.append((abs(got - dpk), yp))
            err, yp = min(cand)
            if err > 1e-6 * max(dpk, 1.0):
                raise InconsistentDistances(
                    f"distances of sensor {p} to simplex ({i},{j},{k}) are "
                    "not realizable in the plane")
            d2 = (xp - cx) ** 2 + (yp - cy) ** 2
            if d2 < r2:
                return False
        return True

    edges = set()
    triangles = set()
    pairs = sorted(near)
    for i, j in pairs:
        if edge_in(i, j):
            edges.add((i, j))
    for i, j in pairs:
        for k in sorted(neighbors[i] & neighbors[j]):
            if k <= j:
                continue
            if triangle_in(i, j, k):
                triangles.add((i, j, k))
                edges.update([(i, j), (i, k), (j, k)])
    return AlphaComplex(frozenset(table.ids), frozenset(edges),
                        frozenset(triangles), float(r))


def rotation_data(positions, complex_):
    """Counter-clockwise neighbor order about each vertex of the complex.

    Exact angular ties are broken by ascending sensor id so replays are
    deterministic.
    """
    rotation = {v: () for v in complex_.vertices}
    if not complex_.edges:
        return rotation
    e = np.array(sorted(complex_.edges), dtype=np.int64)
    tails = np.concatenate([e[:, 0], e[:, 1]])
    heads = np.concatenate([e[:, 1], e[:, 0]])
    uniq = np.unique(np.concatenate([tails, heads]))
    coords = np.array([positions[int(v)] for v in uniq])
    index = {int(v): i for i, v in enumerate(uniq)}
    ti = np.array([index[int(v)] for v in tails])
    hi = np.array([index[int(v)] for v in heads])
    vec = coords[hi] - coords[ti]
    ang = np.arctan2(vec[:, 1], vec[:, 0])
    order = np.lexsort((heads, ang, tails))
    st, sh = tails[order], heads[order]
    starts = np.flatnonzero(np.r_[True, st[1:] != st[:-1]])
    bounds = np.r_[starts, len(st)]
    for a, b in zip(bounds[:-1], bounds[1:]):
        rotation[int(st[a])] = tuple(int(x) for x in sh[a:b])
    return rotation

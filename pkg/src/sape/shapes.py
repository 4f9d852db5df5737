"""Inside/outside oracles and surface samplers for occupancy training.

Polygons use the even-odd rule; triangle meshes use ray-casting parity
and must be watertight (every edge shared by exactly two faces).
"""

from __future__ import annotations

import numpy as np

from .raster import points_in_polygon


def polyline_arclength_points(vertices: np.ndarray, count: int,
                              offsets: np.ndarray | None = None) -> np.ndarray:
    """Points spread by arclength along a closed polyline.

    With offsets=None the points sit at fractions (i + 0.5)/count of the
    perimeter; explicit offsets (in [0, 1)) place them directly.
    """
    verts = np.asarray(vertices, dtype=np.float64)
    loop = np.vstack([verts, verts[:1]])
    seg = np.diff(loop, axis=0)
    lengths = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    total = cum[-1]
    if offsets is None:
        offsets = (np.arange(count) + 0.5) / count
    s = np.asarray(offsets) * total
    e = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lengths) - 1)
    frac = (s - cum[e]) / np.maximum(lengths[e], 1e-300)
    return loop[e] + frac[:, None] * seg[e]


class PolygonShape:
    """Closed 2D polygon with inside test, surface sampling, and distance."""

    d = 2

    def __init__(self, vertices: np.ndarray):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or len(self.vertices) < 3:
            raise ValueError("polygon needs at least 3 vertices")

    def contains(self, points: np.ndarray) -> np.ndarray:
        return points_in_polygon(np.asarray(points, dtype=np.float64),
                                 self.vertices)

    def sample_surface(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return polyline_arclength_points(self.vertices, count,
                                         offsets=rng.uniform(0, 1, count))

    def distance_to_surface(self, points: np.ndarray) -> np.ndarray:
        """Unsigned distance to the polygon boundary."""
        pts = np.asarray(points, dtype=np.float64)
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        ab = b - a
        denom = np.maximum((ab ** 2).sum(axis=1), 1e-300)
        best = np.full(len(pts), np.inf)
        for s in range(0, len(pts), 2048):
            block = pts[s:s + 2048]
            t = ((block[:, None, :] - a[None, :, :]) * ab[None, :, :]).sum(axis=2)
            t = np.clip(t / denom[None, :], 0.0, 1.0)
            proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
            d2 = ((block[:, None, :] - proj) ** 2).sum(axis=2)
            best[s:s + 2048] = np.sqrt(d2.min(axis=1))
        return best


class MeshShape:
    """Watertight triangle mesh with a ray-parity inside test."""

    d = 3

    # slightly irrational ray direction avoids edge-grazing degeneracies
    _RAY = np.array([0.577215664, 0.301029995, 0.693147180])

    def __init__(self, vertices: np.ndarray, faces: np.ndarray):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        self.faces = np.asarray(faces, dtype=np.int64)
        if not self._watertight():
            raise ValueError("mesh is not watertight; inside/outside oracle "
                             "would be unreliable")
        v = self.vertices
        f = self.faces
        self._a = v[f[:, 0]]
        e1 = v[f[:, 1]] - self._a
        e2 = v[f[:, 2]] - self._a
        self._e1, self._e2 = e1, e2
        self._areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
        self._surface_cache: np.ndarray | None = None

    def _watertight(self) -> bool:
        edges = {}
        for tri in self.faces:
            for i in range(3):
                e = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
                edges[e] = edges.get(e, 0) + 1
        return all(c == 2 for c in edges.values())

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        ray = self._RAY / np.linalg.norm(self._RAY)
        out = np.zeros(len(pts), dtype=bool)
        for s in range(0, len(pts), 512):
            block = pts[s:s + 512]
            out[s:s + 512] = self._parity(block, ray)
        return out

    def _parity(self, pts: np.ndarray, ray: np.ndarray) -> np.ndarray:
        # Moeller-Trumbore for a shared ray direction, all faces at once
        pvec = np.cross(ray, self._e2)                      # (F, 3)
        det = (self._e1 * pvec).sum(axis=1)                 # (F,)
        ok = np.abs(det) > 1e-12
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = pts[:, None, :] - self._a[None, :, :]        # (P, F, 3)
        u = (tvec * pvec[None, :, :]).sum(axis=2) * inv[None, :]
        qvec = np.cross(tvec, self._e1[None, :, :])
        v = (qvec * ray[None, None, :]).sum(axis=2) * inv[None, :]
        t = (qvec * self._e2[None, :, :]).sum(axis=2) * inv[None, :]
        hit = (ok[None, :] & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0))
        return (hit.sum(axis=1) % 2).astype(bool)

    def sample_surface(self, count: int, rng: np.random.Generator) -> np.ndarray:
        probs = self._areas / self._areas.sum()
        tri = rng.choice(len(self.faces), size=count, p=probs)
        r1 = np.sqrt(rng.uniform(0, 1, count))
        r2 = rng.uniform(0, 1, count)
        u = 1 - r1
        v = r1 * (1 - r2)
        w = r1 * r2
        f = self.faces[tri]
        return (u[:, None] * self.vertices[f[:, 0]]
                + v[:, None] * self.vertices[f[:, 1]]
                + w[:, None] * self.vertices[f[:, 2]])

    def distance_to_surface(self, points: np.ndarray) -> np.ndarray:
        """Approximate unsigned distance: nearest of 20k cached surface points."""
        if self._surface_cache is None:
            self._surface_cache = self.sample_surface(
                20_000, np.random.default_rng(0))
        pts = np.asarray(points, dtype=np.float64)
        cloud = self._surface_cache
        best = np.empty(len(pts))
        for s in range(0, len(pts), 512):
            block = pts[s:s + 512]
            d2 = ((block[:, None, :] - cloud[None, :, :]) ** 2).sum(axis=2)
            best[s:s + 512] = np.sqrt(d2.min(axis=1))
        return best


def normalize_to_unit_box(vertices: np.ndarray, margin: float = 0.1) -> np.ndarray:
    """Center and scale points to fit inside [-1+margin, 1-margin]^d."""
    v = np.asarray(vertices, dtype=np.float64)
    center = (v.max(axis=0) + v.min(axis=0)) / 2
    half = (v.max(axis=0) - v.min(axis=0)).max() / 2
    return (v - center) / half * (1.0 - margin)


def icosphere(subdivisions: int = 2, radius: float = 1.0):
    """Icosahedron-based sphere mesh; returns (vertices, faces)."""
    phi = (1 + np.sqrt(5)) / 2
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)

    for _ in range(subdivisions):
        edge_mid = {}
        new_faces = []
        verts_list = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in edge_mid:
                verts_list.append((verts_list[i] + verts_list[j]) / 2)
                edge_mid[key] = len(verts_list) - 1
            return edge_mid[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(verts_list)
        faces = np.array(new_faces, dtype=np.int64)

    verts = verts / np.linalg.norm(verts, axis=1, keepdims=True) * radius
    return verts, faces

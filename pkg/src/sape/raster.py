"""Polygon rasterization and point-in-polygon tests (even-odd rule)."""

from __future__ import annotations

import numpy as np


def points_in_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Even-odd (crossing number) inside test for a closed polygon.

    vertices is an (V, 2) loop; the closing edge from the last vertex back
    to the first is implicit. Points exactly on an edge land on whichever
    side the crossing test assigns them; the rule is deterministic.
    """
    pts = np.asarray(points, dtype=np.float64)
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
        raise ValueError("polygon needs at least 3 vertices of dimension 2")
    x, y = pts[:, 0], pts[:, 1]
    x1, y1 = verts[:, 0], verts[:, 1]
    x2, y2 = np.roll(verts[:, 0], -1), np.roll(verts[:, 1], -1)

    inside = np.zeros(len(pts), dtype=bool)
    for e in range(len(verts)):
        crosses = (y1[e] > y) != (y2[e] > y)
        if not crosses.any():
            continue
        xint = x1[e] + (y - y1[e]) / (y2[e] - y1[e]) * (x2[e] - x1[e])
        inside ^= crosses & (x < xint)
    return inside


def rasterize_polygon(vertices: np.ndarray, resolution: int,
                      window: tuple | None = None) -> np.ndarray:
    """Boolean raster of a closed polygon, sampled at pixel centers.

    window is ((x0, y0), (x1, y1)); it defaults to the polygon's bounding
    box. raster[i, j] covers the pixel whose center is at
    (x0 + (j+0.5)*dx, y0 + (i+0.5)*dy), i.e. row 0 is the bottom row.
    """
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
        raise ValueError("polygon needs at least 3 vertices of dimension 2")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if window is None:
        (x0, y0), (x1, y1) = verts.min(axis=0), verts.max(axis=0)
    else:
        (x0, y0), (x1, y1) = window
    xs = x0 + (np.arange(resolution) + 0.5) / resolution * (x1 - x0)
    ys = y0 + (np.arange(resolution) + 0.5) / resolution * (y1 - y0)
    gx, gy = np.meshgrid(xs, ys)  # gy varies along rows
    centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return points_in_polygon(centers, verts).reshape(resolution, resolution)


def polygon_is_closed(vertices: np.ndarray, factor: float = 5.0) -> bool:
    """Heuristic: the implicit closing edge is not wildly longer than the
    median edge."""
    verts = np.asarray(vertices, dtype=np.float64)
    edges = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    closing = np.linalg.norm(verts[0] - verts[-1])
    return bool(closing <= factor * np.median(edges))


def polygon_self_intersects(vertices: np.ndarray) -> bool:
    """True if any two non-adjacent edges of the closed polygon cross."""
    verts = np.asarray(vertices, dtype=np.float64)
    v2 = np.roll(verts, -1, axis=0)
    n = len(verts)

    def orient(a, b, c):
        return ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))

    for i in range(n - 2):
        # skip adjacent edges (shared endpoint) including the wrap pair
        j0 = i + 2
        j1 = n - 1 if i == 0 else n
        if j0 >= j1:
            continue
        a, b = verts[i], v2[i]
        c, d = verts[j0:j1], v2[j0:j1]
        o1 = orient(a, b, c)
        o2 = orient(a, b, d)
        o3 = orient(c, d, a[None, :])
        o4 = orient(c, d, b[None, :])
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False

"""Geometric predicates shared by the placement and grasp pipelines."""

from __future__ import annotations

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from . import kernels
from .mesh import Mesh


def segment_intersects_mesh(a, b, mesh: Mesh, exclude_radius: float = 0.0,
                            exclude_center=None) -> bool:
    """True iff segment ab crosses a mesh triangle at a point farther
    than exclude_radius from exclude_center.

    The exclusion sphere lets a support pin legally touch the surface at
    its tip while still flagging any other contact along the shaft.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if np.array_equal(a, b):
        raise ValueError("segment endpoints coincide")
    v0, v1, v2 = mesh.tri_corners
    return bool(kernels.segment_hits_triangles(a, b, v0, v1, v2,
                                               exclude_center, exclude_radius))


def barycentric_of_projection(p, t1, t2, t3) -> np.ndarray:
    """Barycentric coordinates of p projected along the triangle plane
    normal onto the triangle's plane."""
    p = np.asarray(p, float)
    t1, t2, t3 = (np.asarray(t, float) for t in (t1, t2, t3))
    u = t2 - t1
    v = t3 - t1
    w = p - t1
    uu, vv, uv = u @ u, v @ v, u @ v
    denom = uu * vv - uv * uv
    if abs(denom) < 1e-30:
        raise ValueError("degenerate triangle")
    wu, wv = w @ u, w @ v
    b2 = (vv * wu - uv * wv) / denom
    b3 = (uu * wv - uv * wu) / denom
    return np.array([1.0 - b2 - b3, b2, b3])


def point_in_triangle_projection(p, t1, t2, t3, margin: float = 0.0) -> bool:
    """True iff the projection of p along the plane normal lands inside
    triangle (t1, t2, t3) with every barycentric coordinate >= margin."""
    bary = barycentric_of_projection(p, t1, t2, t3)
    return bool((bary >= margin - 1e-12).all())


def point_in_convex_polygon_2d(p, poly, shrink: float = 0.0) -> bool:
    """Point-in-convex-polygon with the polygon optionally shrunk about
    its area centroid by factor (1 - shrink).

    shrink = 3 * barycentric margin reproduces the triangle margin rule
    on triangular polygons.
    """
    poly = np.asarray(poly, float)
    p = np.asarray(p, float)
    if shrink > 0.0:
        c = _polygon_centroid_2d(poly)
        if shrink >= 1.0:
            return False
        p = c + (p - c) / (1.0 - shrink)
    n = len(poly)
    sign = 0.0
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if abs(cr) < 1e-15:
            continue
        if sign == 0.0:
            sign = np.sign(cr)
        elif np.sign(cr) != sign:
            return False
    return True


def _polygon_centroid_2d(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    if abs(area) < 1e-18:
        return poly.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def point_in_mesh(point, mesh: Mesh) -> bool:
    """Parity ray test; retries along jittered directions on grazing hits."""
    point = np.asarray(point, float)
    lo, hi = mesh.bounds()
    diag = float(np.linalg.norm(hi - lo))
    if (point < lo - 1e-12).any() or (point > hi + 1e-12).any():
        return False
    v0, v1, v2 = mesh.tri_corners
    rng_dirs = [np.array([0.577350, 0.577350, 0.577350]),
                np.array([0.858356, 0.288675, -0.424264]),
                np.array([-0.267261, 0.801784, 0.534522]),
                np.array([0.154303, -0.617213, 0.771517]),
                np.array([-0.482243, -0.578692, -0.657604]),
                np.array([0.904534, -0.301511, 0.301511]),
                np.array([-0.688247, 0.229416, -0.688247]),
                np.array([0.267261, -0.534522, 0.801784])]
    for d in rng_dirs:
        far = point + d / np.linalg.norm(d) * (2.5 * diag + 1.0)
        count, clean = kernels.segment_crossings(point, far, v0, v1, v2)
        if clean:
            return count % 2 == 1
    return count % 2 == 1  # all rays grazed; accept the last parity

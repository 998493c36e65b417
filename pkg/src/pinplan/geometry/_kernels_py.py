"""Pure-numpy geometry kernels.

Same contracts as the compiled extension `_kernels`; this module is the
fallback selected at import when the extension is unavailable (or when
PINPLAN_PURE is set). Vectorized over triangles instead of early-exit.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"

_DET_EPS = 1e-14
_BScore = 1e-9


def _mt_hits(a, b, v0, v1, v2):
    """Möller-Trumbore segment/triangle params for all triangles.

    Returns (mask, t, u, v): mask selects triangles hit by segment ab
    with t, u, v in [0, 1] up to a small inclusive tolerance.
    """
    a = np.asarray(a, float)
    d = np.asarray(b, float) - a
    e1 = v1 - v0
    e2 = v2 - v0
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = np.abs(det) > _DET_EPS
    inv = np.zeros_like(det)
    inv[ok] = 1.0 / det[ok]
    s = a - v0
    u = np.einsum("ij,ij->i", s, p) * inv
    q = np.cross(s, e1)
    v = (q @ d) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    tol = _BScore
    mask = (ok & (u >= -tol) & (v >= -tol) & (u + v <= 1.0 + tol)
            & (t >= -tol) & (t <= 1.0 + tol))
    return mask, t, u, v


def segment_hits_triangles(a, b, v0, v1, v2,
                           exclude_center=None, exclude_radius=0.0) -> bool:
    """True if segment ab crosses any triangle, ignoring hits within
    exclude_radius of exclude_center."""
    mask, t, _, _ = _mt_hits(a, b, v0, v1, v2)
    if not mask.any():
        return False
    if exclude_center is None or exclude_radius <= 0.0:
        return True
    a = np.asarray(a, float)
    d = np.asarray(b, float) - a
    hits = a + t[mask][:, None] * d
    dist = np.linalg.norm(hits - np.asarray(exclude_center, float), axis=1)
    return bool((dist > exclude_radius).any())


def segment_crossings(a, b, v0, v1, v2) -> tuple[int, bool]:
    """Crossing count for parity tests plus a cleanliness flag.

    clean is False when any hit grazes a triangle boundary or endpoint,
    in which case the caller should re-shoot along a different ray.
    """
    mask, t, u, v = _mt_hits(a, b, v0, v1, v2)
    count = int(mask.sum())
    if count == 0:
        return 0, True
    g = 1e-7
    tm, um, vm = t[mask], u[mask], v[mask]
    grazing = ((um < g) | (vm < g) | (um + vm > 1.0 - g)
               | (tm < g) | (tm > 1.0 - g)).any()
    return count, not bool(grazing)


def box_hits_triangles(center, axes, half, v0, v1, v2) -> bool:
    """Separating-axis overlap test between an oriented box and any
    triangle. axes is (3, 3) with rows the box axes; half the extents.
    Touching contacts do not count as overlap."""
    center = np.asarray(center, float)
    axes = np.asarray(axes, float)
    h = np.asarray(half, float)
    q0 = (v0 - center) @ axes.T
    q1 = (v1 - center) @ axes.T
    q2 = (v2 - center) @ axes.T
    eps = 1e-12

    alive = np.ones(len(q0), dtype=bool)

    # box face axes
    for k in range(3):
        lo = np.minimum(np.minimum(q0[:, k], q1[:, k]), q2[:, k])
        hi = np.maximum(np.maximum(q0[:, k], q1[:, k]), q2[:, k])
        alive &= (lo < h[k] - eps) & (hi > -h[k] + eps)
        if not alive.any():
            return False

    # triangle normal axis
    n = np.cross(q1 - q0, q2 - q0)
    d = np.einsum("ij,ij->i", n, q0)
    r = np.abs(n) @ h
    alive &= np.abs(d) < r - eps
    if not alive.any():
        return False

    # 9 edge cross-product axes
    f = (q1 - q0, q2 - q1, q0 - q2)
    corners = (q0, q1, q2)
    for fk in f:
        for ax in range(3):
            # axis = e_ax x fk
            L = np.zeros_like(fk)
            if ax == 0:
                L[:, 1] = -fk[:, 2]
                L[:, 2] = fk[:, 1]
            elif ax == 1:
                L[:, 0] = fk[:, 2]
                L[:, 2] = -fk[:, 0]
            else:
                L[:, 0] = -fk[:, 1]
                L[:, 1] = fk[:, 0]
            p = [np.einsum("ij,ij->i", c, L) for c in corners]
            lo = np.minimum(np.minimum(p[0], p[1]), p[2])
            hi = np.maximum(np.maximum(p[0], p[1]), p[2])
            r = np.abs(L) @ h
            # an edge parallel to the box axis gives a zero axis: no test
            degenerate = np.einsum("ij,ij->i", L, L) <= 1e-20
            alive &= degenerate | ((lo < r - eps) & (hi > -r + eps))
            if not alive.any():
                return False
    return bool(alive.any())

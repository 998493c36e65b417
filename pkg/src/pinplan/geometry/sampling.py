"""Surface sampling for pin touch-point candidates.

Each flat surface region gets a grid of points along its two in-plane
PCA axes, centered on the region's area centroid. Points closer than
`margin` to the region boundary are removed; survivors carry the
outward face normal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from .mesh import Mesh, mesh_regions
from .predicates import barycentric_of_projection


@dataclass(frozen=True)
class SurfaceSample:
    point: np.ndarray      # (3,) on the mesh surface
    face_index: int        # owning triangle
    normal: np.ndarray     # (3,) outward unit at the sample

    def __post_init__(self):
        for name in ("point", "normal"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    L2 = d @ d
    if L2 < 1e-30:
        return float(np.linalg.norm(p - a))
    t = np.clip((p - a) @ d / L2, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * d)))


def _owning_triangle(mesh: Mesh, tri_indices: np.ndarray, point: np.ndarray,
                     eps: float) -> int:
    for ti in tri_indices:
        a, b, c = mesh.vertices[mesh.triangles[ti]]
        try:
            bary = barycentric_of_projection(point, a, b, c)
        except ValueError:
            continue
        if (bary >= -eps).all():
            return int(ti)
    return -1


def sample_surface(mesh: Mesh, step: float = 0.01, margin: float = 0.005,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> list[SurfaceSample]:
    """Deterministic grid sampling of every flat region of the mesh."""
    if step <= 0:
        raise ValueError("step must be positive")
    if margin < 0:
        raise ValueError("margin must be non-negative")

    samples: list[SurfaceSample] = []
    for region in mesh_regions(mesh, tol=tol):
        u_axis, v_axis = region.axes
        centroid = region.centroid
        verts = np.vstack(region.boundary_loops)
        rel = verts - centroid
        us, vs = rel @ u_axis, rel @ v_axis
        i_lo, i_hi = int(np.ceil(us.min() / step)), int(np.floor(us.max() / step))
        j_lo, j_hi = int(np.ceil(vs.min() / step)), int(np.floor(vs.max() / step))

        boundary_segments = []
        for loop in region.boundary_loops:
            for k in range(len(loop)):
                boundary_segments.append((loop[k], loop[(k + 1) % len(loop)]))

        for i in range(i_lo, i_hi + 1):
            for j in range(j_lo, j_hi + 1):
                p = centroid + i * step * u_axis + j * step * v_axis
                ti = _owning_triangle(mesh, region.triangle_indices, p, 1e-9)
                if ti < 0:
                    continue
                if margin > 0.0:
                    d = min(_point_segment_distance(p, a, b)
                            for a, b in boundary_segments)
                    if d < margin:
                        continue
                samples.append(SurfaceSample(p, ti, region.normal))
    return samples

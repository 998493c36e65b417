"""Convex hull with merged coplanar faces and explicit edge list.

The hull backend is scipy's qhull; what the rest of the pipeline needs
on top of raw simplices is (a) maximal coplanar faces as ordered vertex
loops and (b) each edge shared by exactly two faces, since hull edges
are the floor contacts of pin-supported placements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull as _SciHull
from scipy.spatial import QhullError

from ..config import DEFAULT_TOLERANCES, Tolerances
from .mesh import Mesh


class DegenerateInput(ValueError):
    """Input points do not span 3D."""


@dataclass(frozen=True)
class HullFace:
    vertex_indices: np.ndarray  # ordered loop, CCW seen from outside
    normal: np.ndarray          # outward unit
    offset: float               # plane: normal . x = offset
    centroid: np.ndarray        # area centroid of the polygon
    area: float

    def __post_init__(self):
        for name in ("vertex_indices", "normal", "centroid"):
            a = np.asarray(getattr(self, name))
            a.flags.writeable = False
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class ConvexHull:
    points: np.ndarray         # all input points the hull was built from
    vertex_indices: np.ndarray  # indices of points on the hull
    faces: tuple               # tuple[HullFace]
    edges: np.ndarray          # (e, 2) point-index pairs, each on 2 faces
    edge_faces: np.ndarray     # (e, 2) face indices flanking each edge

    def __post_init__(self):
        for name in ("points", "vertex_indices", "edges", "edge_faces"):
            a = np.asarray(getattr(self, name))
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def face_polygon(self, face_index: int) -> np.ndarray:
        return self.points[self.faces[face_index].vertex_indices]

    def edge_points(self, edge_index: int) -> tuple[np.ndarray, np.ndarray]:
        i, j = self.edges[edge_index]
        return self.points[i], self.points[j]


def _order_loop(vertex_ids, boundary_edges, normal, points) -> np.ndarray:
    """Chain boundary edges into one loop, oriented CCW about `normal`."""
    nxt = {}
    for u, v in boundary_edges:
        nxt.setdefault(u, []).append(v)
        nxt.setdefault(v, []).append(u)
    start = min(vertex_ids)
    loop = [start]
    prev = None
    cur = start
    while True:
        cands = [w for w in nxt[cur] if w != prev]
        if not cands:
            break
        nxt_v = cands[0]
        if nxt_v == start:
            break
        loop.append(nxt_v)
        prev, cur = cur, nxt_v
    pts = points[np.array(loop)]
    c = pts.mean(axis=0)
    area_vec = np.zeros(3)
    for i in range(len(pts)):
        area_vec += np.cross(pts[i] - c, pts[(i + 1) % len(pts)] - c)
    if area_vec @ normal < 0:
        loop = [loop[0]] + loop[1:][::-1]
    return np.array(loop, dtype=np.int64)


def convex_hull(mesh_or_points, tol: Tolerances = DEFAULT_TOLERANCES) -> ConvexHull:
    """Quickhull (via qhull) plus coplanar-face merging.

    Faces whose simplex normals deviate by <= tol.hull_merge_angle and
    that lie on the same plane are merged into one polygonal face.
    """
    if isinstance(mesh_or_points, Mesh):
        points = mesh_or_points.vertices
    else:
        points = np.asarray(mesh_or_points, dtype=float)
    if len(points) < 4:
        raise DegenerateInput("need at least 4 points")
    try:
        qh = _SciHull(points)
    except QhullError as e:
        raise DegenerateInput(str(e)) from None

    simplices = qh.simplices
    eqs = qh.equations  # n . x + d = 0 with n outward
    normals = eqs[:, :3]
    offsets = -eqs[:, 3]

    # group simplices into coplanar faces
    cos_tol = np.cos(tol.hull_merge_angle)
    scale = float(np.max(np.abs(points))) or 1.0
    plane_tol = max(tol.geom_eps * 10, 1e-12) * scale + 1e-9

    neighbors = qh.neighbors
    group = np.full(len(simplices), -1, dtype=int)
    groups = []
    for seed in np.argsort(simplices[:, 0]):
        if group[seed] >= 0:
            continue
        gid = len(groups)
        group[seed] = gid
        members = [seed]
        stack = [int(seed)]
        while stack:
            si = stack.pop()
            for sj in neighbors[si]:
                if group[sj] >= 0:
                    continue
                if normals[si] @ normals[sj] < cos_tol:
                    continue
                if abs(offsets[si] - offsets[sj]) > plane_tol:
                    continue
                group[sj] = gid
                members.append(int(sj))
                stack.append(int(sj))
        groups.append(members)

    # per-face merged polygon
    faces = []
    face_key_edges = []
    for members in groups:
        tris = simplices[np.array(members)]
        edge_count = {}
        for a, b, c in tris:
            for u, v in ((a, b), (b, c), (c, a)):
                k = (min(u, v), max(u, v))
                edge_count[k] = edge_count.get(k, 0) + 1
        boundary = [k for k, n in edge_count.items() if n == 1]
        verts = np.unique(tris.ravel())
        v0, v1, v2 = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
        cross = np.cross(v1 - v0, v2 - v0)
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        n = (normals[np.array(members)] * areas[:, None]).sum(axis=0)
        n /= np.linalg.norm(n)
        loop = _order_loop(verts, boundary, n, points)
        poly = points[loop]
        centroid = _polygon_area_centroid(poly, n)
        faces.append(HullFace(loop, n, float(n @ poly[0]), centroid, float(areas.sum())))
        face_key_edges.append({(min(int(loop[i]), int(loop[(i + 1) % len(loop)])),
                                max(int(loop[i]), int(loop[(i + 1) % len(loop)])))
                               for i in range(len(loop))})

    # order faces deterministically by their lowest vertex loop
    face_order = sorted(range(len(faces)),
                        key=lambda i: tuple(sorted(map(int, faces[i].vertex_indices))))
    faces = [faces[i] for i in face_order]
    face_key_edges = [face_key_edges[i] for i in face_order]

    edge_map: dict[tuple[int, int], list] = {}
    for fi, keys in enumerate(face_key_edges):
        for k in keys:
            edge_map.setdefault(k, []).append(fi)
    edges, edge_faces = [], []
    for k in sorted(edge_map):
        owners = edge_map[k]
        if len(owners) != 2:
            raise DegenerateInput(f"hull edge {k} borders {len(owners)} faces")
        edges.append(k)
        edge_faces.append(owners)

    return ConvexHull(points=points,
                      vertex_indices=np.asarray(qh.vertices, dtype=np.int64),
                      faces=tuple(faces),
                      edges=np.asarray(edges, dtype=np.int64),
                      edge_faces=np.asarray(edge_faces, dtype=np.int64))


def _polygon_area_centroid(poly: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Area centroid of a planar polygon given its plane normal."""
    ref = poly[0]
    acc_area = 0.0
    acc_c = np.zeros(3)
    for i in range(1, len(poly) - 1):
        a = 0.5 * np.cross(poly[i] - ref, poly[i + 1] - ref) @ normal
        acc_area += a
        acc_c += a * (ref + poly[i] + poly[i + 1]) / 3.0
    if abs(acc_area) < 1e-18:
        return poly.mean(axis=0)
    return acc_c / acc_area

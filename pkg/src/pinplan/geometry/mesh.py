"""Triangle mesh ingestion and derived quantities.

Loads OBJ / STL (ascii and binary) into an immutable indexed triangle
mesh: vertices welded, degenerate triangles dropped, winding repaired so
the total signed volume is positive. Also computes uniform-density mass
properties and coplanar surface regions used by sampling and grasping.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances


class ParseError(ValueError):
    """Malformed OBJ/STL input."""


class EmptyMesh(ValueError):
    """No triangles survive loading."""


class NonPositiveVolume(ValueError):
    """Winding could not be repaired to a positive signed volume."""


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray   # (n, 3) float64, meters
    triangles: np.ndarray  # (m, 3) int32, indices into vertices
    name: str = "mesh"

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int32))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must be (m, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def tri_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-triangle corner arrays (v0, v1, v2), each (m, 3) contiguous."""
        v, t = self.vertices, self.triangles
        return (np.ascontiguousarray(v[t[:, 0]]),
                np.ascontiguousarray(v[t[:, 1]]),
                np.ascontiguousarray(v[t[:, 2]]))

    def triangle_normals(self) -> np.ndarray:
        v0, v1, v2 = self.tri_corners
        n = np.cross(v1 - v0, v2 - v0)
        return n / np.linalg.norm(n, axis=1)[:, None]

    def triangle_areas(self) -> np.ndarray:
        v0, v1, v2 = self.tri_corners
        return 0.5 * np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)

    def transformed(self, rotation: np.ndarray = None, scale: float = None,
                    about=None, name: str = None) -> "Mesh":
        """Rotated and/or uniformly scaled copy (scaling about `about`)."""
        v = self.vertices
        if scale is not None:
            c = np.zeros(3) if about is None else np.asarray(about, float)
            v = c + (v - c) * scale
        if rotation is not None:
            v = v @ np.asarray(rotation, float).T
        return Mesh(v, self.triangles, name or self.name)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.vertices.tobytes())
        h.update(self.triangles.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class MassProperties:
    volume: float          # m^3
    center_of_mass: np.ndarray  # (3,)

    def __post_init__(self):
        c = np.asarray(self.center_of_mass, dtype=float).reshape(3)
        c.flags.writeable = False
        object.__setattr__(self, "center_of_mass", c)


@dataclass(frozen=True)
class SurfaceRegion:
    """Connected run of near-coplanar triangles (one flat side of the mesh)."""

    triangle_indices: np.ndarray  # (k,)
    normal: np.ndarray            # (3,) outward unit
    centroid: np.ndarray          # (3,) area centroid
    area: float
    boundary_loops: tuple         # tuple of (L, 3) vertex-coordinate loops
    axes: np.ndarray              # (2, 3) in-plane PCA axes, major first

    def __post_init__(self):
        for name in ("triangle_indices", "normal", "centroid", "axes"):
            a = np.asarray(getattr(self, name))
            a.flags.writeable = False
            object.__setattr__(self, name, a)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _parse_obj(text: str) -> tuple[list, list]:
    verts, tris = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ParseError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError as e:
                raise ParseError(f"line {lineno}: {e}") from None
        elif tag == "f":
            if len(parts) < 4:
                raise ParseError(f"line {lineno}: face needs >= 3 vertices")
            idx = []
            for tok in parts[1:]:
                head = tok.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad face index {tok!r}") from None
                idx.append(i - 1 if i > 0 else len(verts) + i)
            for k in range(1, len(idx) - 1):  # fan-triangulate polygons
                tris.append([idx[0], idx[k], idx[k + 1]])
        # all other tags (vn, vt, usemtl, ...) ignored
    return verts, tris


def _parse_stl_ascii(text: str) -> tuple[list, list]:
    verts, tris = [], []
    pending = []
    saw_solid = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("solid"):
            saw_solid = True
        elif line.startswith("vertex"):
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                pending.append([float(p) for p in parts[1:]])
            except ValueError as e:
                raise ParseError(f"line {lineno}: {e}") from None
        elif line.startswith("endfacet"):
            if len(pending) != 3:
                raise ParseError(f"line {lineno}: facet with {len(pending)} vertices")
            base = len(verts)
            verts.extend(pending)
            tris.append([base, base + 1, base + 2])
            pending = []
    if not saw_solid:
        raise ParseError("not an ascii STL: missing 'solid' header")
    return verts, tris


def _parse_stl_binary(data: bytes) -> tuple[list, list]:
    if len(data) < 84:
        raise ParseError("binary STL shorter than header")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise ParseError(f"binary STL truncated: need {expected} bytes, have {len(data)}")
    verts, tris = [], []
    off = 84
    for _ in range(count):
        vals = struct.unpack_from("<12f", data, off)
        # vals[0:3] is the stored normal; recomputed later, so ignored
        for k in range(3):
            verts.append(list(vals[3 + 3 * k: 6 + 3 * k]))
        base = len(verts) - 3
        tris.append([base, base + 1, base + 2])
        off += 50
    return verts, tris


def _weld(verts: np.ndarray, tris: np.ndarray, weld: float):
    """Merge vertices that quantize to the same weld-sized grid cell."""
    keys = np.round(verts / weld).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first)  # keep original vertex order
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    new_verts = verts[np.sort(first)]
    remap = rank[inverse]
    return new_verts, remap[tris]


def _drop_degenerate(verts: np.ndarray, tris: np.ndarray, eps_area: float):
    if len(tris) == 0:
        return tris
    distinct = ((tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2])
                & (tris[:, 0] != tris[:, 2]))
    tris = tris[distinct]
    if len(tris) == 0:
        return tris
    v0, v1, v2 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    area2 = np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
    return tris[area2 > 2.0 * eps_area]


def _repair_winding(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Flip triangles so adjacent ones wind consistently, then orient each
    connected component for positive signed volume."""
    m = len(tris)
    edge_owner: dict[tuple[int, int], list] = {}
    for ti, (a, b, c) in enumerate(tris):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_owner.setdefault((min(u, v), max(u, v)), []).append((ti, u, v))

    flipped = np.zeros(m, dtype=bool)
    seen = np.zeros(m, dtype=bool)
    comps = []
    for seed in range(m):
        if seen[seed]:
            continue
        comp = [seed]
        seen[seed] = True
        stack = [seed]
        while stack:
            ti = stack.pop()
            a, b, c = tris[ti]
            tri_dirs = [(a, b), (b, c), (c, a)]
            if flipped[ti]:
                tri_dirs = [(v, u) for u, v in tri_dirs]
            for u, v in tri_dirs:
                for tj, ju, jv in edge_owner[(min(u, v), max(u, v))]:
                    if tj == ti or seen[tj]:
                        continue
                    # consistent winding traverses a shared edge oppositely;
                    # (u, v) is ti's effective direction, so tj must flip
                    # exactly when its stored direction matches it
                    flipped[tj] = (ju, jv) == (u, v)
                    seen[tj] = True
                    comp.append(tj)
                    stack.append(tj)
        comps.append(np.array(comp))

    out = tris.copy()
    swap = flipped
    out[swap] = out[swap][:, [0, 2, 1]]

    # orient each component so its signed volume is positive
    for comp in comps:
        sub = out[comp]
        v0, v1, v2 = verts[sub[:, 0]], verts[sub[:, 1]], verts[sub[:, 2]]
        vol = np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0
        if vol < 0:
            out[comp] = sub[:, [0, 2, 1]]
    return out


def load_mesh(source, fmt: str, name: str = "mesh",
              tol: Tolerances = DEFAULT_TOLERANCES) -> Mesh:
    """Parse `source` (bytes or a binary file object) in the given format.

    fmt is one of "obj", "stl-ascii", "stl-binary", or "stl" (sniffed).
    Vertices are welded at tol.weld, degenerate triangles dropped, and
    winding repaired to positive signed volume per connected component.
    """
    data = source.read() if hasattr(source, "read") else source
    if isinstance(data, str):
        data = data.encode()
    fmt = fmt.lower()
    if fmt == "stl":
        fmt = "stl-ascii" if data[:5] == b"solid" and b"facet" in data[:500] else "stl-binary"
    if fmt == "obj":
        verts, tris = _parse_obj(data.decode("utf-8", errors="replace"))
    elif fmt == "stl-ascii":
        verts, tris = _parse_stl_ascii(data.decode("utf-8", errors="replace"))
    elif fmt == "stl-binary":
        verts, tris = _parse_stl_binary(data)
    else:
        raise ParseError(f"unknown format {fmt!r}")

    if not tris:
        raise EmptyMesh(f"{name}: no triangles")
    varr = np.asarray(verts, dtype=np.float64)
    tarr = np.asarray(tris, dtype=np.int64)
    if tarr.min() < 0 or tarr.max() >= len(varr):
        raise ParseError("face index out of range")

    varr, tarr = _weld(varr, tarr, tol.weld)
    tarr = _drop_degenerate(varr, tarr, tol.geom_eps)
    if len(tarr) == 0:
        raise EmptyMesh(f"{name}: all triangles degenerate")
    tarr = _repair_winding(varr, tarr)

    used = np.zeros(len(varr), dtype=bool)
    used[tarr.ravel()] = True
    if not used.all():
        remap = np.cumsum(used) - 1
        varr, tarr = varr[used], remap[tarr]
    return Mesh(varr, tarr, name)


def load_mesh_path(path, tol: Tolerances = DEFAULT_TOLERANCES) -> Mesh:
    """Load from a filesystem path, picking the format from the suffix."""
    import pathlib

    p = pathlib.Path(path)
    suffix = p.suffix.lower()
    fmt = {"obj": "obj", ".obj": "obj", ".stl": "stl"}.get(suffix)
    if fmt is None:
        raise ParseError(f"cannot infer mesh format from {p.name!r}")
    return load_mesh(p.read_bytes(), fmt, name=p.stem, tol=tol)


# ---------------------------------------------------------------------------
# Writers (counterparts of the parsers, used by the CLI and tests)
# ---------------------------------------------------------------------------

def dump_obj(mesh: Mesh) -> bytes:
    lines = [f"# {mesh.name}"]
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    for t in mesh.triangles:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    return ("\n".join(lines) + "\n").encode()


def dump_stl_ascii(mesh: Mesh) -> bytes:
    v0, v1, v2 = mesh.tri_corners
    normals = mesh.triangle_normals()
    out = [f"solid {mesh.name}"]
    for i in range(len(mesh.triangles)):
        n = normals[i]
        out.append(f"  facet normal {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}")
        out.append("    outer loop")
        for p in (v0[i], v1[i], v2[i]):
            out.append(f"      vertex {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}")
        out.append("    endloop")
        out.append("  endfacet")
    out.append(f"endsolid {mesh.name}")
    return ("\n".join(out) + "\n").encode()


def dump_stl_binary(mesh: Mesh) -> bytes:
    v0, v1, v2 = mesh.tri_corners
    normals = mesh.triangle_normals()
    header = mesh.name.encode()[:80].ljust(80, b"\0")
    parts = [header, struct.pack("<I", len(mesh.triangles))]
    for i in range(len(mesh.triangles)):
        vals = list(normals[i]) + list(v0[i]) + list(v1[i]) + list(v2[i])
        parts.append(struct.pack("<12fH", *vals, 0))
    return b"".join(parts)


# ---------------------------------------------------------------------------
# Derived quantities
# ---------------------------------------------------------------------------

def mass_properties(mesh: Mesh) -> MassProperties:
    """Volume and center of mass by signed tetrahedra against the origin,
    assuming uniform density."""
    v0, v1, v2 = mesh.tri_corners
    tet_vol = np.einsum("ij,ij->i", v0, np.cross(v1, v2)) / 6.0
    volume = float(tet_vol.sum())
    if volume <= 0.0:
        raise NonPositiveVolume(f"{mesh.name}: signed volume {volume:.3e}")
    centroid = (v0 + v1 + v2) / 4.0
    com = (tet_vol[:, None] * centroid).sum(axis=0) / volume
    return MassProperties(volume, com)


def _region_boundary_loops(mesh: Mesh, tri_idx: np.ndarray):
    """Closed vertex loops bounding a triangle patch, outer loop first."""
    edge_count: dict[tuple[int, int], int] = {}
    directed: dict[int, int] = {}
    for ti in tri_idx:
        a, b, c = mesh.triangles[ti]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            edge_count[key] = edge_count.get(key, 0) + 1
    for ti in tri_idx:
        a, b, c = mesh.triangles[ti]
        for u, v in ((a, b), (b, c), (c, a)):
            if edge_count[(min(u, v), max(u, v))] == 1:
                directed[int(u)] = int(v)
    loops = []
    while directed:
        start = min(directed)
        loop = [start]
        cur = directed.pop(start)
        while cur != start:
            loop.append(cur)
            cur = directed.pop(cur)
        loops.append(mesh.vertices[np.array(loop)])
    # outer loop = largest area magnitude
    if len(loops) > 1:
        def loop_area(pts):
            c = pts.mean(axis=0)
            s = np.zeros(3)
            for i in range(len(pts)):
                s += np.cross(pts[i] - c, pts[(i + 1) % len(pts)] - c)
            return 0.5 * np.linalg.norm(s)
        loops.sort(key=loop_area, reverse=True)
    return tuple(loops)


def _pca_axes(points: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Two in-plane principal axes of a coplanar point set, major first.

    Equal eigenvalues (square faces) are broken by lexicographic
    comparison of the axis vectors; signs are canonicalized so the first
    nonzero component is positive.
    """
    c = points.mean(axis=0)
    q = points - c
    q = q - np.outer(q @ normal, normal)
    cov = q.T @ q / max(len(points), 1)
    w, vecs = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1]
    axes = []
    for k in order[:2]:
        a = vecs[:, k]
        a = a - (a @ normal) * normal
        n = np.linalg.norm(a)
        if n < 1e-12:
            continue
        a = a / n
        nz = np.nonzero(np.abs(a) > 1e-12)[0]
        if len(nz) and a[nz[0]] < 0:
            a = -a
        axes.append(a)
    while len(axes) < 2:
        # degenerate spread: complete with any in-plane direction
        seed = np.array([1.0, 0.0, 0.0])
        if abs(seed @ normal) > 0.9:
            seed = np.array([0.0, 1.0, 0.0])
        a = seed - (seed @ normal) * normal
        a /= np.linalg.norm(a)
        if axes and abs(a @ axes[0]) > 0.99:
            a = np.cross(normal, axes[0])
        axes.append(a)
    if len(axes) == 2 and abs(w[order[0]] - w[order[1]]) <= 1e-12 * max(1.0, w[order[0]]):
        axes.sort(key=lambda a: tuple(np.round(a, 12)), reverse=True)
    return np.vstack(axes[:2])


def mesh_regions(mesh: Mesh, angle_tol: float = None,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> list[SurfaceRegion]:
    """Connected coplanar triangle patches via normal flood fill.

    Ordering is deterministic: regions sorted by lowest triangle index.
    """
    if angle_tol is None:
        angle_tol = tol.region_merge_angle
    cos_tol = np.cos(angle_tol)
    normals = mesh.triangle_normals()
    areas = mesh.triangle_areas()

    edge_owner: dict[tuple[int, int], list] = {}
    for ti, (a, b, c) in enumerate(mesh.triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_owner.setdefault((min(u, v), max(u, v)), []).append(ti)

    m = len(mesh.triangles)
    assigned = np.full(m, -1, dtype=int)
    groups = []
    for seed in range(m):
        if assigned[seed] >= 0:
            continue
        gid = len(groups)
        assigned[seed] = gid
        members = [seed]
        stack = [seed]
        ref_point = mesh.vertices[mesh.triangles[seed][0]]
        ref_normal = normals[seed]
        while stack:
            ti = stack.pop()
            a, b, c = mesh.triangles[ti]
            for u, v in ((a, b), (b, c), (c, a)):
                for tj in edge_owner[(min(u, v), max(u, v))]:
                    if assigned[tj] >= 0:
                        continue
                    if normals[tj] @ ref_normal < cos_tol:
                        continue
                    # coplanarity guard: reject parallel-but-offset steps
                    pj = mesh.vertices[mesh.triangles[tj][0]]
                    if abs((pj - ref_point) @ ref_normal) > max(tol.geom_eps, 1e-7):
                        continue
                    assigned[tj] = gid
                    members.append(tj)
                    stack.append(tj)
        groups.append(np.array(sorted(members)))

    regions = []
    for members in groups:
        a = areas[members]
        n = (normals[members] * a[:, None]).sum(axis=0)
        n /= np.linalg.norm(n)
        v0, v1, v2 = (mesh.vertices[mesh.triangles[members][:, k]] for k in range(3))
        centroid = ((v0 + v1 + v2) / 3.0 * a[:, None]).sum(axis=0) / a.sum()
        loops = _region_boundary_loops(mesh, members)
        verts_idx = np.unique(mesh.triangles[members].ravel())
        axes = _pca_axes(mesh.vertices[verts_idx], n)
        regions.append(SurfaceRegion(members, n, centroid, float(a.sum()), loops, axes))
    regions.sort(key=lambda r: int(r.triangle_indices[0]))
    return regions

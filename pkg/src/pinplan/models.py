"""Built-in test objects.

Small parametric solids used by the test suite, the benchmark harness
demos, and `pinplan mesh-gen`: boxes, a regular tetrahedron, an
L-bracket extrusion, a pot-lid (beveled disk with an offset handle),
and a four-armed cross extrusion. All dimensions in meters.
"""

from __future__ import annotations

import numpy as np

from .geometry.mesh import Mesh, _drop_degenerate, _repair_winding, _weld


def _finish(verts, tris, name: str) -> Mesh:
    v = np.asarray(verts, dtype=np.float64)
    t = np.asarray(tris, dtype=np.int64)
    v, t = _weld(v, t, 1e-9)
    t = _drop_degenerate(v, t, 1e-12)
    t = _repair_winding(v, t)
    used = np.zeros(len(v), dtype=bool)
    used[t.ravel()] = True
    remap = np.cumsum(used) - 1
    return Mesh(v[used], remap[t], name)


def box_mesh(sx: float, sy: float, sz: float, origin=(0.0, 0.0, 0.0),
             name: str = "box") -> Mesh:
    """Axis-aligned box spanning origin .. origin + (sx, sy, sz)."""
    ox, oy, oz = origin
    v = np.array([[x, y, z]
                  for z in (oz, oz + sz)
                  for y in (oy, oy + sy)
                  for x in (ox, ox + sx)])
    # indices: bit0 = +x, bit1 = +y, bit2 = +z
    quads = [
        (0, 2, 3, 1),  # bottom, -z
        (4, 5, 7, 6),  # top, +z
        (0, 1, 5, 4),  # -y
        (2, 6, 7, 3),  # +y
        (0, 4, 6, 2),  # -x
        (1, 3, 7, 5),  # +x
    ]
    tris = []
    for a, b, c, d in quads:
        tris += [[a, b, c], [a, c, d]]
    return _finish(v, tris, name)


def regular_tetrahedron(edge: float = 0.06, name: str = "tetra") -> Mesh:
    s3, s6 = np.sqrt(3.0), np.sqrt(6.0)
    v = edge * np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.5, s3 / 2.0, 0.0],
        [0.5, s3 / 6.0, s6 / 3.0],
    ])
    tris = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]]
    return _finish(v, tris, name)


def extrude_polygon(poly_xy, z0: float, z1: float, fan_point=None,
                    name: str = "prism") -> Mesh:
    """Extrude a CCW simple polygon along z. The polygon must be
    star-shaped as seen from fan_point (default: its first vertex)."""
    poly = np.asarray(poly_xy, dtype=float)
    n = len(poly)
    verts = []
    for z in (z0, z1):
        for p in poly:
            verts.append([p[0], p[1], z])
    bot = list(range(n))
    top = list(range(n, 2 * n))
    tris = []
    if fan_point is None:
        # fan from vertex 0
        for k in range(1, n - 1):
            tris.append([bot[0], bot[k + 1], bot[k]])
            tris.append([top[0], top[k], top[k + 1]])
    else:
        cb, ct = 2 * n, 2 * n + 1
        verts.append([fan_point[0], fan_point[1], z0])
        verts.append([fan_point[0], fan_point[1], z1])
        for k in range(n):
            tris.append([cb, bot[(k + 1) % n], bot[k]])
            tris.append([ct, top[k], top[(k + 1) % n]])
    for k in range(n):
        a, b = bot[k], bot[(k + 1) % n]
        c, d = top[(k + 1) % n], top[k]
        tris += [[a, b, c], [a, c, d]]
    return _finish(verts, tris, name)


def l_bracket(size: float = 0.09, thickness: float = 0.03,
              depth: float = 0.09, name: str = "l_bracket") -> Mesh:
    """L-section prism: two joined bars of the given thickness, bounded
    in a size x size x depth box."""
    s, t = size, thickness
    poly = [(0, 0), (s, 0), (s, t), (t, t), (t, s), (0, s)]
    return extrude_polygon(poly, 0.0, depth, name=name)


def cross_bracket(span: float = 0.09, width: float = 0.03,
                  thickness: float = 0.03, name: str = "cross") -> Mesh:
    """Four-armed plus-sign prism, span x span x thickness."""
    s, w = span / 2.0, width / 2.0
    poly = [(s, -w), (s, w), (w, w), (w, s), (-w, s), (-w, w),
            (-s, w), (-s, -w), (-w, -w), (-w, -s), (w, -s), (w, -w)]
    return extrude_polygon(poly, 0.0, thickness, fan_point=(0.0, 0.0), name=name)


def pot_lid(n_sides: int = 12, rim_radius: float = 0.045,
            ring_inner: float = 0.030, dome_height: float = 0.010,
            bulge: float = 0.004, plate_top: float = 0.012,
            handle_size=(0.02, 0.05, 0.035), handle_offset: float = 0.018,
            name: str = "pot_lid") -> Mesh:
    """Pot-lid-like solid: a domed n-gon disk with an offset handle
    block on top.

    The underside is a flat rim ring (graspable against the top plate)
    around a conical dome, so a support pin can prop the lid over a wide
    range of tilts. The rim bulges outward at mid-height, which keeps
    the lid from standing on its edge.
    """
    profile = [
        (0.0, dome_height),             # dome apex (underside center)
        (ring_inner, 0.0),              # dome foot / ring inner
        (rim_radius, 0.0),              # rim bottom
        (rim_radius + bulge, plate_top / 2.0),  # rim bulge
        (rim_radius, plate_top),        # rim top
    ]
    ang = 2.0 * np.pi * np.arange(n_sides) / n_sides
    ring = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    verts = []
    rows = []
    for r, z in profile:
        if r == 0.0:
            rows.append([len(verts)] * n_sides)
            verts.append([0.0, 0.0, z])
            continue
        row = []
        for p in ring:
            row.append(len(verts))
            verts.append([r * p[0], r * p[1], z])
        rows.append(row)
    top_center = len(verts)
    verts.append([0.0, 0.0, plate_top])
    tris = []
    for k in range(n_sides):
        k2 = (k + 1) % n_sides
        # underside strips wind so normals point down/outward
        for ra, rb in zip(rows[:-1], rows[1:]):
            quad = {ra[k], ra[k2], rb[k], rb[k2]}
            if len(quad) < 3:
                continue
            if ra[k] == ra[k2]:  # apex fan
                tris.append([ra[k], rb[k], rb[k2]])
            else:
                tris += [[ra[k], rb[k], rb[k2]], [ra[k], rb[k2], ra[k2]]]
        tris.append([top_center, rows[-1][k], rows[-1][k2]])  # top plate
    disk = _finish(verts, tris, name)

    hx, hy, hz = handle_size
    handle = box_mesh(hx, hy, hz,
                      origin=(handle_offset - hx / 2.0, -hy / 2.0, plate_top),
                      name="handle")
    off = len(disk.vertices)
    v = np.vstack([disk.vertices, handle.vertices])
    t = np.vstack([disk.triangles, handle.triangles + off])
    return Mesh(v, t, name)


BUILTIN_MODELS = {
    "cube6": lambda: box_mesh(0.06, 0.06, 0.06, name="cube6"),
    "tetra": lambda: regular_tetrahedron(0.06),
    "l_bracket": l_bracket,
    "cross": cross_bracket,
    "pot_lid": pot_lid,
    "pot_lid_fine": lambda: pot_lid(n_sides=120, name="pot_lid_fine"),
}


def make_model(name: str) -> Mesh:
    try:
        return BUILTIN_MODELS[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choices: {sorted(BUILTIN_MODELS)}") from None

"""Stable placement enumeration.

Two placement families: planar (object resting on one merged hull face)
and pin-supported (object touching a vertical pin tip at a surface
sample x while one convex-hull edge e rests on the floor). The pin base
point b solves

    ||x - b|| = l,   (x - b) . (e1 - b) = 0,   (x - b) . (e2 - b) = 0

which has two, one, or zero solutions depending on the distance from x
to the edge line. Candidates are filtered by pin/object collision,
static stability of the COM over the support region, and a Coulomb
friction cone at the touch point; per hull edge only the surviving
placement with the highest center of mass is kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .geometry.hull import ConvexHull
from .geometry.mesh import Mesh, mass_properties
from .geometry.predicates import (point_in_convex_polygon_2d,
                                  point_in_triangle_projection,
                                  segment_intersects_mesh)
from .geometry.sampling import SurfaceSample
from .transforms import RigidTransform

PLACEMENTS_SCHEMA = "pinplan/placements/1"


class DegenerateFrame(ValueError):
    """Support points (e1, e2, b) are collinear; no resting plane."""


def solve_pin_base(x, e1, e2, l: float) -> list[np.ndarray]:
    """Pin base points satisfying the three contact constraints.

    Returns zero solutions when the distance from x to the edge line is
    below l, one at exact tangency, else two (mirror images across the
    plane spanned by the edge and x).
    """
    x = np.asarray(x, float)
    e1 = np.asarray(e1, float)
    e2 = np.asarray(e2, float)
    if l <= 0.0:
        return []
    u = e2 - e1
    un = np.linalg.norm(u)
    if un < 1e-15:
        raise ValueError("edge endpoints coincide")
    u = u / un
    q = e1 + ((x - e1) @ u) * u      # foot of perpendicular from x
    h_vec = x - q
    h = float(np.linalg.norm(h_vec))
    if h < l - 1e-12 or h < 1e-15:
        return []
    v = h_vec / h
    c = h - l * l / h                # offset toward x along v
    w2 = l * l * (h * h - l * l)
    if w2 <= (1e-12 * l * h) ** 2:   # tangency: single solution
        return [q + c * v]
    w = math.sqrt(w2) / h
    side = np.cross(u, v)
    return [q + c * v + w * side, q + c * v - w * side]


def pin_placement_pose(x, e1, e2, b, pin_base_world=(0.0, 0.0)) -> RigidTransform:
    """World pose putting the support plane through (e1, e2, b) on z=0,
    b at the requested floor location, and x vertically above b."""
    x = np.asarray(x, float)
    e1 = np.asarray(e1, float)
    e2 = np.asarray(e2, float)
    b = np.asarray(b, float)
    m = x - b
    l = np.linalg.norm(m)
    if l < 1e-15:
        raise DegenerateFrame("touch point coincides with pin base")
    m = m / l
    area2 = np.linalg.norm(np.cross(e2 - e1, b - e1))
    if area2 < 1e-15:
        raise DegenerateFrame("support points are collinear")
    u = e1 - b
    u = u - (u @ m) * m
    un = np.linalg.norm(u)
    if un < 1e-15:
        raise DegenerateFrame("edge endpoint over the pin base")
    u = u / un
    w = np.cross(m, u)
    rot = np.vstack([u, w, m])
    bw = np.array([pin_base_world[0], pin_base_world[1], 0.0])
    return RigidTransform(rot, bw - rot @ b)


@dataclass(frozen=True)
class PinPlacement:
    touch: SurfaceSample
    edge_index: int
    edge_points: np.ndarray      # (2, 3) object frame
    pin_base: np.ndarray         # (3,) object frame
    pin_length: float
    world_pose: RigidTransform
    com_height: float

    def __post_init__(self):
        ep = np.asarray(self.edge_points, float).reshape(2, 3)
        pb = np.asarray(self.pin_base, float).reshape(3)
        ep.flags.writeable = False
        pb.flags.writeable = False
        object.__setattr__(self, "edge_points", ep)
        object.__setattr__(self, "pin_base", pb)
        self._validate()

    def _validate(self, eps: float = 1e-9):
        x, b, l = self.touch.point, self.pin_base, self.pin_length
        e1, e2 = self.edge_points
        res = (abs(np.linalg.norm(x - b) - l),
               abs((x - b) @ (e1 - b)),
               abs((x - b) @ (e2 - b)))
        if max(res) > eps:
            raise ValueError(f"pin constraints violated: residuals {res}")
        zw = self.world_pose.apply(np.vstack([e1, e2, b]))[:, 2]
        xw = self.world_pose.apply(x)
        if max(abs(zw).max(), abs(xw[2] - l)) > eps:
            raise ValueError("world pose violates support-plane invariants")

    def constraint_residuals(self) -> tuple[float, float, float]:
        x, b = self.touch.point, self.pin_base
        e1, e2 = self.edge_points
        return (abs(float(np.linalg.norm(x - b)) - self.pin_length),
                abs(float((x - b) @ (e1 - b))),
                abs(float((x - b) @ (e2 - b))))

    def pin_segment_world(self) -> tuple[np.ndarray, np.ndarray]:
        base = self.world_pose.apply(self.pin_base)
        tip = self.world_pose.apply(self.touch.point)
        return base, tip

    def to_dict(self) -> dict:
        return {
            "kind": "pin",
            "touch_point": self.touch.point.tolist(),
            "touch_face": int(self.touch.face_index),
            "touch_normal": self.touch.normal.tolist(),
            "edge_index": int(self.edge_index),
            "edge_points": self.edge_points.tolist(),
            "pin_base": self.pin_base.tolist(),
            "pin_length": self.pin_length,
            "com_height": self.com_height,
            "pose": self.world_pose.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "PinPlacement":
        touch = SurfaceSample(np.array(d["touch_point"]), d["touch_face"],
                              np.array(d["touch_normal"]))
        return PinPlacement(touch, d["edge_index"], np.array(d["edge_points"]),
                            np.array(d["pin_base"]), d["pin_length"],
                            RigidTransform.from_dict(d["pose"]), d["com_height"])


@dataclass(frozen=True)
class PlanarPlacement:
    face_index: int
    support_polygon: np.ndarray  # (k, 3) object frame, ordered loop
    support_normal: np.ndarray   # (3,) outward (points down when resting)
    world_pose: RigidTransform

    def __post_init__(self):
        sp = np.asarray(self.support_polygon, float)
        sn = np.asarray(self.support_normal, float).reshape(3)
        sp.flags.writeable = False
        sn.flags.writeable = False
        object.__setattr__(self, "support_polygon", sp)
        object.__setattr__(self, "support_normal", sn)

    def to_dict(self) -> dict:
        return {
            "kind": "planar",
            "face_index": int(self.face_index),
            "support_polygon": self.support_polygon.tolist(),
            "support_normal": self.support_normal.tolist(),
            "pose": self.world_pose.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "PlanarPlacement":
        return PlanarPlacement(d["face_index"], np.array(d["support_polygon"]),
                               np.array(d["support_normal"]),
                               RigidTransform.from_dict(d["pose"]))


def check_stability(placement, com, margin: float = None,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """COM-over-support test with a barycentric margin.

    Pin case: the world COM must project inside the floor triangle
    (e1, e2, b). Planar case: inside the support polygon, shrunk by the
    equivalent fraction so triangle faces reproduce the same rule.
    """
    if margin is None:
        margin = tol.stability_margin
    com_w = placement.world_pose.apply(np.asarray(com, float))
    if isinstance(placement, PinPlacement):
        tri = placement.world_pose.apply(
            np.vstack([placement.edge_points, placement.pin_base]))
        return point_in_triangle_projection(com_w, tri[0], tri[1], tri[2], margin)
    poly_w = placement.world_pose.apply(placement.support_polygon)
    return point_in_convex_polygon_2d(com_w[:2], poly_w[:, :2], shrink=3.0 * margin)


def check_friction(placement: PinPlacement, mu: float) -> bool:
    """Coulomb cone test at the touch point: the pin axis must lie
    within arctan(mu) of the inward surface normal."""
    if mu <= 0.0:
        raise ValueError("friction factor must be positive")
    axis = placement.touch.point - placement.pin_base
    axis = axis / np.linalg.norm(axis)
    cosang = float(axis @ (-placement.touch.normal))
    angle = math.acos(min(1.0, max(-1.0, cosang)))
    return angle <= math.atan(mu) + 1e-12


def enumerate_planar_placements(mesh: Mesh, hull: ConvexHull,
                                tol: Tolerances = DEFAULT_TOLERANCES) -> list[PlanarPlacement]:
    """One placement per merged hull face whose COM projection is stable.

    The canonical pose puts the face on z=0 with its centroid at the
    origin and the first polygon edge along +x.
    """
    com = mass_properties(mesh).center_of_mass
    out = []
    for fi, face in enumerate(hull.faces):
        poly = hull.face_polygon(fi)
        n = face.normal
        u = poly[1] - poly[0]
        u = u - (u @ n) * n
        u = u / np.linalg.norm(u)
        up = -n
        v = np.cross(up, u)
        rot = np.vstack([u, v, up])
        pose = RigidTransform(rot, -rot @ face.centroid)
        cand = PlanarPlacement(fi, poly, n, pose)
        if check_stability(cand, com, tol=tol):
            out.append(cand)
    return out


def enumerate_pin_placements(mesh: Mesh, hull: ConvexHull,
                             samples: list[SurfaceSample], pin_length: float,
                             mu: float = 0.5, pin_base_world=(0.0, 0.0),
                             tol: Tolerances = DEFAULT_TOLERANCES,
                             keep_all: bool = False) -> list[PinPlacement]:
    """Enumerate valid edge-pin placements.

    For every (hull edge, surface sample) pair each base-point solution
    is kept only if the whole mesh stays above the support plane, the
    pin shaft is collision-free apart from its tip contact, the COM
    projects inside the support triangle, and the touch angle passes
    the friction cone. Per hull edge the survivor with the highest COM
    wins; `keep_all` retains every survivor (debug / tests).
    """
    if pin_length <= 0.0:
        return []
    com = mass_properties(mesh).center_of_mass
    verts = mesh.vertices
    l = pin_length
    xs = np.array([s.point for s in samples])
    ns = np.array([s.normal for s in samples])
    cone = math.atan(mu) + 1e-12
    results: list[PinPlacement] = []
    for edge_index in range(len(hull.edges)):
        e1, e2 = hull.edge_points(edge_index)
        u = e2 - e1
        u = u / np.linalg.norm(u)
        # vectorized base-point solutions for all samples at once
        q = e1 + np.outer((xs - e1) @ u, u)
        h_vec = xs - q
        h = np.linalg.norm(h_vec, axis=1)
        feas = h >= max(l - 1e-12, 1e-15)
        best = None
        survivors = []
        for si in np.nonzero(feas)[0]:
            x = xs[si]
            hv = h[si]
            v = h_vec[si] / hv
            c = hv - l * l / hv
            w2 = l * l * (hv * hv - l * l)
            if w2 <= (1e-12 * l * hv) ** 2:
                cands = [q[si] + c * v]
            else:
                w = math.sqrt(w2) / hv
                side = np.cross(u, v)
                cands = [q[si] + c * v + w * side, q[si] + c * v - w * side]
            for b in cands:
                axis = (x - b) / l  # world up direction for this candidate
                # friction cone at the tip, then COM-over-triangle, then
                # whole mesh above the support plane; collision last
                cosang = float(axis @ (-ns[si]))
                if math.acos(min(1.0, max(-1.0, cosang))) > cone:
                    continue
                try:
                    if not point_in_triangle_projection(com, e1, e2, b,
                                                        tol.stability_margin):
                        continue
                except ValueError:  # collinear support points
                    continue
                floor = float(b @ axis)
                if float((verts @ axis).min()) < floor - max(tol.geom_eps, 1e-12):
                    continue
                if segment_intersects_mesh(b, x, mesh,
                                           exclude_radius=tol.contact_clearance,
                                           exclude_center=x):
                    continue
                try:
                    pose = pin_placement_pose(x, e1, e2, b, pin_base_world)
                except DegenerateFrame:
                    continue
                placement = PinPlacement(samples[si], edge_index,
                                         np.vstack([e1, e2]), b, l, pose,
                                         float((com - b) @ axis))
                if keep_all:
                    survivors.append(placement)
                if best is None or placement.com_height > best.com_height + 1e-12:
                    best = placement
        if keep_all:
            results.extend(survivors)
        elif best is not None:
            results.append(best)

    if keep_all:
        return results
    # drop near-identical poses arising from different edges
    unique: list[PinPlacement] = []
    for p in results:
        if not any(p.world_pose.almost_equal(q.world_pose, tol.pose_dedup,
                                             tol.pose_dedup) for q in unique):
            unique.append(p)
    return unique


@dataclass(frozen=True)
class PlacementSet:
    planar: tuple
    pin: tuple
    pin_length: float
    mu: float
    stability_margin: float
    sample_step: float
    mesh_hash: str

    @property
    def all_placements(self) -> tuple:
        """Planar placements first, then pin; index order is the node
        order used by the regrasp graph."""
        return self.planar + self.pin

    def to_dict(self) -> dict:
        return {
            "schema": PLACEMENTS_SCHEMA,
            "parameters": {
                "pin_length": self.pin_length,
                "mu": self.mu,
                "stability_margin": self.stability_margin,
            },
            "provenance": {
                "mesh_hash": self.mesh_hash,
                "sample_step": self.sample_step,
            },
            "planar": [p.to_dict() for p in self.planar],
            "pin": [p.to_dict() for p in self.pin],
        }

    @staticmethod
    def from_dict(d: dict) -> "PlacementSet":
        if d.get("schema") != PLACEMENTS_SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        params = d["parameters"]
        return PlacementSet(
            planar=tuple(PlanarPlacement.from_dict(x) for x in d["planar"]),
            pin=tuple(PinPlacement.from_dict(x) for x in d["pin"]),
            pin_length=params["pin_length"],
            mu=params["mu"],
            stability_margin=params["stability_margin"],
            sample_step=d["provenance"]["sample_step"],
            mesh_hash=d["provenance"]["mesh_hash"],
        )


def build_placement_set(mesh: Mesh, hull: ConvexHull,
                        samples: list[SurfaceSample], pin_length: float,
                        mu: float = 0.5, sample_step: float = 0.01,
                        include_pin: bool = True,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> PlacementSet:
    planar = enumerate_planar_placements(mesh, hull, tol=tol)
    pin = (enumerate_pin_placements(mesh, hull, samples, pin_length, mu, tol=tol)
           if include_pin else [])
    return PlacementSet(tuple(planar), tuple(pin), pin_length, mu,
                        tol.stability_margin, sample_step, mesh.content_hash())

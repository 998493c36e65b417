"""Parallel-jaw grasp generation and per-placement filtering.

The total grasp set comes from pairing flat surface regions whose
normals are anti-parallel and whose projected outlines overlap: each
pair contributes `density` hand orientations spread evenly around the
common normal, centered at the overlap centroid. Per placement, grasps
are re-checked in the world frame against the floor half-space, the
support pin, and an optional gravity-torque limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Polygon

from .config import DEFAULT_TOLERANCES, Tolerances
from .geometry import kernels
from .geometry.mesh import Mesh, mass_properties, mesh_regions
from .geometry.predicates import point_in_mesh
from .transforms import RigidTransform

GRASPS_SCHEMA = "pinplan/grasps/1"
GRAVITY = 9.81


@dataclass(frozen=True)
class GripperModel:
    """Parallel-jaw hand approximated as three boxes (two fingers + palm).

    Dimensions are a parametric stand-in for an 85 mm two-finger hand:
    finger_width is the jaw-direction thickness of each finger,
    finger_depth the pad extent across it, finger_length the reach along
    the approach axis, and tip_overshoot how far fingertips extend past
    the contact line.
    """

    max_opening: float = 0.085
    finger_width: float = 0.022
    finger_depth: float = 0.038
    finger_length: float = 0.087
    palm_depth: float = 0.04
    palm_width: float = 0.11
    palm_height: float = 0.06
    tip_overshoot: float = 0.008

    def __post_init__(self):
        dims = (self.max_opening, self.finger_width, self.finger_depth,
                self.finger_length, self.palm_depth, self.palm_width,
                self.palm_height)
        if min(dims) <= 0:
            raise ValueError("gripper dimensions must be positive")

    def boxes(self, center, jaw_axis, approach, opening, clearance=0.0):
        """Oriented boxes (center, axes rows, half extents) in the frame
        the grasp arguments are expressed in."""
        c = np.asarray(center, float)
        j = np.asarray(jaw_axis, float)
        a = np.asarray(approach, float)
        k = np.cross(j, a)
        axes = np.vstack([j, k, a])
        half_f = np.array([self.finger_width / 2.0, self.finger_depth / 2.0,
                           self.finger_length / 2.0])
        a_mid = self.tip_overshoot - self.finger_length / 2.0
        off = opening / 2.0 + clearance + self.finger_width / 2.0
        boxes = [
            (c + off * j + a_mid * a, axes, half_f),
            (c - off * j + a_mid * a, axes, half_f),
        ]
        palm_mid = self.tip_overshoot - self.finger_length - self.palm_depth / 2.0
        half_p = np.array([self.palm_width / 2.0, self.palm_height / 2.0,
                           self.palm_depth / 2.0])
        boxes.append((c + palm_mid * a, axes, half_p))
        return boxes

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "max_opening", "finger_width", "finger_depth", "finger_length",
            "palm_depth", "palm_width", "palm_height", "tip_overshoot")}


@dataclass(frozen=True)
class Grasp:
    id: int
    center: np.ndarray     # (3,) object frame
    jaw_axis: np.ndarray   # (3,) unit, closing direction
    approach: np.ndarray   # (3,) unit, perpendicular to jaw_axis
    opening: float         # jaw separation at contact

    def __post_init__(self):
        c = np.asarray(self.center, float).reshape(3)
        j = np.asarray(self.jaw_axis, float).reshape(3)
        a = np.asarray(self.approach, float).reshape(3)
        if abs(np.linalg.norm(j) - 1) > 1e-9 or abs(np.linalg.norm(a) - 1) > 1e-9:
            raise ValueError("grasp axes must be unit vectors")
        if abs(j @ a) > 1e-9:
            raise ValueError("approach must be perpendicular to the jaw axis")
        for name, arr in (("center", c), ("jaw_axis", j), ("approach", a)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def transformed(self, pose: RigidTransform) -> "Grasp":
        return Grasp(self.id, pose.apply(self.center),
                     pose.apply_vector(self.jaw_axis),
                     pose.apply_vector(self.approach), self.opening)

    def to_dict(self) -> dict:
        return {"id": self.id, "center": self.center.tolist(),
                "jaw_axis": self.jaw_axis.tolist(),
                "approach": self.approach.tolist(), "opening": self.opening}

    @staticmethod
    def from_dict(d: dict) -> "Grasp":
        return Grasp(d["id"], np.array(d["center"]), np.array(d["jaw_axis"]),
                     np.array(d["approach"]), d["opening"])


@dataclass(frozen=True)
class PlacementGrasps:
    placement_index: int
    grasp_ids: tuple

    def to_dict(self) -> dict:
        return {"placement_index": self.placement_index,
                "grasp_ids": list(self.grasp_ids)}


@dataclass(frozen=True)
class Scene:
    """World-frame obstacles a grasp is checked against: the floor
    half-space z < 0 and, optionally, the support pin segment."""

    pin_base: np.ndarray | None = None
    pin_tip: np.ndarray | None = None

    @staticmethod
    def floor_only() -> "Scene":
        return Scene()

    @staticmethod
    def with_pin(base, tip) -> "Scene":
        return Scene(np.asarray(base, float), np.asarray(tip, float))

    @property
    def has_pin(self) -> bool:
        return self.pin_base is not None


def check_force_closure(p1, n1, p2, n2, mu: float) -> bool:
    """Two-finger antipodal condition: the contact line must lie inside
    both friction cones of half-angle arctan(mu)."""
    if mu <= 0:
        raise ValueError("friction factor must be positive")
    p1 = np.asarray(p1, float)
    p2 = np.asarray(p2, float)
    d = p2 - p1
    dn = np.linalg.norm(d)
    if dn < 1e-15:
        raise ValueError("contact points coincide")
    d = d / dn
    cone = math.atan(mu) + 1e-12
    a1 = math.acos(min(1.0, max(-1.0, float(d @ (-np.asarray(n1, float))))))
    a2 = math.acos(min(1.0, max(-1.0, float(-d @ (-np.asarray(n2, float))))))
    return a1 <= cone and a2 <= cone


def _loops_to_polygon(loops, origin, u, v) -> Polygon:
    rings = []
    for loop in loops:
        rel = loop - origin
        rings.append(np.stack([rel @ u, rel @ v], axis=1))
    poly = Polygon(rings[0], rings[1:])
    if not poly.is_valid:
        poly = poly.buffer(0)
    return poly


def _gripper_collides(mesh: Mesh, boxes) -> bool:
    v0, v1, v2 = mesh.tri_corners
    for center, axes, half in boxes:
        if kernels.box_hits_triangles(center, axes, half, v0, v1, v2):
            return True
        if point_in_mesh(center, mesh):  # box fully inside the solid
            return True
    return False


def enumerate_total_grasps(mesh: Mesh, gripper: GripperModel = None,
                           density: int = 8, mu: float = 0.5,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> list[Grasp]:
    """Object-frame force-closure grasps over all parallel face pairs.

    Approach directions cover [0, 2pi) in `density` steps around the
    common normal, phase-aligned to the first region's major PCA axis.
    Grasps whose hand boxes hit the object are dropped here; floor and
    pin collisions are per-placement concerns.
    """
    if density < 1:
        raise ValueError("density must be >= 1")
    gripper = gripper or GripperModel()
    regions = mesh_regions(mesh, tol=tol)
    pair_cos = -math.cos(tol.region_merge_angle)
    com = mass_properties(mesh).center_of_mass
    grasps: list[Grasp] = []
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            ri, rj = regions[i], regions[j]
            if float(ri.normal @ rj.normal) > pair_cos:
                continue
            sep_i = float(ri.normal @ (ri.centroid - rj.centroid))
            sep_j = float(rj.normal @ (rj.centroid - ri.centroid))
            sep = 0.5 * (sep_i + sep_j)
            if sep <= 1e-6 or sep > gripper.max_opening:
                continue
            jaw = rj.normal - ri.normal
            jaw = jaw / np.linalg.norm(jaw)  # points from region i to j
            u = ri.axes[0] - (ri.axes[0] @ jaw) * jaw
            un = np.linalg.norm(u)
            if un < 1e-9:
                u = ri.axes[1] - (ri.axes[1] @ jaw) * jaw
                un = np.linalg.norm(u)
            u = u / un
            origin = 0.5 * (ri.centroid + rj.centroid)
            # phase the first approach toward the body of the object so
            # the hand starts on its most open side
            if float(u @ (com - origin)) < -1e-12:
                u = -u
            v = np.cross(jaw, u)
            pi = _loops_to_polygon(ri.boundary_loops, origin, u, v)
            pj = _loops_to_polygon(rj.boundary_loops, origin, u, v)
            overlap = pi.intersection(pj)
            if overlap.is_empty or overlap.area <= 1e-10:
                continue
            rep = overlap.centroid
            if not overlap.contains(rep):
                rep = overlap.representative_point()
            center = origin + rep.x * u + rep.y * v
            # contacts: exact projections of the center onto both planes
            p1 = center - float((center - ri.centroid) @ ri.normal) * ri.normal
            p2 = center - float((center - rj.centroid) @ rj.normal) * rj.normal
            if not check_force_closure(p1, ri.normal, p2, rj.normal, mu):
                continue
            for k in range(density):
                phi = 2.0 * math.pi * k / density
                approach = math.cos(phi) * u + math.sin(phi) * v
                approach = approach - (approach @ jaw) * jaw
                approach = approach / np.linalg.norm(approach)
                boxes = gripper.boxes(center, jaw, approach, sep,
                                      clearance=tol.contact_clearance)
                if _gripper_collides(mesh, boxes):
                    continue
                grasps.append(Grasp(len(grasps), center, jaw, approach, sep))
    return grasps


def _segment_hits_box(seg_a, seg_b, center, axes, half) -> bool:
    """Slab test for a segment against an oriented box."""
    a = (np.asarray(seg_a, float) - center) @ axes.T
    b = (np.asarray(seg_b, float) - center) @ axes.T
    d = b - a
    t0, t1 = 0.0, 1.0
    for k in range(3):
        if abs(d[k]) < 1e-15:
            if abs(a[k]) > half[k]:
                return False
            continue
        lo = (-half[k] - a[k]) / d[k]
        hi = (half[k] - a[k]) / d[k]
        if lo > hi:
            lo, hi = hi, lo
        t0 = max(t0, lo)
        t1 = min(t1, hi)
        if t0 > t1 + 1e-12:
            return False
    return True


def grasp_world_boxes(grasp: Grasp, pose: RigidTransform,
                      gripper: GripperModel,
                      tol: Tolerances = DEFAULT_TOLERANCES):
    g = grasp.transformed(pose)
    return g, gripper.boxes(g.center, g.jaw_axis, g.approach, g.opening,
                            clearance=tol.contact_clearance)


def grasp_feasible_in_scene(grasp: Grasp, pose: RigidTransform, scene: Scene,
                            gripper: GripperModel,
                            com_world=None, mass: float = 1.0,
                            max_torque: float = None,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """World-frame feasibility of one grasp for an object at `pose`."""
    g, boxes = grasp_world_boxes(grasp, pose, gripper, tol)
    for center, axes, half in boxes:
        min_z = center[2] - float(np.abs(axes[:, 2]) @ half)
        if min_z < -1e-9:
            return False
    if scene.has_pin:
        for center, axes, half in boxes:
            if _segment_hits_box(scene.pin_base, scene.pin_tip,
                                 center, axes, half):
                return False
    if max_torque is not None and com_world is not None:
        lever = np.asarray(com_world, float) - g.center
        torque = np.linalg.norm(np.cross(lever, [0.0, 0.0, -mass * GRAVITY]))
        if torque > max_torque:
            return False
    return True


def grasps_for_placement(total: list[Grasp], placement, scene: Scene,
                         gripper: GripperModel = None,
                         com=None, mass: float = 1.0,
                         max_torque: float = None,
                         tol: Tolerances = DEFAULT_TOLERANCES,
                         placement_index: int = 0) -> PlacementGrasps:
    """Subset of the total set that stays feasible for one placement:
    no box below the floor, no box through the pin, and optionally a
    gravity-torque bound about the grasp center."""
    gripper = gripper or GripperModel()
    pose = placement.world_pose
    com_w = pose.apply(np.asarray(com, float)) if com is not None else None
    kept = [g.id for g in total
            if grasp_feasible_in_scene(g, pose, scene, gripper, com_w, mass,
                                       max_torque, tol)]
    return PlacementGrasps(placement_index, tuple(sorted(kept)))


def total_grasps_to_dict(grasps: list[Grasp], mesh_hash: str,
                         gripper: GripperModel, density: int) -> dict:
    return {
        "schema": GRASPS_SCHEMA,
        "key": {"mesh_hash": mesh_hash, "gripper": gripper.to_dict(),
                "density": density},
        "grasps": [g.to_dict() for g in grasps],
    }

"""Rigid transforms (rotation + translation) used for placement poses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < 1e-15:
        raise ValueError("cannot normalize near-zero vector")
    return v / n


@dataclass(frozen=True)
class RigidTransform:
    """World pose as p_world = rotation @ p + translation."""

    rotation: np.ndarray   # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_basis(x_axis, y_axis, z_axis, translation) -> "RigidTransform":
        """Rotation sending the given orthonormal triad to world x/y/z."""
        r = np.vstack([_unit(np.asarray(x_axis, float)),
                       _unit(np.asarray(y_axis, float)),
                       _unit(np.asarray(z_axis, float))])
        return RigidTransform(r, np.asarray(translation, dtype=float))

    @staticmethod
    def yaw_about(yaw: float, center_xy=(0.0, 0.0)) -> "RigidTransform":
        """Rotation by yaw about the vertical axis through (cx, cy, 0)."""
        c, s = np.cos(yaw), np.sin(yaw)
        r = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        cx, cy = center_xy
        p = np.array([cx, cy, 0.0])
        return RigidTransform(r, p - r @ p)

    @staticmethod
    def translate(x: float, y: float, z: float = 0.0) -> "RigidTransform":
        return RigidTransform(np.eye(3), np.array([x, y, z]))

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def apply_vector(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec, dtype=float) @ self.rotation.T

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: (self @ other)(p) = self(other(p))."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def rotation_angle_to(self, other: "RigidTransform") -> float:
        """Geodesic angle between the two rotations."""
        rel = self.rotation.T @ other.rotation
        c = (np.trace(rel) - 1.0) / 2.0
        return float(np.arccos(np.clip(c, -1.0, 1.0)))

    def almost_equal(self, other: "RigidTransform",
                     rot_tol: float = 1e-9, trans_tol: float = 1e-9) -> bool:
        return (self.rotation_angle_to(other) <= rot_tol
                and float(np.linalg.norm(self.translation - other.translation)) <= trans_tol)

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(),
                "translation": self.translation.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "RigidTransform":
        return RigidTransform(np.array(d["rotation"], dtype=float),
                              np.array(d["translation"], dtype=float))

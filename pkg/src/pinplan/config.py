"""Shared numeric tolerances.

All geometric predicates in the library pull their epsilons from one
record so that a single object can be threaded through a whole pipeline
run and serialized next to the results.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Length tolerances are meters, angles radians."""

    geom_eps: float = 1e-9           # point-on-plane / residual checks
    weld: float = 1e-6               # vertex dedup distance on load
    hull_merge_angle: float = 1e-6   # coplanar hull-face merging
    region_merge_angle: float = 1e-3 # coplanar mesh-region flood fill
    stability_margin: float = 0.01   # barycentric margin for COM support
    pose_dedup: float = 1e-6         # placements closer than this are one
    contact_clearance: float = 1e-3  # legal touch radius (pin tip, jaws)
    match_rot: float = 1e-3          # pose-to-placement matching, rotation
    match_trans: float = 1e-3        # pose-to-placement matching, translation


DEFAULT_TOLERANCES = Tolerances()

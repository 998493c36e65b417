"""Reorientation benchmark harness.

Reproduces the reorientation protocol: a rectangular workspace divided
into a grid, randomized init/goal planar poses at every grid corner,
the regrasp pin standing a fixed offset to the side, and planar-only
vs pin+planar planning compared over seeded trials. Also provides the
parameter sweeps (pin length, object scale, grasp density) and report
emission as JSON / CSV / SVG heatmap.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .geometry.hull import convex_hull
from .geometry.mesh import Mesh, mass_properties
from .geometry.sampling import sample_surface
from .graph import (HandPose, NoMatchingPlacement, PlanResult, RegraspGraph,
                    build_regrasp_graph, placement_pose_at, plan_regrasp)
from .grasps import (GripperModel, Scene, enumerate_total_grasps,
                     grasps_for_placement)
from .placements import PlacementSet, build_placement_set

REPORT_SCHEMA = "pinplan/bench-report/1"


class ConfigError(ValueError):
    """Degenerate or inconsistent benchmark configuration."""


@dataclass(frozen=True)
class ReachabilityModel:
    """Stand-in for arm inverse kinematics: a hand pose is feasible iff
    its position lies within a spherical shell around the base and its
    approach direction tilts no more than max_tilt from vertical-down."""

    base: tuple = (0.0, 0.0, 0.0)
    r_min: float = 0.15
    r_max: float = 0.81
    max_tilt: float = math.radians(60.0)

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max:
            raise ConfigError("need 0 < r_min < r_max")

    def __call__(self, hand: HandPose) -> bool:
        d = float(np.linalg.norm(np.asarray(hand.center) - np.asarray(self.base)))
        if not self.r_min <= d <= self.r_max:
            return False
        down = np.array([0.0, 0.0, -1.0])
        c = float(np.asarray(hand.approach) @ down)
        tilt = math.acos(min(1.0, max(-1.0, c)))
        return tilt <= self.max_tilt + 1e-12

    def to_dict(self) -> dict:
        return {"base": list(self.base), "r_min": self.r_min,
                "r_max": self.r_max, "max_tilt": self.max_tilt}


@dataclass(frozen=True)
class BenchConfig:
    workspace: tuple = (0.8, 0.6)          # meters (x extent, y extent)
    workspace_origin: tuple = (-0.4, 0.15)  # lower-left corner in world
    grid_cell: float = 0.04
    trials_per_corner: int = 10
    pin_length: float = 0.03
    mu: float = 0.5
    density: int = 8
    sample_step: float = 0.01
    sample_margin: float = 0.005
    intermediate_offset: tuple = (-0.20, 0.0)
    rng_seed: int = 0
    mode: str = "pin+planar"               # or "planar-only"
    object_scale: float = 1.0
    path_budget: int = 20
    max_torque: float | None = None
    object_mass: float = 1.0
    threads: int = 1

    def __post_init__(self):
        if self.trials_per_corner < 1:
            raise ConfigError("trials_per_corner must be >= 1")
        if self.grid_cell <= 0 or min(self.workspace) <= 0:
            raise ConfigError("degenerate workspace")
        for extent in self.workspace:
            cells = extent / self.grid_cell
            if abs(cells - round(cells)) > 1e-9:
                raise ConfigError("workspace must divide evenly into grid cells")
        if self.mode not in ("pin+planar", "planar-only"):
            raise ConfigError(f"unknown mode {self.mode!r}")

    @property
    def corner_counts(self) -> tuple[int, int]:
        """Corner lattice size (cols, rows): one corner per cell corner."""
        return (int(round(self.workspace[0] / self.grid_cell)) + 1,
                int(round(self.workspace[1] / self.grid_cell)) + 1)

    def corner_xy(self, ci: int, cj: int) -> tuple[float, float]:
        return (self.workspace_origin[0] + ci * self.grid_cell,
                self.workspace_origin[1] + cj * self.grid_cell)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "grid_cell", "trials_per_corner", "pin_length", "mu", "density",
            "sample_step", "sample_margin", "rng_seed", "mode",
            "object_scale", "path_budget", "max_torque", "object_mass",
            "threads")}
        d["workspace"] = list(self.workspace)
        d["workspace_origin"] = list(self.workspace_origin)
        d["intermediate_offset"] = list(self.intermediate_offset)
        return d

    @staticmethod
    def from_dict(d: dict) -> "BenchConfig":
        kwargs = dict(d)
        for key in ("workspace", "workspace_origin", "intermediate_offset"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return BenchConfig(**kwargs)


@dataclass(frozen=True)
class PlanningContext:
    """Everything derivable from (mesh, parameters): placements, grasps,
    per-placement grasp sets, and the graph-build wall time."""

    mesh: Mesh
    placements: PlacementSet
    grasps: tuple
    assoc: tuple
    gripper: GripperModel
    build_seconds: float


def build_planning_context(mesh: Mesh, config: BenchConfig,
                           gripper: GripperModel = None,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> PlanningContext:
    """Offline stage: placements, total grasps, and placement-grasp
    association with each placement's intrinsic scene (floor + own pin)."""
    gripper = gripper or GripperModel()
    t0 = time.perf_counter()
    if config.object_scale != 1.0:
        lo, hi = mesh.bounds()
        mesh = mesh.transformed(scale=config.object_scale,
                                about=(lo + hi) / 2.0,
                                name=f"{mesh.name}_x{config.object_scale:g}")
    hull = convex_hull(mesh, tol=tol)
    samples = sample_surface(mesh, config.sample_step, config.sample_margin, tol=tol)
    placements = build_placement_set(
        mesh, hull, samples, config.pin_length, config.mu,
        sample_step=config.sample_step,
        include_pin=(config.mode == "pin+planar"), tol=tol)
    grasps = enumerate_total_grasps(mesh, gripper, config.density,
                                    config.mu, tol=tol)
    com = mass_properties(mesh).center_of_mass
    assoc = []
    for idx, placement in enumerate(placements.all_placements):
        if idx < len(placements.planar):
            scene = Scene.floor_only()
        else:
            base, tip = placement.pin_segment_world()
            scene = Scene.with_pin(base, tip)
        assoc.append(grasps_for_placement(
            grasps, placement, scene, gripper, com=com,
            mass=config.object_mass, max_torque=config.max_torque,
            tol=tol, placement_index=idx))
    build_seconds = time.perf_counter() - t0
    return PlanningContext(mesh, placements, tuple(grasps), tuple(assoc),
                           gripper, build_seconds)


@dataclass(frozen=True)
class TrialRecord:
    corner: tuple          # (ci, cj)
    corner_xy: tuple
    trial: int
    init_placement: int
    goal_placement: int
    init_yaw: float
    goal_yaw: float
    success: bool
    transfers: int
    regrasp_count: int
    failure: str | None
    search_seconds: float

    def to_dict(self, with_timing: bool = True) -> dict:
        d = {"corner": list(self.corner), "corner_xy": list(self.corner_xy),
             "trial": self.trial, "init_placement": self.init_placement,
             "goal_placement": self.goal_placement,
             "init_yaw": self.init_yaw, "goal_yaw": self.goal_yaw,
             "success": self.success, "transfers": self.transfers,
             "regrasp_count": self.regrasp_count, "failure": self.failure}
        if with_timing:
            d["search_seconds"] = self.search_seconds
        return d


@dataclass(frozen=True)
class BenchReport:
    config: BenchConfig
    mesh_name: str
    mesh_hash: str
    trials: tuple
    build_seconds: float

    @property
    def success_rate(self) -> float:
        if not self.trials:
            return 0.0
        return sum(t.success for t in self.trials) / len(self.trials)

    @property
    def mean_sequence_length(self) -> float | None:
        """Mean transfers per successful trial; failures are excluded."""
        lengths = [t.transfers for t in self.trials if t.success]
        return statistics.fmean(lengths) if lengths else None

    def corner_stats(self) -> dict:
        """Per-corner success rate and mean successful length."""
        stats: dict[tuple, dict] = {}
        for t in self.trials:
            s = stats.setdefault(tuple(t.corner), {"n": 0, "ok": 0, "lengths": []})
            s["n"] += 1
            if t.success:
                s["ok"] += 1
                s["lengths"].append(t.transfers)
        return {
            c: {"success_rate": s["ok"] / s["n"],
                "mean_length": statistics.fmean(s["lengths"]) if s["lengths"] else None}
            for c, s in stats.items()
        }

    def timing_summary(self) -> dict:
        searches = sorted(t.search_seconds for t in self.trials)
        p95 = searches[min(len(searches) - 1, int(math.ceil(0.95 * len(searches))) - 1)] if searches else None
        return {"graph_build_seconds": self.build_seconds,
                "graph_search_mean_seconds": statistics.fmean(searches) if searches else None,
                "graph_search_p95_seconds": p95}

    def to_dict(self, with_timing: bool = False) -> dict:
        d = {
            "schema": REPORT_SCHEMA,
            "config": self.config.to_dict(),
            "mesh_name": self.mesh_name,
            "mesh_hash": self.mesh_hash,
            "aggregates": {
                "trials": len(self.trials),
                "success_rate": self.success_rate,
                "mean_sequence_length": self.mean_sequence_length,
            },
            "trials": [t.to_dict(with_timing=with_timing) for t in self.trials],
        }
        if with_timing:
            d["timing"] = self.timing_summary()
        return d


def _trial_rng(seed: int, ci: int, cj: int, trial: int) -> np.random.Generator:
    """Named splittable generator: Philox keyed per (seed, corner, trial)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(ci, cj, trial))
    return np.random.Generator(np.random.Philox(ss))


def run_trial(context: PlanningContext, config: BenchConfig,
              reach: ReachabilityModel, ci: int, cj: int, trial: int,
              tol: Tolerances = DEFAULT_TOLERANCES) -> TrialRecord:
    placements = context.placements
    n_planar = len(placements.planar)
    rng = _trial_rng(config.rng_seed, ci, cj, trial)
    x, y = config.corner_xy(ci, cj)
    if n_planar == 0:
        return TrialRecord((ci, cj), (x, y), trial, -1, -1, 0.0, 0.0, False,
                           0, 0, "no-placement-match", 0.0)
    init_p = int(rng.integers(n_planar))
    goal_p = int(rng.integers(n_planar))
    init_yaw = float(rng.uniform(0.0, 2.0 * math.pi))
    goal_yaw = float(rng.uniform(0.0, 2.0 * math.pi))
    init_pose = placement_pose_at(placements, init_p, x, y, init_yaw)
    goal_pose = placement_pose_at(placements, goal_p, x, y, goal_yaw)
    inter = (x + config.intermediate_offset[0], y + config.intermediate_offset[1])
    t0 = time.perf_counter()
    try:
        result = plan_regrasp(placements, list(context.grasps),
                              list(context.assoc), init_pose, goal_pose,
                              oracle=reach, mode=config.mode,
                              intermediate_xy=inter, gripper=context.gripper,
                              path_budget=config.path_budget, tol=tol)
    except NoMatchingPlacement:
        result = PlanResult(False, failure="no-placement-match")
    dt = time.perf_counter() - t0
    return TrialRecord((ci, cj), (x, y), trial, init_p, goal_p, init_yaw,
                       goal_yaw, result.feasible, result.transfers,
                       result.regrasp_count if result.feasible else 0,
                       result.failure, dt)


def run_reorientation_benchmark(mesh: Mesh, config: BenchConfig,
                                reach: ReachabilityModel = None,
                                context: PlanningContext = None,
                                tol: Tolerances = DEFAULT_TOLERANCES) -> BenchReport:
    """Seeded grid benchmark; deterministic for a fixed config.

    A prebuilt PlanningContext may be supplied to amortize the offline
    stage across seeds (it must match the mesh and config parameters).
    """
    reach = reach or ReachabilityModel()
    if context is None:
        context = build_planning_context(mesh, config, tol=tol)
    cols, rows = config.corner_counts
    jobs = [(ci, cj, t)
            for cj in range(rows) for ci in range(cols)
            for t in range(config.trials_per_corner)]
    if config.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(
                lambda j: run_trial(context, config, reach, *j, tol=tol), jobs))
        trials = {(r.corner[0], r.corner[1], r.trial): r for r in results}
        ordered = tuple(trials[j] for j in jobs)
    else:
        ordered = tuple(run_trial(context, config, reach, *j, tol=tol)
                        for j in jobs)
    return BenchReport(config, context.mesh.name, context.mesh.content_hash(),
                       ordered, context.build_seconds)


SWEEP_AXES = {"pin_length", "object_scale", "density"}


def sweep(mesh: Mesh, config: BenchConfig, axis: str, values,
          reach: ReachabilityModel = None,
          tol: Tolerances = DEFAULT_TOLERANCES) -> list[BenchReport]:
    """One benchmark per value of the chosen axis; seeds are derived as
    rng_seed + index so runs stay independent but reproducible."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choices: {sorted(SWEEP_AXES)}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    reports = []
    for k, value in enumerate(values):
        cfg = replace(config, **{axis: (int(value) if axis == "density" else float(value)),
                                 "rng_seed": config.rng_seed + k})
        reports.append(run_reorientation_benchmark(mesh, cfg, reach, tol=tol))
    return reports


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _heat_color(rate: float) -> str:
    """Continuous red (0) to blue (1)."""
    rate = min(1.0, max(0.0, rate))
    r = int(round(255 * (1.0 - rate)))
    b = int(round(255 * rate))
    return f"#{r:02x}00{b:02x}"


def emit_report(report: BenchReport, fmt: str) -> bytes:
    """Serialize a report: full JSON, per-corner CSV, or SVG heatmap."""
    if not report.trials:
        raise ValueError("refusing to emit a report with no trials")
    fmt = fmt.lower()
    if fmt == "json":
        return (json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n").encode()
    if fmt == "csv":
        lines = ["corner_i,corner_j,x,y,trials,success_rate,mean_length"]
        stats = report.corner_stats()
        cols, rows = report.config.corner_counts
        for cj in range(rows):
            for ci in range(cols):
                s = stats[(ci, cj)]
                x, y = report.config.corner_xy(ci, cj)
                ml = "" if s["mean_length"] is None else f"{s['mean_length']:.6g}"
                lines.append(f"{ci},{cj},{x:.6g},{y:.6g},"
                             f"{report.config.trials_per_corner},"
                             f"{s['success_rate']:.6g},{ml}")
        return ("\n".join(lines) + "\n").encode()
    if fmt == "svg":
        return _heatmap_svg(report)
    raise ValueError(f"unknown report format {fmt!r}")


def _heatmap_svg(report: BenchReport) -> bytes:
    cfg = report.config
    cols, rows = cfg.corner_counts
    stats = report.corner_stats()
    px = 24
    w, h = cols * px, rows * px
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h + 20}" '
             f'viewBox="0 0 {w} {h + 20}">',
             f'<text x="2" y="{h + 14}" font-size="10">'
             f'{report.mesh_name} {cfg.mode} success rate (red=0, blue=1)</text>']
    for cj in range(rows):
        for ci in range(cols):
            rate = stats[(ci, cj)]["success_rate"]
            # y axis points up in the workspace, down in SVG
            parts.append(f'<rect x="{ci * px}" y="{(rows - 1 - cj) * px}" '
                         f'width="{px}" height="{px}" fill="{_heat_color(rate)}">'
                         f'<title>corner ({ci},{cj}): {rate:.2f}</title></rect>')
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode()


def write_report_dir(report: BenchReport, out_dir, library_version: str = "0") -> None:
    """Write report.json / corners.csv / heatmap.svg plus a manifest.

    Timings and the timestamp only live in the manifest, so every other
    artifact is byte-identical across repeated runs of the same config.
    """
    import pathlib

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_bytes(emit_report(report, "json"))
    (out / "corners.csv").write_bytes(emit_report(report, "csv"))
    (out / "heatmap.svg").write_bytes(emit_report(report, "svg"))
    manifest = {
        "schema": REPORT_SCHEMA + "+manifest",
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "library_version": library_version,
        "mesh_name": report.mesh_name,
        "mesh_hash": report.mesh_hash,
        "config": report.config.to_dict(),
        "timing": report.timing_summary(),
        "conventions": {
            "sequence_length": "transfers per plan; averaged over successful trials only",
            "pin": "pin stands at corner + intermediate_offset; planar intermediate stops are placed beside it",
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

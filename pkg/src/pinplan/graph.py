"""Two-layer regrasp graph and regrasp sequence search.

Layer 1 nodes are placements, connected when their valid grasp sets
intersect. Layer 2 holds per-placement grasp instances: for every
layer-1 edge, the shared grasps are linked across the two placements
and pairwise within each placement. Planning searches layer 1 for a
minimum-hop placement path, then backtracks over shared-grasp choices,
deferring the expensive hand-feasibility oracle to that stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .grasps import (Grasp, GripperModel, PlacementGrasps, Scene,
                     grasp_feasible_in_scene)
from .placements import PlacementSet
from .transforms import RigidTransform

GRAPH_SCHEMA = "pinplan/graph/1"


class NoMatchingPlacement(ValueError):
    """Requested pose does not match any enumerated placement."""


@dataclass(frozen=True)
class HandPose:
    """World pose of the hand at a pick or place moment."""

    center: np.ndarray
    approach: np.ndarray
    jaw_axis: np.ndarray

    @staticmethod
    def of(grasp: Grasp, object_pose: RigidTransform) -> "HandPose":
        g = grasp.transformed(object_pose)
        return HandPose(g.center, g.approach, g.jaw_axis)


@dataclass(frozen=True)
class RegraspGraph:
    nodes: tuple                 # placement indices (layer 1)
    assoc: dict                  # placement index -> frozenset of grasp ids
    layer1_edges: frozenset      # (i, j) with i < j
    layer2_nodes: tuple          # (placement index, grasp id)
    layer2_edges: frozenset      # pairs of layer-2 nodes
    neighbors: dict              # placement index -> sorted tuple

    def degree(self, node: int) -> int:
        return len(self.neighbors.get(node, ()))

    def shared_grasps(self, i: int, j: int) -> tuple:
        return tuple(sorted(self.assoc[i] & self.assoc[j]))

    def to_dict(self) -> dict:
        return {
            "schema": GRAPH_SCHEMA,
            "nodes": list(self.nodes),
            "assoc": {str(i): sorted(g) for i, g in sorted(self.assoc.items())},
            "layer1_edges": sorted(map(list, self.layer1_edges)),
            "layer2_nodes": [list(n) for n in self.layer2_nodes],
            "layer2_edges": sorted(sorted(map(list, e)) for e in self.layer2_edges),
        }

    def to_dot(self, labels: dict = None) -> str:
        """Layer-1 graph in DOT form for visual inspection."""
        lines = ["graph regrasp_layer1 {", "  node [shape=circle];"]
        labels = labels or {}
        for n in self.nodes:
            lines.append(f'  n{n} [label="{labels.get(n, f"p{n}")}"];')
        for i, j in sorted(self.layer1_edges):
            lines.append(f"  n{i} -- n{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_regrasp_graph(assoc: list[PlacementGrasps]) -> RegraspGraph:
    """Assemble both layers from per-placement grasp sets."""
    sets = {a.placement_index: frozenset(a.grasp_ids) for a in assoc}
    nodes = tuple(sorted(sets))
    by_grasp: dict[int, list] = {}
    for i in nodes:
        for g in sorted(sets[i]):
            by_grasp.setdefault(g, []).append(i)
    edges = set()
    for members in by_grasp.values():
        for a_i in range(len(members)):
            for b_i in range(a_i + 1, len(members)):
                edges.add((members[a_i], members[b_i]))
    l2_nodes = set()
    l2_edges = set()
    for i, j in edges:
        shared = sorted(sets[i] & sets[j])
        for g in shared:
            l2_nodes.add((i, g))
            l2_nodes.add((j, g))
            l2_edges.add(frozenset(((i, g), (j, g))))
        for a_i in range(len(shared)):
            for b_i in range(a_i + 1, len(shared)):
                gu, gv = shared[a_i], shared[b_i]
                l2_edges.add(frozenset(((i, gu), (i, gv))))
                l2_edges.add(frozenset(((j, gu), (j, gv))))
    neighbors = {n: [] for n in nodes}
    for i, j in edges:
        neighbors[i].append(j)
        neighbors[j].append(i)
    return RegraspGraph(nodes=nodes, assoc=sets,
                        layer1_edges=frozenset(edges),
                        layer2_nodes=tuple(sorted(l2_nodes)),
                        layer2_edges=frozenset(l2_edges),
                        neighbors={n: tuple(sorted(v)) for n, v in neighbors.items()})


def _bfs_distances(graph: RegraspGraph, source: int) -> dict:
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in graph.neighbors.get(u, ()):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def iter_placement_paths(graph: RegraspGraph, init: int, goal: int,
                         max_paths: int = None):
    """Simple init-goal paths ordered by (hop count, lexicographic node
    sequence); goal distances prune branches that cannot finish in time."""
    if init not in graph.assoc or goal not in graph.assoc:
        return
    dist = _bfs_distances(graph, goal)
    if init not in dist:
        return
    yielded = 0
    for hops in range(dist[init], len(graph.nodes)):
        stack = [(init, [init])]
        while stack:
            u, path = stack.pop()
            remaining = hops - (len(path) - 1)
            if remaining == 0:
                if u == goal:
                    yield path
                    yielded += 1
                    if max_paths is not None and yielded >= max_paths:
                        return
                continue
            for v in reversed(graph.neighbors.get(u, ())):
                if v in path:
                    continue
                if dist.get(v, math.inf) > remaining - 1:
                    continue
                stack.append((v, path + [v]))


def shortest_placement_path(graph: RegraspGraph, init: int, goal: int):
    """Minimum-hop placement path; ties broken by the lexicographically
    smallest index sequence. None when disconnected."""
    for path in iter_placement_paths(graph, init, goal, max_paths=1):
        return path
    return None


@dataclass(frozen=True)
class PlanResult:
    feasible: bool
    placement_path: tuple = ()
    grasp_sequence: tuple = ()   # (pick placement, grasp id, place placement)
    regrasp_count: int = 0
    failure: str | None = None

    @property
    def transfers(self) -> int:
        return len(self.grasp_sequence)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "placement_path": list(self.placement_path),
            "grasp_sequence": [list(t) for t in self.grasp_sequence],
            "regrasp_count": self.regrasp_count,
            "transfers": self.transfers,
            "failure": self.failure,
        }


def _transfer_legs(path: list) -> list:
    """(pick node, place node) index pairs along a placement path.

    A single-node path is one direct move from the initial to the goal
    pose; longer paths stop once at each interior placement, so a path
    of n nodes costs n - 1 transfers."""
    if len(path) == 1:
        return [(0, 0)]
    return [(k, k + 1) for k in range(len(path) - 1)]


def extract_grasp_sequence(graph: RegraspGraph, placement_path: list,
                           oracle=None, grasps: dict = None,
                           node_poses: list = None,
                           collision=None) -> PlanResult:
    """Assign a shared grasp to every transfer along one placement path.

    Backtracks over candidates in grasp-id order; consecutive transfers
    must use different grasps (each intermediate stop is a regrasp).
    `oracle` is the hand-feasibility predicate evaluated on the world
    hand pose at every pick and place moment; it needs `grasps` (id ->
    Grasp) and `node_poses` (per path node: (pick_pose, place_pose),
    entries may be None to skip). `collision` (grasp_id, node_idx,
    object_pose) -> bool layers scene checks on top.
    """
    path = list(placement_path)
    legs = _transfer_legs(path)
    if (oracle is not None or collision is not None) and node_poses is None:
        raise ValueError("pose-dependent checks need node_poses")
    if oracle is not None and grasps is None:
        raise ValueError("oracle needs grasp geometry (grasps mapping)")

    def moment_ok(gid: int, node_idx: int, which: int) -> bool:
        if node_poses is None:
            return True
        pose = node_poses[node_idx][which]
        if pose is None:
            return True
        if collision is not None and not collision(gid, node_idx, pose):
            return False
        if oracle is not None and not oracle(HandPose.of(grasps[gid], pose)):
            return False
        return True

    chosen: list[int] = []

    def backtrack(k: int) -> bool:
        if k == len(legs):
            return True
        pick_i, place_i = legs[k]
        a, b = path[pick_i], path[place_i]
        cands = (tuple(sorted(graph.assoc[a])) if a == b
                 else graph.shared_grasps(a, b))
        for gid in cands:
            if chosen and gid == chosen[-1]:
                continue
            if not moment_ok(gid, pick_i, 0) or not moment_ok(gid, place_i, 1):
                continue
            chosen.append(gid)
            if backtrack(k + 1):
                return True
            chosen.pop()
        return False

    if backtrack(0):
        seq = tuple((path[a], chosen[k], path[b])
                    for k, (a, b) in enumerate(legs))
        return PlanResult(True, tuple(path), seq, regrasp_count=len(seq) - 1)
    return PlanResult(False, tuple(path), (), 0, failure="oracle-exhausted")


def match_planar_pose(placements: PlacementSet, pose: RigidTransform,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    """Index of the planar placement whose canonical pose differs from
    `pose` by only a yaw and an in-plane translation."""
    for idx, p in enumerate(placements.planar):
        rel = pose.compose(p.world_pose.inverse())
        r = rel.rotation
        z_dev = math.acos(min(1.0, max(-1.0, float(r[2, 2]))))
        if z_dev > tol.match_rot:
            continue
        if abs(float(rel.translation[2])) > tol.match_trans:
            continue
        return idx
    raise NoMatchingPlacement("pose matches no enumerated planar placement")


def placement_pose_at(placements: PlacementSet, index: int, x: float,
                      y: float, yaw: float = 0.0) -> RigidTransform:
    """World pose of placement `index` yawed about its canonical origin
    and translated so that origin lands at (x, y)."""
    base = placements.all_placements[index].world_pose
    return RigidTransform.translate(x, y).compose(
        RigidTransform.yaw_about(yaw)).compose(base)


def plan_regrasp(placements: PlacementSet, grasps: list[Grasp],
                 assoc: list[PlacementGrasps], init_pose: RigidTransform,
                 goal_pose: RigidTransform, oracle=None,
                 mode: str = "pin+planar", intermediate_xy=(0.0, 0.0),
                 gripper: GripperModel = None, path_budget: int = 20,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> PlanResult:
    """End-to-end plan between two planar poses.

    mode "planar-only" restricts the graph to planar placements (the
    baseline arm of every benchmark); "pin+planar" admits both, with the
    scene pin standing at intermediate_xy. Pin placements stop on that
    pin; planar intermediate stops happen next to it on the free floor,
    so the pin obstructs them only through the hand-pin collision checks
    applied at pin stops and at the endpoints.
    """
    if mode not in ("planar-only", "pin+planar"):
        raise ValueError(f"unknown mode {mode!r}")
    gripper = gripper or GripperModel()
    n_planar = len(placements.planar)
    init_idx = match_planar_pose(placements, init_pose, tol)
    goal_idx = match_planar_pose(placements, goal_pose, tol)

    keep = range(n_planar) if mode == "planar-only" else range(len(placements.all_placements))
    graph = build_regrasp_graph([assoc[i] for i in keep])
    grasp_by_id = {g.id: g for g in grasps}

    ix, iy = float(intermediate_xy[0]), float(intermediate_xy[1])
    use_pin = mode == "pin+planar" and len(placements.pin) > 0
    pin_scene = None
    if use_pin:
        pin_scene = Scene.with_pin((ix, iy, 0.0),
                                   (ix, iy, placements.pin_length))

    def intermediate_pose(node: int) -> RigidTransform:
        return RigidTransform.translate(ix, iy).compose(
            placements.all_placements[node].world_pose)

    first = None
    for path in iter_placement_paths(graph, init_idx, goal_idx,
                                     max_paths=path_budget):
        if first is None:
            first = path
        node_poses = []
        scene_for = []
        last = len(path) - 1
        for k, node in enumerate(path):
            pick = place = None
            scene = Scene.floor_only()
            if k == 0:
                pick = init_pose
                scene = pin_scene or scene
            if k == last:
                place = goal_pose
                scene = pin_scene or scene
            if 0 < k < last:
                pick = place = intermediate_pose(node)
                # planar stops sit beside the pin on the open floor
                if use_pin and node >= n_planar:
                    scene = pin_scene
            node_poses.append((pick, place))
            scene_for.append(scene)

        def collision(gid, node_idx, object_pose, _scenes=tuple(scene_for)):
            return grasp_feasible_in_scene(grasp_by_id[gid], object_pose,
                                           _scenes[node_idx], gripper, tol=tol)

        result = extract_grasp_sequence(graph, path, oracle=oracle,
                                        grasps=grasp_by_id,
                                        node_poses=node_poses,
                                        collision=collision)
        if result.feasible:
            return result
    if first is None:
        return PlanResult(False, (), (), 0, failure="graph-disconnected")
    return PlanResult(False, tuple(first), (), 0, failure="oracle-exhausted")

"""Command-line front end.

Subcommands mirror the library pipeline: placements, grasps, graph,
plan, bench, sweep, plus mesh-gen for the built-in test objects. All
lengths are meters. Poses are given as placement_index,x,y,yaw. Exit
codes: 0 success (including feasible=false plans), 1 structured JSON
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import pathlib
import sys

import numpy as np

from . import __version__, models
from .bench import (BenchConfig, ConfigError, ReachabilityModel,
                    run_reorientation_benchmark, sweep, write_report_dir)
from .cache import PayloadCache, cache_key
from .config import DEFAULT_TOLERANCES
from .geometry.hull import convex_hull
from .geometry.mesh import (dump_obj, dump_stl_ascii, dump_stl_binary,
                            load_mesh_path, mass_properties)
from .geometry.sampling import sample_surface
from .graph import build_regrasp_graph, placement_pose_at, plan_regrasp
from .grasps import (GripperModel, Scene, enumerate_total_grasps,
                     grasps_for_placement, total_grasps_to_dict)
from .placements import PlacementSet, build_placement_set


class PipelineError(RuntimeError):
    pass


def _load_mesh(args):
    if getattr(args, "model", None):
        return models.make_model(args.model)
    if not args.mesh:
        raise PipelineError("provide --mesh FILE or --model NAME")
    return load_mesh_path(args.mesh)


def _mesh_key_bytes(mesh) -> bytes:
    return mesh.content_hash().encode()


def _build_placements(mesh, args) -> PlacementSet:
    hull = convex_hull(mesh)
    samples = sample_surface(mesh, args.step, args.margin)
    return build_placement_set(mesh, hull, samples, args.pin_length, args.mu,
                               sample_step=args.step,
                               include_pin=not args.planar_only)


def _placements_payload(mesh, args, cache: PayloadCache) -> bytes:
    key = cache_key("placements/1", _mesh_key_bytes(mesh),
                    dict(pin_length=args.pin_length, mu=args.mu,
                         step=args.step, margin=args.margin,
                         planar_only=args.planar_only))
    hit = cache.get(key)
    if hit is not None:
        return hit
    pset = _build_placements(mesh, args)
    payload = (json.dumps(pset.to_dict(), indent=2, sort_keys=True) + "\n").encode()
    cache.put(key, payload)
    return payload


def cmd_placements(args, cache):
    mesh = _load_mesh(args)
    sys.stdout.buffer.write(_placements_payload(mesh, args, cache))
    return 0


def cmd_grasps(args, cache):
    mesh = _load_mesh(args)
    gripper = GripperModel()
    key = cache_key("grasps/1", _mesh_key_bytes(mesh),
                    dict(density=args.density, mu=args.mu,
                         gripper=gripper.to_dict()))
    payload = cache.get(key)
    if payload is None:
        grasps = enumerate_total_grasps(mesh, gripper, args.density, args.mu)
        doc = total_grasps_to_dict(grasps, mesh.content_hash(), gripper, args.density)
        payload = (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
        cache.put(key, payload)
    sys.stdout.buffer.write(payload)
    return 0


def _context(mesh, args):
    gripper = GripperModel()
    pset = _build_placements(mesh, args)
    grasps = enumerate_total_grasps(mesh, gripper, args.density, args.mu)
    com = mass_properties(mesh).center_of_mass
    assoc = []
    for idx, placement in enumerate(pset.all_placements):
        if idx < len(pset.planar):
            scene = Scene.floor_only()
        else:
            scene = Scene.with_pin(*placement.pin_segment_world())
        assoc.append(grasps_for_placement(grasps, placement, scene, gripper,
                                          com=com, placement_index=idx))
    return pset, grasps, assoc, gripper


def cmd_graph(args, cache):
    mesh = _load_mesh(args)
    key = cache_key("graph/1", _mesh_key_bytes(mesh),
                    dict(pin_length=args.pin_length, mu=args.mu,
                         step=args.step, margin=args.margin,
                         density=args.density, planar_only=args.planar_only))
    payload = cache.get(key)
    if payload is None:
        pset, grasps, assoc, _ = _context(mesh, args)
        graph = build_regrasp_graph(assoc)
        payload = (json.dumps(graph.to_dict(), indent=2, sort_keys=True) + "\n").encode()
        cache.put(key, payload)
    if args.dot:
        pset, grasps, assoc, _ = _context(mesh, args)
        graph = build_regrasp_graph(assoc)
        labels = {i: ("planar" if i < len(pset.planar) else "pin") + f"{i}"
                  for i in graph.nodes}
        pathlib.Path(args.dot).write_text(graph.to_dot(labels))
    sys.stdout.buffer.write(payload)
    return 0


def _parse_pose(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise PipelineError("pose must be placement_index,x,y,yaw")
    return int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3])


def cmd_plan(args, cache):
    mesh = _load_mesh(args)
    pset, grasps, assoc, gripper = _context(mesh, args)
    i0, x0, y0, w0 = _parse_pose(args.init_pose)
    i1, x1, y1, w1 = _parse_pose(args.goal_pose)
    n = len(pset.planar)
    if not (0 <= i0 < n and 0 <= i1 < n):
        raise PipelineError(f"pose placement index out of range (planar count {n})")
    init_pose = placement_pose_at(pset, i0, x0, y0, w0)
    goal_pose = placement_pose_at(pset, i1, x1, y1, w1)
    pin_at = tuple(float(v) for v in args.pin_at.split(",")) if args.pin_at \
        else ((x0 - 0.20), y0)
    mode = "planar-only" if args.mode == "planar" else "pin+planar"
    reach = ReachabilityModel()
    result = plan_regrasp(pset, list(grasps), assoc, init_pose, goal_pose,
                          oracle=reach, mode=mode, intermediate_xy=pin_at,
                          gripper=gripper, path_budget=args.path_budget)
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


def _load_config_file(path) -> dict:
    p = pathlib.Path(path)
    data = p.read_bytes()
    if p.suffix.lower() == ".json":
        return json.loads(data)
    try:
        import tomllib  # python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(data.decode())


def _bench_setup(args):
    doc = _load_config_file(args.config)
    mesh_spec = doc.pop("mesh", None)
    model_spec = doc.pop("model", None)
    reach_doc = doc.pop("reachability", {})
    if "max_tilt_deg" in reach_doc:
        reach_doc["max_tilt"] = math.radians(reach_doc.pop("max_tilt_deg"))
    if "base" in reach_doc:
        reach_doc["base"] = tuple(reach_doc["base"])
    if args.seed is not None:
        doc["rng_seed"] = args.seed
    config = BenchConfig.from_dict(doc)
    if model_spec:
        mesh = models.make_model(model_spec)
    elif mesh_spec:
        mesh = load_mesh_path(pathlib.Path(args.config).parent / mesh_spec)
    else:
        raise PipelineError("bench config needs a 'mesh' path or 'model' name")
    return mesh, config, ReachabilityModel(**reach_doc)


def cmd_bench(args, cache):
    mesh, config, reach = _bench_setup(args)
    if args.threads:
        from dataclasses import replace

        config = replace(config, threads=args.threads)
    report = run_reorientation_benchmark(mesh, config, reach)
    write_report_dir(report, args.out, library_version=__version__)
    print(json.dumps({"out": str(args.out),
                      "trials": len(report.trials),
                      "success_rate": report.success_rate,
                      "mean_sequence_length": report.mean_sequence_length},
                     indent=2, sort_keys=True))
    return 0


def cmd_sweep(args, cache):
    mesh, config, reach = _bench_setup(args)
    axis = {"pin-length": "pin_length", "scale": "object_scale",
            "density": "density"}[args.axis]
    values = [float(v) for v in args.values]
    reports = sweep(mesh, config, axis, values, reach)
    out_root = pathlib.Path(args.out)
    summary = []
    for value, report in zip(values, reports):
        sub = out_root / f"{axis}_{value:g}"
        write_report_dir(report, sub, library_version=__version__)
        summary.append({"value": value, "success_rate": report.success_rate,
                        "mean_sequence_length": report.mean_sequence_length})
    print(json.dumps({"axis": axis, "results": summary}, indent=2, sort_keys=True))
    return 0


def cmd_mesh_gen(args, cache):
    mesh = models.make_model(args.name)
    out = pathlib.Path(args.out)
    if out.suffix.lower() == ".obj":
        out.write_bytes(dump_obj(mesh))
    elif out.suffix.lower() == ".stl":
        out.write_bytes(dump_stl_binary(mesh) if args.binary
                        else dump_stl_ascii(mesh))
    else:
        raise PipelineError("output must end in .obj or .stl")
    print(json.dumps({"model": args.name, "out": str(out),
                      "vertices": len(mesh.vertices),
                      "triangles": len(mesh.triangles)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinplan",
        description="Pick-and-place regrasp planning with a support pin")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=None,
                        help="override the RNG seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for bench")
    parser.add_argument("--cache-dir", default=None,
                        help="directory for cached pipeline payloads")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_mesh_opts(p):
        p.add_argument("--mesh", help="OBJ or STL file")
        p.add_argument("--model", help=f"built-in model: {sorted(models.BUILTIN_MODELS)}")
        p.add_argument("--step", type=float, default=0.01,
                       help="surface sampling step (m)")
        p.add_argument("--margin", type=float, default=0.005,
                       help="sample distance to face edges (m)")
        p.add_argument("--mu", type=float, default=0.5, help="friction factor")

    p = sub.add_parser("placements", help="enumerate stable placements")
    add_mesh_opts(p)
    p.add_argument("--pin-length", type=float, default=0.03)
    p.add_argument("--planar-only", action="store_true")
    p.set_defaults(fn=cmd_placements)

    p = sub.add_parser("grasps", help="enumerate the total grasp set")
    add_mesh_opts(p)
    p.add_argument("--density", type=int, default=8)
    p.set_defaults(fn=cmd_grasps)

    p = sub.add_parser("graph", help="build the two-layer regrasp graph")
    add_mesh_opts(p)
    p.add_argument("--pin-length", type=float, default=0.03)
    p.add_argument("--density", type=int, default=8)
    p.add_argument("--planar-only", action="store_true")
    p.add_argument("--dot", help="also write a layer-1 DOT file here")
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("plan", help="plan a regrasp sequence")
    add_mesh_opts(p)
    p.add_argument("--pin-length", type=float, default=0.03)
    p.add_argument("--density", type=int, default=8)
    p.add_argument("--init-pose", required=True,
                   help="placement_index,x,y,yaw")
    p.add_argument("--goal-pose", required=True,
                   help="placement_index,x,y,yaw")
    p.add_argument("--pin-at", help="pin base location X,Y "
                   "(default: 0.20 m left of the init pose)")
    p.add_argument("--mode", choices=("planar", "pin"), default="pin")
    p.add_argument("--path-budget", type=int, default=20)
    p.set_defaults(fn=cmd_plan, planar_only=False)

    p = sub.add_parser("bench", help="run the reorientation benchmark")
    p.add_argument("--config", required=True, help="TOML or JSON config")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("sweep", help="sweep pin length, scale, or density")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--axis", choices=("pin-length", "scale", "density"),
                   required=True)
    p.add_argument("--values", nargs="+", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("mesh-gen", help="write a built-in model to disk")
    p.add_argument("name", choices=sorted(models.BUILTIN_MODELS))
    p.add_argument("out", help="output path (.obj or .stl)")
    p.add_argument("--binary", action="store_true", help="binary STL")
    p.set_defaults(fn=cmd_mesh_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cache = PayloadCache(args.cache_dir)
    try:
        return args.fn(args, cache)
    except (PipelineError, ConfigError, ValueError, OSError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line pipeline: world generation, scan simulation, ground-truth
labeling, the sequential-aggregation baseline, evaluation, and rendering.

Stages compose through files so each is independently runnable and cacheable.
Logs are line-oriented key=value pairs to keep runs diffable.  Exit codes:
0 success, 1 usage error, 2 data/format error, 3 metric undefined.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from semvox import io, metrics
from semvox.errors import FormatError, MetricUndefinedError, SpecMismatchError
from semvox.grid import build_ground_truth, build_stack, naive_temporal_aggregate
from semvox.lidar import simulate_scan
from semvox.rig import sample_rig, sensor_world_pose
from semvox.world import actor_pose_at, load_world, save_world
from semvox.worldgen import PRESETS, generate_world

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_METRIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _log(**kv) -> None:
    print(" ".join(f"{k}={v}" for k, v in kv.items()), flush=True)


def _parse_frames(text, n_frames: int):
    """"A..B" is the half-open range [A, B); a single "N" means [N, N+1).
    Defaults to all frames."""
    if text is None:
        return range(n_frames)
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
    elif re.fullmatch(r"\d+", text):
        a, b = int(text), int(text) + 1
    else:
        raise _UsageError(f"bad --frames {text!r}; expected N or A..B")
    if a > b or b > n_frames:
        raise _UsageError(f"--frames {text} outside the manifest's {n_frames} frames")
    return range(a, b)


def _load_scene(args):
    """Manifest + world + effective rig/lidar/seed after CLI overrides."""
    manifest = io.load_manifest(args.manifest)
    world = load_world(manifest.resolve_world_path())
    rig = manifest.rig
    if getattr(args, "n_aux", None) is not None:
        rig = sample_rig(rig.bounds, args.n_aux, rig.seed)
    lidar = manifest.lidar
    if getattr(args, "noise_bound", None) is not None:
        lidar = dataclasses.replace(lidar, noise_bound=args.noise_bound)
    seed = manifest.seed if getattr(args, "seed", None) is None else args.seed
    r = manifest.free_step_m if getattr(args, "r", None) is None else args.r
    return manifest, world, rig, lidar, seed, r


def _ego_sensor_pose(world, rig, t):
    ego_idx = world.ego_index
    if ego_idx is None:
        raise FormatError("world has no ego actor")
    vehicle = actor_pose_at(world.actors[ego_idx], t)
    return sensor_world_pose(rig.ego_mount, vehicle), vehicle


def _simulate_frame(world, rig, lidar, seed, t, threads):
    """All sensor clouds for one frame, ego first."""
    _, vehicle = _ego_sensor_pose(world, rig, t)

    def one(args):
        sid, mount = args
        return simulate_scan(world, sensor_world_pose(mount, vehicle), t, lidar,
                             seed, sid)

    jobs = list(enumerate(rig.mounts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


# --- subcommands ---------------------------------------------------------------

def cmd_gen_world(args) -> int:
    world = generate_world(args.seed, args.preset)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_world(out, world)
    _log(command="gen-world", seed=args.seed, preset=args.preset, out=out,
         statics=len(world.statics), actors=len(world.actors))
    if args.manifest_out:
        from semvox.grid import GridSpec
        from semvox.lidar import LidarSpec
        from semvox.rig import RigBounds

        rig = sample_rig(RigBounds(), args.n_aux, args.seed)
        manifest = io.SceneManifest(
            world_path=out.name, seed=args.seed, frames=world.n_frames,
            tick_s=world.tick, traffic_preset=args.preset, free_step_m=1.5,
            lidar=LidarSpec(), rig=rig, grid=GridSpec.default(),
            base_dir=out.parent)
        io.save_manifest(args.manifest_out, manifest)
        _log(command="gen-world", manifest=args.manifest_out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    manifest, world, rig, lidar, seed, _ = _load_scene(args)
    frames = _parse_frames(args.frames, manifest.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if len(frames) == 0:
        _log(command="simulate", warning="empty frame range, nothing to do")
        return EXIT_OK
    poses = []
    for frame in frames:
        t = frame * manifest.tick_s
        clouds = _simulate_frame(world, rig, lidar, seed, t, args.threads)
        for cloud in clouds:
            io.write_cloud(out / f"cloud_{frame:06d}_s{cloud.sensor_id:02d}.csc", cloud)
        poses.append(clouds[0].sensor_pose)
        _log(command="simulate", frame=frame, t=f"{t:.3f}",
             points=sum(len(c) for c in clouds), sensors=len(clouds))
    io.write_poses(out / "poses.txt", poses)
    return EXIT_OK


def cmd_label(args) -> int:
    manifest, world, rig, lidar, seed, r = _load_scene(args)
    frames = _parse_frames(args.frames, manifest.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if len(frames) == 0:
        _log(command="label", warning="empty frame range, nothing to do")
        return EXIT_OK
    summary = []
    for frame in frames:
        t = frame * manifest.tick_s
        gt = build_ground_truth(world, rig, manifest.grid, t, lidar, r, seed,
                                threads=args.threads)
        io.write_grid(out / f"gt_{frame:06d}.csg", gt)
        frac = gt.valid_fraction
        summary.append(f"frame={frame} valid_fraction={frac:.6f}")
        _log(command="label", frame=frame, t=f"{t:.3f}", valid_fraction=f"{frac:.4f}")
    (out / "validity.txt").write_text("\n".join(summary) + "\n")
    return EXIT_OK


def cmd_aggregate_naive(args) -> int:
    manifest, world, rig, lidar, seed, r = _load_scene(args)
    frames = _parse_frames(args.frames, manifest.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if len(frames) == 0:
        _log(command="aggregate-naive", warning="empty frame range, nothing to do")
        return EXIT_OK
    ego_clouds: dict = {}

    def ego_cloud(frame):
        if frame not in ego_clouds:
            t = frame * manifest.tick_s
            _, vehicle = _ego_sensor_pose(world, rig, t)
            pose = sensor_world_pose(rig.ego_mount, vehicle)
            ego_clouds[frame] = simulate_scan(world, pose, t, lidar, seed, 0)
        return ego_clouds[frame]

    for frame in frames:
        first = frame - args.window + 1
        if first < 0:
            _log(command="aggregate-naive", frame=frame,
                 warning=f"window truncated to {frame + 1} frames")
            first = 0
        clouds = [ego_cloud(f) for f in range(first, frame + 1)]
        lg = naive_temporal_aggregate(clouds, manifest.grid, r)
        io.write_grid(out / f"naive_{frame:06d}.csg", lg)
        _log(command="aggregate-naive", frame=frame, window=len(clouds),
             valid_fraction=f"{lg.valid_fraction:.4f}")
    return EXIT_OK


def _grids_by_frame(directory) -> dict:
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"not a directory: {directory}")
    found = {}
    for path in sorted(directory.glob("*.csg")):
        m = re.search(r"(\d+)\.csg$", path.name)
        if m:
            found[int(m.group(1))] = path
    return found


def cmd_evaluate(args) -> int:
    preds = _grids_by_frame(args.pred)
    gts = _grids_by_frame(args.gt)
    if not gts:
        raise FormatError(f"no grids found under {args.gt}")
    if set(preds) != set(gts):
        raise FormatError(
            f"frame sets differ: prediction has {sorted(set(preds) - set(gts))} extra, "
            f"missing {sorted(set(gts) - set(preds))}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    cm_total = None
    geo_total = (0, 0, 0)
    trail_total = (0, 0)
    for frame in sorted(gts):
        pred = io.read_grid(preds[frame])
        gt = io.read_grid(gts[frame])
        cm = metrics.confusion(pred, gt)
        geo = metrics.geometric_tallies(pred, gt)
        trail = metrics.trace_tallies(pred, gt)
        reports[f"frame_{frame:06d}"] = metrics.report_from_parts(
            cm, geo, trail, miou_mode=args.miou_mode)
        cm_total = cm if cm_total is None else cm_total + cm
        geo_total = tuple(a + b for a, b in zip(geo_total, geo))
        trail_total = tuple(a + b for a, b in zip(trail_total, trail))
    reports["aggregate"] = metrics.report_from_parts(
        cm_total, geo_total, trail_total, miou_mode=args.miou_mode)
    (out / "report.json").write_text(metrics.report_json(reports))
    (out / "report.txt").write_text(metrics.report_table(reports))
    agg = reports["aggregate"]
    _log(command="evaluate", frames=len(gts), miou=f"{100 * agg.miou:.2f}",
         accuracy=f"{100 * agg.accuracy:.2f}",
         trace_rate="undefined" if agg.trace_rate is None else f"{agg.trace_rate:.6f}")
    print(metrics.report_table(reports) if args.format == "table"
          else metrics.report_json(reports), end="")
    return EXIT_OK


def cmd_render(args) -> int:
    grid = io.read_grid(args.grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.render_bev(grid, out)
    _log(command="render", grid=args.grid, out=out)
    return EXIT_OK


def cmd_stack(args) -> int:
    manifest, world, rig, lidar, seed, _ = _load_scene(args)
    frame = manifest.frames - 1 if args.frame is None else args.frame
    if not 0 <= frame < manifest.frames:
        raise _UsageError(f"--frame {frame} outside the manifest's {manifest.frames} frames")
    first = frame - args.window + 1
    if first < 0:
        _log(command="stack", warning=f"window truncated to {frame + 1} frames")
        first = 0
    clouds = []
    for f in range(first, frame + 1):
        t = f * manifest.tick_s
        _, vehicle = _ego_sensor_pose(world, rig, t)
        pose = sensor_world_pose(rig.ego_mount, vehicle)
        clouds.append(simulate_scan(world, pose, t, lidar, seed, 0))
    stack = build_stack(clouds, manifest.grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_stack(out, stack)
    _log(command="stack", frames=len(clouds), shape="x".join(map(str, stack.grids.shape)),
         out=out)
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def _add_scene_flags(p, with_r=True):
    p.add_argument("--manifest", required=True, help="scene manifest JSON")
    p.add_argument("--out", required=True, help="output directory or file")
    p.add_argument("--frames", default=None, help="frame range A..B (half-open) or N")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("--seed", type=int, default=None, help="override the manifest seed")
    p.add_argument("--n-aux", type=int, default=None, dest="n_aux",
                   help="override the auxiliary sensor count")
    p.add_argument("--noise-bound", type=float, default=None, dest="noise_bound",
                   help="override the LiDAR noise bound (meters)")
    if with_r:
        p.add_argument("--r", type=float, default=None,
                       help="override the free-space step (meters)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semvox", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-world", help="write a procedural world JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--out", required=True)
    p.add_argument("--manifest-out", default=None,
                   help="also write a default scene manifest here")
    p.add_argument("--n-aux", type=int, default=20, dest="n_aux",
                   help="auxiliary sensors for --manifest-out (default 20)")
    p.set_defaults(func=cmd_gen_world)

    p = sub.add_parser("simulate", help="write per-frame sensor clouds and poses")
    _add_scene_flags(p, with_r=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("label", help="write per-frame ground-truth label grids")
    _add_scene_flags(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("aggregate-naive",
                       help="write per-frame sequential-aggregation baseline grids")
    _add_scene_flags(p)
    p.add_argument("--window", type=int, default=10, help="trailing window T (default 10)")
    p.set_defaults(func=cmd_aggregate_naive)

    p = sub.add_parser("evaluate", help="score prediction grids against ground truth")
    p.add_argument("--pred", required=True, help="directory of prediction .csg files")
    p.add_argument("--gt", required=True, help="directory of ground-truth .csg files")
    p.add_argument("--out", required=True, help="output directory for the reports")
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--miou-mode", choices=("present", "fixed"), default="present",
                   dest="miou_mode")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", help="render a label grid to a PPM bird's-eye view")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("stack", help="write a pose-compensated occupancy stack")
    _add_scene_flags(p, with_r=False)
    p.add_argument("--window", type=int, required=True, help="stack depth T")
    p.add_argument("--frame", type=int, default=None,
                   help="newest frame of the window (default: last)")
    p.set_defaults(func=cmd_stack)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MetricUndefinedError as exc:
        print(f"metric undefined: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except (FormatError, SpecMismatchError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark the compiled kernels against the numpy fallback.

Runs each hot kernel on a demo-scale workload (one 21-sensor frame of the
default scene) with both backends and prints a timing table plus an output
equality check.  Usage:

    python benchmarks/bench_kernels.py [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import semvox._kernels_py as numpy_backend
from semvox.geometry import apply_rotation
from semvox.grid import GridSpec
from semvox.labels import REMAP_LUT
from semvox.lidar import LidarSpec, scan_directions, simulate_scan
from semvox.rig import RigBounds, sample_rig, sensor_world_pose
from semvox.world import _scene_boxes, actor_pose_at
from semvox.worldgen import generate_world

try:
    import semvox._kernels as compiled_backend
except ImportError:
    compiled_backend = None


def build_workload():
    world = generate_world(7, "medium")
    rig = sample_rig(RigBounds(), 20, 7)
    lidar = LidarSpec()
    t = 0.9
    vehicle = actor_pose_at(world.actors[world.ego_index], t)
    pose = sensor_world_pose(rig.ego_mount, vehicle)
    boxes = _scene_boxes(world, t, exclude_actors=(world.ego_index,))
    dirs = scan_directions(lidar)
    dirs_world = apply_rotation(dirs, pose.rotation)
    origins = np.ascontiguousarray(np.broadcast_to(pose.translation, dirs.shape))
    g = world.ground
    raycast_args = (origins, np.ascontiguousarray(dirs_world), lidar.max_range,
                    boxes.rot, boxes.trans, boxes.lo, boxes.hi, boxes.labels,
                    boxes.actors, 1, g.z, g.road_center_y, g.road_half_width, 14, 16)

    cloud = simulate_scan(world, pose, t, lidar, seed=7, sensor_id=0)
    points = np.ascontiguousarray(cloud.positions, dtype=np.float64)
    spec = GridSpec.default()
    accum_args = dict(points=points, labels=cloud.labels, r=1.5,
                      rot=np.eye(3), trans=np.zeros(3),
                      mins=spec.mins_arr(), maxs=spec.maxs_arr(),
                      cells=spec.cell_sizes)
    return raycast_args, accum_args


def run(fn, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print("building workload (one full-resolution scan of the medium demo world)...")
    raycast_args, accum = build_workload()
    n_rays = raycast_args[0].shape[0]
    n_pts = accum["points"].shape[0]
    backends = {"numpy": numpy_backend}
    if compiled_backend is not None:
        backends["compiled"] = compiled_backend
    else:
        print("compiled extension not built; benchmarking the fallback only")

    results = {}
    outputs = {}
    for name, impl in backends.items():
        t_ray, out_ray = run(lambda impl=impl: impl.raycast_boxes(*raycast_args),
                             args.repeats)
        t_exp, out_exp = run(lambda impl=impl: impl.trace_expand(
            accum["points"], accum["labels"], accum["r"]), args.repeats)

        def fused(impl=impl):
            counts = np.zeros((128, 128, 8, 11), np.uint32)
            impl.trace_accumulate(accum["points"], accum["labels"], accum["r"],
                                  accum["rot"], accum["trans"], counts,
                                  accum["mins"], accum["maxs"], accum["cells"],
                                  REMAP_LUT)
            return counts

        t_acc, out_acc = run(fused, args.repeats)
        results[name] = (t_ray, t_exp, t_acc)
        outputs[name] = (out_ray, out_exp, out_acc)

    print(f"\nworkload: {n_rays} rays x {len(raycast_args[7])} boxes; "
          f"{n_pts} endpoints, r={accum['r']} m; best of {args.repeats}\n")
    header = f"{'kernel':<18}" + "".join(f"{name:>12}" for name in results)
    if len(results) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for i, kernel in enumerate(("raycast_boxes", "trace_expand", "trace_accumulate")):
        row = f"{kernel:<18}"
        times = [results[name][i] for name in results]
        for v in times:
            row += f"{v * 1e3:>10.1f}ms"
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    if len(outputs) == 2:
        a, b = outputs["numpy"], outputs["compiled"]
        same = (all(np.array_equal(x, y) for x, y in zip(a[0], b[0]))
                and all(np.array_equal(x, y) for x, y in zip(a[1][:2], b[1][:2]))
                and np.array_equal(a[2], b[2]))
        print(f"\noutputs bit-identical across backends: {same}")


if __name__ == "__main__":
    main()

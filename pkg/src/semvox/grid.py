"""Voxel-space core: grid geometry, class-count accumulation, majority-vote
labeling with invalid masking, binary occupancy stacks, and the two mappers
(instantaneous multi-sensor ground truth vs. naive sequential aggregation).

Voxels are half-open per axis ([min, max) with index floor((p - min)/cell)),
so indexing is total and a sample exactly on a voxel's max face credits the
neighboring voxel.  Voting runs on the 11 remapped evaluation classes; ties
pick the lowest class id, which makes the vote deterministic.  A voxel with no
observations is invalid and carries UNLABELED_ID.

Counts are stored as one dense (X, Y, Z, 11) uint32 array (about 6 MB at the
default resolution), which accumulation kernels update in place; per-sensor
partial counts merge by plain addition, so sharding never changes results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from semvox import backend
from semvox.geometry import Pose, transform_points
from semvox.labeler import ObservationSet
from semvox.labels import (N_CLASSES, REMAP_LUT, UNLABELED_ID, RemappedLabel,
                           remap_label)  # noqa: F401  (remap_label re-export)
from semvox.lidar import LidarSpec, PointCloud, simulate_scan
from semvox.rig import Rig, sensor_world_pose
from semvox.world import World, actor_pose_at


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned voxel lattice: per-axis (min, max) extents and cell counts."""

    mins: tuple
    maxs: tuple
    shape: tuple

    def __post_init__(self) -> None:
        mins = tuple(float(v) for v in self.mins)
        maxs = tuple(float(v) for v in self.maxs)
        shape = tuple(int(v) for v in self.shape)
        if len(mins) != 3 or len(maxs) != 3 or len(shape) != 3:
            raise ValueError("GridSpec is three-dimensional")
        if any(a >= b for a, b in zip(mins, maxs)):
            raise ValueError("extents must satisfy min < max")
        if any(n < 1 for n in shape):
            raise ValueError("cell counts must be >= 1")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "shape", shape)

    @staticmethod
    def default() -> "GridSpec":
        """The coarse street-level grid: 0.4 m cells in x/y, 0.375 m in z."""
        return GridSpec((-25.6, -25.6, -2.0), (25.6, 25.6, 1.0), (128, 128, 8))

    @staticmethod
    def high_res() -> "GridSpec":
        """Alternate dense config: 0.2 m cubic voxels over the same x/y extents.
        Shipped for convenience; not separately validated."""
        return GridSpec((-25.6, -25.6, -2.0), (25.6, 25.6, 4.4), (256, 256, 32))

    @property
    def cell_sizes(self) -> np.ndarray:
        return (np.asarray(self.maxs) - np.asarray(self.mins)) / np.asarray(self.shape)

    @property
    def n_voxels(self) -> int:
        return int(np.prod(self.shape))

    def mins_arr(self) -> np.ndarray:
        return np.asarray(self.mins, dtype=np.float64)

    def maxs_arr(self) -> np.ndarray:
        return np.asarray(self.maxs, dtype=np.float64)

    def centers(self) -> np.ndarray:
        """(X, Y, Z, 3) voxel center coordinates."""
        cs = self.cell_sizes
        axes = [self.mins[i] + cs[i] * (np.arange(self.shape[i]) + 0.5) for i in range(3)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1)


@dataclass
class CountGrid:
    """Per-voxel observation counts over the evaluation classes (Free included)."""

    spec: GridSpec
    counts: np.ndarray  # (X, Y, Z, N_CLASSES) uint32
    dropped_oob: int = 0
    dropped_unlabeled: int = 0
    skipped_points: int = 0

    @staticmethod
    def zeros(spec: GridSpec) -> "CountGrid":
        return CountGrid(spec, np.zeros(tuple(spec.shape) + (N_CLASSES,), dtype=np.uint32))

    @property
    def total(self) -> int:
        return int(self.counts.sum(dtype=np.int64))


@dataclass
class LabelGrid:
    """Final per-voxel class labels plus the validity mask."""

    spec: GridSpec
    labels: np.ndarray  # (X, Y, Z) uint8, UNLABELED_ID where invalid
    valid: np.ndarray   # (X, Y, Z) bool

    @property
    def valid_fraction(self) -> float:
        return float(self.valid.mean())


@dataclass
class OccupancyStack:
    """T pose-compensated binary occupancy grids; index 0 is the newest frame.

    Layout is (T, Z, X, Y): the vertical axis leads each frame so a frame maps
    onto (channels, H, W) directly.
    """

    spec: GridSpec
    grids: np.ndarray  # (T, Z, X, Y) uint8 in {0, 1}
    poses: Optional[tuple] = None
    t_latest: float = 0.0


def voxel_index(spec: GridSpec, point) -> Optional[tuple]:
    """Voxel (ix, iy, iz) containing a point, or None when out of bounds."""
    p = np.asarray(point, dtype=np.float64).reshape(3)
    idx = []
    cs = spec.cell_sizes
    for a in range(3):
        if not (spec.mins[a] <= p[a] < spec.maxs[a]):
            return None
        i = int(np.floor((p[a] - spec.mins[a]) / cs[a]))
        idx.append(min(max(i, 0), spec.shape[a] - 1))
    return tuple(idx)


def accumulate(obs: ObservationSet, spec: GridSpec) -> CountGrid:
    """Count each in-bounds observation under its remapped class.

    Out-of-bounds observations are dropped and tallied in ``dropped_oob``;
    observations whose label remaps to the Unlabeled sentinel are dropped and
    tallied in ``dropped_unlabeled``.
    """
    cg = CountGrid.zeros(spec)
    oob, unl = backend.bin_points(
        cg.counts, obs.positions, obs.labels,
        spec.mins_arr(), spec.maxs_arr(), spec.cell_sizes, REMAP_LUT)
    cg.dropped_oob = int(oob)
    cg.dropped_unlabeled = int(unl)
    cg.skipped_points = obs.skipped_points
    return cg


def majority_vote(cg: CountGrid) -> LabelGrid:
    """Most frequent class per voxel; ties pick the lowest class id; voxels
    with no observations are invalid."""
    totals = cg.counts.sum(axis=3, dtype=np.int64)
    valid = totals > 0
    labels = np.argmax(cg.counts, axis=3).astype(np.uint8)
    labels[~valid] = UNLABELED_ID
    return LabelGrid(cg.spec, labels, valid)


def _accumulate_cloud(cg: CountGrid, cloud: PointCloud, to_grid: Pose, r: float) -> None:
    """Fused trace + transform + count for one scan (in place).

    Produces exactly the counts of the composed pipeline
    accumulate(to_ego_frame(ray_trace_observations(cloud, r), ...), spec).
    """
    rel = to_grid  # sensor -> grid frame
    pts = np.ascontiguousarray(cloud.positions, dtype=np.float64)
    skipped, oob, unl = backend.trace_accumulate(
        pts, cloud.labels, float(r), rel.rotation, rel.translation,
        cg.counts, cg.spec.mins_arr(), cg.spec.maxs_arr(), cg.spec.cell_sizes,
        REMAP_LUT)
    cg.skipped_points += int(skipped)
    cg.dropped_oob += int(oob)
    cg.dropped_unlabeled += int(unl)


def ground_truth_counts(world: World, rig: Rig, spec: GridSpec, t: float,
                        lidar_spec: LidarSpec, r: float, seed: int,
                        threads: int = 1) -> CountGrid:
    """Observation counts for the instantaneous multi-sensor ground truth.

    All 1 + n_aux sensors scan the world frozen at t; each scan is traced in
    its own sensor frame, expressed in the ego sensor frame, and counted.
    Per-sensor counts merge by addition, so the thread count never changes
    the result.
    """
    ego_idx = world.ego_index
    if ego_idx is None:
        raise ValueError("world has no ego actor")
    vehicle_pose = actor_pose_at(world.actors[ego_idx], t)
    ego_sensor_pose = sensor_world_pose(rig.ego_mount, vehicle_pose)
    ego_inv = ego_sensor_pose.inverse()

    def one_sensor(args) -> CountGrid:
        sid, mount = args
        pose = sensor_world_pose(mount, vehicle_pose)
        cloud = simulate_scan(world, pose, t, lidar_spec, seed, sid)
        part = CountGrid.zeros(spec)
        _accumulate_cloud(part, cloud, ego_inv.compose(cloud.sensor_pose), r)
        return part

    jobs = list(enumerate(rig.mounts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one_sensor, jobs))
    else:
        parts = [one_sensor(j) for j in jobs]
    cg = CountGrid.zeros(spec)
    for part in parts:
        cg.counts += part.counts
        cg.dropped_oob += part.dropped_oob
        cg.dropped_unlabeled += part.dropped_unlabeled
        cg.skipped_points += part.skipped_points
    return cg


def build_ground_truth(world: World, rig: Rig, spec: GridSpec, t: float,
                       lidar_spec: LidarSpec, r: float, seed: int,
                       threads: int = 1) -> LabelGrid:
    """Instantaneous multi-sensor semantic scene at time t, in the ego sensor frame."""
    return majority_vote(ground_truth_counts(world, rig, spec, t, lidar_spec, r,
                                             seed, threads=threads))


def build_occupancy(cloud: PointCloud, spec: GridSpec) -> np.ndarray:
    """Binary occupancy of one cloud, laid out (Z, X, Y) with z as channels."""
    cg = CountGrid.zeros(spec)
    # Bin endpoints only; any class counts as occupancy.
    backend.bin_points(cg.counts, np.ascontiguousarray(cloud.positions, dtype=np.float64),
                       cloud.labels, spec.mins_arr(), spec.maxs_arr(),
                       spec.cell_sizes, REMAP_LUT)
    occ = (cg.counts.sum(axis=3, dtype=np.int64) > 0).astype(np.uint8)
    return np.ascontiguousarray(occ.transpose(2, 0, 1))


def build_stack(clouds: Sequence[PointCloud], spec: GridSpec) -> OccupancyStack:
    """Pose-compensated stack of the T most recent clouds (oldest -> newest in).

    Every cloud is re-expressed in the newest cloud's sensor frame before
    voxelization; stack index 0 holds the newest frame.
    """
    if len(clouds) == 0:
        raise ValueError("build_stack needs at least one cloud")
    latest = clouds[-1]
    layers = []
    for cloud in clouds:
        if cloud is latest:
            moved = cloud
        else:
            pos = transform_points(cloud.positions.astype(np.float64),
                                   frm=cloud.sensor_pose, to=latest.sensor_pose)
            moved = PointCloud(pos.astype(np.float32), cloud.labels,
                               latest.sensor_pose, cloud.t, cloud.sensor_id)
        layers.append(build_occupancy(moved, spec))
    layers.reverse()  # newest first
    grids = np.ascontiguousarray(np.stack(layers))
    poses = tuple(c.sensor_pose for c in reversed(clouds))
    return OccupancyStack(spec=spec, grids=grids, poses=poses, t_latest=latest.t)


def naive_temporal_aggregate(clouds: Sequence[PointCloud], spec: GridSpec,
                             r: float) -> LabelGrid:
    """Sequential-aggregation baseline: vote over the trailing window of ego
    scans, all expressed in the newest scan's frame.

    Each scan is traced in its own sensor frame (free space marches toward the
    position the sensor actually occupied) and then transformed, exactly as
    the multi-sensor builder does with its simultaneous sensors.  Moving
    objects therefore deposit occupied votes along their past positions,
    which is the trail artifact this baseline exists to demonstrate.
    """
    if len(clouds) == 0:
        raise ValueError("naive_temporal_aggregate needs at least one cloud")
    latest_inv = clouds[-1].sensor_pose.inverse()
    cg = CountGrid.zeros(spec)
    for cloud in clouds:
        _accumulate_cloud(cg, cloud, latest_inv.compose(cloud.sensor_pose), r)
    return majority_vote(cg)

"""Simulated spinning LiDAR.

A scan casts channels x azimuth_steps rays from a frozen snapshot of the world
at time t (no motion distortion within a sweep).  Hits get per-axis uniform
noise with half-width noise_bound/sqrt(3), which bounds the Euclidean error of
every point by noise_bound.  Returns from the ego vehicle and hits carrying the
Unlabeled id are discarded, as are all rays of a sensor that sits inside solid
geometry (a buried sensor is blind).

The noise stream is a counter-based generator keyed by (seed, sensor_id) with
one fixed slot per ray index, so scans are reproducible bit-for-bit regardless
of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from semvox._rng import NOISE_STREAM, stream
from semvox.geometry import Pose, apply_rotation
from semvox.labels import RawLabel
from semvox.world import World, point_in_solid, raycast_batch


@dataclass(frozen=True)
class LidarSpec:
    """Scan pattern and range/noise envelope of one sensor."""

    channels: int = 64
    vertical_fov_deg: tuple = (-24.8, 2.0)
    azimuth_steps: int = 2048
    max_range: float = 50.0
    noise_bound: float = 0.02
    rate_hz: float = 10.0

    def __post_init__(self) -> None:
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if self.azimuth_steps < 4:
            raise ValueError("azimuth_steps must be >= 4")
        if self.max_range <= 0:
            raise ValueError("max_range must be > 0")
        if self.noise_bound < 0:
            raise ValueError("noise_bound must be >= 0")
        lo, hi = self.vertical_fov_deg
        if lo > hi:
            raise ValueError("vertical_fov_deg must be (min, max)")
        object.__setattr__(self, "vertical_fov_deg", (float(lo), float(hi)))

    @property
    def rays_per_scan(self) -> int:
        return self.channels * self.azimuth_steps


class SemanticPoint(NamedTuple):
    position: np.ndarray
    label: RawLabel


@dataclass(frozen=True)
class PointCloud:
    """Sensor-frame returns of one scan.

    Positions are float32 (the storage precision of the cloud file format);
    labels are raw ids.  ``sensor_pose`` maps sensor frame -> world frame.
    """

    positions: np.ndarray
    labels: np.ndarray
    sensor_pose: Pose
    t: float
    sensor_id: int = 0

    def __post_init__(self) -> None:
        p = np.ascontiguousarray(self.positions, dtype=np.float32).reshape(-1, 3)
        lab = np.ascontiguousarray(self.labels, dtype=np.uint8).reshape(-1)
        if p.shape[0] != lab.shape[0]:
            raise ValueError("positions and labels disagree on point count")
        p.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def point(self, i: int) -> SemanticPoint:
        return SemanticPoint(self.positions[i].astype(np.float64), RawLabel(int(self.labels[i])))


@lru_cache(maxsize=8)
def _directions_cached(channels, fov, steps):
    lo, hi = fov
    elev = np.linspace(math.radians(lo), math.radians(hi), channels)
    azim = np.arange(steps, dtype=np.float64) * (2.0 * math.pi / steps)
    ce, se = np.cos(elev), np.sin(elev)
    ca, sa = np.cos(azim), np.sin(azim)
    dirs = np.empty((channels * steps, 3), dtype=np.float64)
    for c in range(channels):
        row = slice(c * steps, (c + 1) * steps)
        dirs[row, 0] = ce[c] * ca
        dirs[row, 1] = ce[c] * sa
        dirs[row, 2] = se[c]
    dirs.setflags(write=False)
    return dirs


def scan_directions(spec: LidarSpec) -> np.ndarray:
    """Unit ray directions in the sensor frame, channel-major.

    Elevations span the vertical FOV inclusive of both ends (a single channel
    sits at the FOV minimum); azimuths cover [0, 360) degrees uniformly.
    Ray index = channel * azimuth_steps + azimuth_index.
    """
    return _directions_cached(spec.channels, spec.vertical_fov_deg, spec.azimuth_steps)


def simulate_scan(world: World, sensor_pose: Pose, t: float, spec: LidarSpec,
                  seed: int, sensor_id: int) -> PointCloud:
    """One scan of the world frozen at time t. Ego-vehicle returns are excluded."""
    if not 0.0 <= t <= world.duration:
        raise ValueError(f"t={t} outside world duration [0, {world.duration}]")
    ego = world.ego_index
    exclude = (ego,) if ego is not None else ()
    origin = sensor_pose.translation
    if point_in_solid(world, t, origin, exclude_actors=exclude):
        return PointCloud(np.empty((0, 3), np.float32), np.empty(0, np.uint8),
                          sensor_pose, t, sensor_id)
    dirs = scan_directions(spec)
    dirs_world = apply_rotation(dirs, sensor_pose.rotation)
    origins = np.broadcast_to(origin, dirs.shape)
    origins = np.ascontiguousarray(origins)
    dist, lab, _ = raycast_batch(world, t, origins, dirs_world, spec.max_range,
                                 exclude_actors=exclude)
    hit = np.isfinite(dist) & (lab != int(RawLabel.UNLABELED))
    points = dist[hit, None] * dirs[hit]
    if spec.noise_bound > 0.0:
        gen = stream(seed, NOISE_STREAM, sensor_id)
        u = gen.random((dirs.shape[0], 3))
        delta = (2.0 * u - 1.0) * (spec.noise_bound / math.sqrt(3.0))
        points = points + delta[hit]
    return PointCloud(points.astype(np.float32), lab[hit].astype(np.uint8),
                      sensor_pose, t, sensor_id)

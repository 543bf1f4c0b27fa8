"""Sensor rig: the fixed ego mount plus N auxiliary mounts sampled uniformly
in a box around the ego vehicle.

A rig is sampled once per scene and stays fixed relative to the ego vehicle.
Auxiliary mounts use identity rotation (the scan pattern is azimuthally
symmetric).  Sampling is a counter-based stream of the rig seed, so mount i is
the same for any n_aux >= i + 1; growing a rig keeps its prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from semvox._rng import RIG_STREAM, stream
from semvox.geometry import Pose, transform_points  # noqa: F401  (re-export)

#: Ego sensor mount in the vehicle frame: 0.5 m behind the vehicle center,
#: 1.8 m above the ground.
EGO_MOUNT_XYZ = (-0.5, 0.0, 1.8)


@dataclass(frozen=True)
class RigBounds:
    """Per-axis (min, max) box for auxiliary mounts, in the ego vehicle frame."""

    x: tuple = (-25.6, 25.6)
    y: tuple = (-25.6, 25.6)
    z: tuple = (1.0, 6.0)

    def __post_init__(self) -> None:
        for axis in (self.x, self.y, self.z):
            if not axis[0] < axis[1]:
                raise ValueError(f"bounds must satisfy min < max, got {axis}")
        object.__setattr__(self, "x", (float(self.x[0]), float(self.x[1])))
        object.__setattr__(self, "y", (float(self.y[0]), float(self.y[1])))
        object.__setattr__(self, "z", (float(self.z[0]), float(self.z[1])))

    @property
    def lows(self) -> np.ndarray:
        return np.array([self.x[0], self.y[0], self.z[0]])

    @property
    def highs(self) -> np.ndarray:
        return np.array([self.x[1], self.y[1], self.z[1]])


@dataclass(frozen=True)
class Rig:
    ego_mount: Pose
    aux_mounts: tuple
    seed: int
    bounds: RigBounds

    @property
    def n_aux(self) -> int:
        return len(self.aux_mounts)

    @property
    def mounts(self) -> tuple:
        """All mounts; index 0 is the ego sensor."""
        return (self.ego_mount,) + self.aux_mounts


def sample_rig(bounds: RigBounds, n_aux: int, seed: int) -> Rig:
    """Fixed ego mount plus n_aux i.i.d. uniform mounts inside ``bounds``."""
    if n_aux < 0:
        raise ValueError("n_aux must be >= 0")
    gen = stream(seed, RIG_STREAM)
    u = gen.random((n_aux, 3))
    xyz = bounds.lows + u * (bounds.highs - bounds.lows)
    aux = tuple(Pose.from_translation(xyz[i]) for i in range(n_aux))
    return Rig(ego_mount=Pose.from_translation(EGO_MOUNT_XYZ),
               aux_mounts=aux, seed=int(seed), bounds=bounds)


def sensor_world_pose(rig_mount: Pose, ego_vehicle_pose: Pose) -> Pose:
    """World pose of a mounted sensor: vehicle pose composed with the mount."""
    return ego_vehicle_pose.compose(rig_mount)

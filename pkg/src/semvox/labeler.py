"""Observation generation: endpoint-to-sensor free-space tracing and the
multi-sensor union.

Every cloud point x with label y yields one Occupied observation at x, then
Free observations marching from the endpoint toward the sensor origin: with
d = ||x|| - r and unit direction x/||x||, a Free sample is emitted at d * x_hat
while d > 0, decrementing d by r each step.  The loop is strict (d == 0 emits
nothing), so an endpoint at an exact multiple of r drops its last sample.
Consecutive samples along a ray are exactly r apart and depend only on that
endpoint and r, never on other rays or sensors.

Observation sets are multisets: aggregation concatenates without weighting,
and duplicate positions count twice in downstream voting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from semvox import backend
from semvox.geometry import Pose, transform_points
from semvox.labels import FREE_RAW_ID, RawLabel
from semvox.lidar import PointCloud

FREE = FREE_RAW_ID


@dataclass(frozen=True)
class Observation:
    """A single occupied-or-free sample.  Free samples carry no semantic label."""

    position: np.ndarray
    label: int  # RawLabel id, or FREE for free space

    @property
    def is_free(self) -> bool:
        return self.label == FREE


@dataclass
class ObservationSet:
    """Column store of observations at one instant, in one frame.

    ``labels`` holds raw ids with FREE (255) marking free-space samples.
    ``skipped_points`` counts zero-norm endpoints dropped by the tracer.
    """

    positions: np.ndarray
    labels: np.ndarray
    t: float
    source_sensor_ids: frozenset = field(default_factory=frozenset)
    skipped_points: int = 0

    def __post_init__(self) -> None:
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8).reshape(-1)
        if self.positions.shape[0] != self.labels.shape[0]:
            raise ValueError("positions and labels disagree on length")
        self.source_sensor_ids = frozenset(self.source_sensor_ids)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __getitem__(self, i: int) -> Observation:
        return Observation(self.positions[i].copy(), int(self.labels[i]))

    @property
    def n_free(self) -> int:
        return int((self.labels == FREE).sum())

    @property
    def n_occupied(self) -> int:
        return len(self) - self.n_free


def ray_trace_observations(cloud: PointCloud, r: float) -> ObservationSet:
    """Occupied + free observations of one scan, in the sensor frame."""
    if r <= 0:
        raise ValueError("free-space step r must be > 0")
    pts = np.ascontiguousarray(cloud.positions, dtype=np.float64)
    pos, lab, skipped = backend.trace_expand(pts, cloud.labels, float(r))
    return ObservationSet(pos, lab, t=cloud.t,
                          source_sensor_ids=frozenset({cloud.sensor_id}),
                          skipped_points=skipped)


def to_ego_frame(obs: ObservationSet, sensor_pose: Pose, ego_sensor_pose: Pose) -> ObservationSet:
    """Re-express an observation set in the ego sensor frame.

    With the sensor 2 m left (+y) of an identically oriented ego, a point at
    the sensor origin lands at (0, +2, 0) in the ego frame.
    """
    pos = transform_points(obs.positions, frm=sensor_pose, to=ego_sensor_pose)
    return ObservationSet(pos, obs.labels.copy(), t=obs.t,
                          source_sensor_ids=obs.source_sensor_ids,
                          skipped_points=obs.skipped_points)


def aggregate_observations(per_sensor: Iterable[ObservationSet]) -> ObservationSet:
    """Multiset union of same-instant ego-frame observation sets.

    Duplicates are preserved (counts matter for the vote) and nothing is
    weighted.  All sets must share the same t.
    """
    sets = list(per_sensor)
    if not sets:
        raise ValueError("nothing to aggregate")
    t = sets[0].t
    for s in sets[1:]:
        if s.t != t:
            raise ValueError(f"observation sets disagree on t: {s.t} != {t}")
    ids: frozenset = frozenset()
    for s in sets:
        ids = ids | s.source_sensor_ids
    return ObservationSet(
        np.concatenate([s.positions for s in sets], axis=0),
        np.concatenate([s.labels for s in sets]),
        t=t,
        source_sensor_ids=ids,
        skipped_points=sum(s.skipped_points for s in sets),
    )

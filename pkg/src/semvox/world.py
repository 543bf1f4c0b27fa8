"""Procedural dynamic world: labeled boxes, keyframed actors, exact ray casting.

The world is a set of axis-aligned boxes (in their own local frames) plus an
infinite ground plane.  Statics are fixed in the world frame; actors carry a
piecewise-linear trajectory of timed poses.  All queries are pure functions of
(world, t, inputs), and the world is immutable after construction, so
everything here is safe to call from any number of threads.

Frame conventions: an actor's pose maps its local frame into the world frame,
and the local-frame origin sits on the ground under the actor (so a mount
translation's z is height above ground when the world's ground is at z = 0).
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from semvox import backend
from semvox.errors import FormatError
from semvox.geometry import Pose, matrix_from_quat, quat_from_matrix, slerp
from semvox.labels import FREE_RAW_ID, RawLabel

WORLD_FORMAT_VERSION = 1

#: |norm - 1| tolerance for ray direction preconditions.
UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Primitive:
    """Axis-aligned box in its local frame, with a raw semantic label."""

    center: np.ndarray
    half_extents: np.ndarray
    label: RawLabel

    def __post_init__(self) -> None:
        c = np.array(self.center, dtype=np.float64).reshape(3)
        h = np.array(self.half_extents, dtype=np.float64).reshape(3)
        if not (h > 0).all():
            raise ValueError(f"half_extents must be strictly positive, got {h}")
        c.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)
        object.__setattr__(self, "label", RawLabel(self.label))


@dataclass(frozen=True)
class Actor:
    """A primitive following a piecewise-linear path of (time, pose) keyframes."""

    primitive: Primitive
    keyframes: tuple
    is_ego: bool = False

    def __post_init__(self) -> None:
        kf = tuple((float(t), p) for t, p in self.keyframes)
        if not kf:
            raise ValueError("actor needs at least one keyframe")
        times = [t for t, _ in kf]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"keyframe times must be strictly increasing: {times}")
        object.__setattr__(self, "keyframes", kf)


@dataclass(frozen=True)
class GroundPlane:
    """Infinite plane z = height; a road strip along x carries the Road label,
    the rest is Ground."""

    z: float = 0.0
    road_center_y: float = 0.0
    road_half_width: float = 0.0


@dataclass(frozen=True)
class World:
    statics: tuple = ()
    actors: tuple = ()
    ground: Optional[GroundPlane] = None
    duration: float = 1.0
    tick: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "statics", tuple(self.statics))
        object.__setattr__(self, "actors", tuple(self.actors))
        if self.tick <= 0:
            raise ValueError("tick must be > 0")
        n = self.duration / self.tick
        if self.duration <= 0 or abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError("duration must be a positive multiple of tick")
        egos = [i for i, a in enumerate(self.actors) if a.is_ego]
        if len(egos) > 1:
            raise ValueError("at most one actor may be the ego")

    @property
    def ego_index(self) -> Optional[int]:
        for i, a in enumerate(self.actors):
            if a.is_ego:
                return i
        return None

    @property
    def n_frames(self) -> int:
        return int(round(self.duration / self.tick))


@dataclass(frozen=True)
class RayHit:
    point: np.ndarray
    distance: float
    label: RawLabel
    actor_index: Optional[int] = None


def actor_pose_at(actor: Actor, t: float) -> Pose:
    """Pose of an actor at time t: linear translation, shortest-arc rotation
    between the bracketing keyframes, clamped outside the keyframe range."""
    kf = actor.keyframes
    if t <= kf[0][0]:
        return kf[0][1]
    if t >= kf[-1][0]:
        return kf[-1][1]
    times = [k[0] for k in kf]
    hi = bisect.bisect_right(times, t)
    t0, p0 = kf[hi - 1]
    t1, p1 = kf[hi]
    u = (t - t0) / (t1 - t0)
    trans = p0.translation + u * (p1.translation - p0.translation)
    q = slerp(quat_from_matrix(p0.rotation), quat_from_matrix(p1.rotation), u)
    return Pose(matrix_from_quat(q), trans)


@dataclass(frozen=True)
class _SceneBoxes:
    """Flattened box arrays for the kernels: statics then actors, in order."""

    rot: np.ndarray      # (B, 3, 3) world -> local
    trans: np.ndarray    # (B, 3) box frame origin in world
    lo: np.ndarray       # (B, 3) local-frame lower corner
    hi: np.ndarray       # (B, 3) local-frame upper corner
    labels: np.ndarray   # (B,) int32 raw ids
    actors: np.ndarray   # (B,) int32 actor index, -1 for statics
    half_extents: np.ndarray = field(default=None)  # (B, 3) convenience copy


def _scene_boxes(world: World, t: float, exclude_actors: Sequence[int] = ()) -> _SceneBoxes:
    excluded = set(int(i) for i in exclude_actors)
    rot, trans, lo, hi, labels, actors, he = [], [], [], [], [], [], []
    eye = np.eye(3)
    for p in world.statics:
        rot.append(eye)
        trans.append(np.zeros(3))
        lo.append(p.center - p.half_extents)
        hi.append(p.center + p.half_extents)
        labels.append(int(p.label))
        actors.append(-1)
        he.append(p.half_extents)
    for i, a in enumerate(world.actors):
        if i in excluded:
            continue
        pose = actor_pose_at(a, t)
        rot.append(pose.rotation.T)  # world -> local
        trans.append(pose.translation)
        lo.append(a.primitive.center - a.primitive.half_extents)
        hi.append(a.primitive.center + a.primitive.half_extents)
        labels.append(int(a.primitive.label))
        actors.append(i)
        he.append(a.primitive.half_extents)
    b = len(labels)
    if b == 0:
        return _SceneBoxes(np.zeros((0, 3, 3)), np.zeros((0, 3)), np.zeros((0, 3)),
                           np.zeros((0, 3)), np.zeros(0, np.int32), np.zeros(0, np.int32),
                           np.zeros((0, 3)))
    return _SceneBoxes(
        np.ascontiguousarray(np.stack(rot)),
        np.ascontiguousarray(np.stack(trans)),
        np.ascontiguousarray(np.stack(lo)),
        np.ascontiguousarray(np.stack(hi)),
        np.asarray(labels, dtype=np.int32),
        np.asarray(actors, dtype=np.int32),
        np.ascontiguousarray(np.stack(he)),
    )


def _check_unit(dirs: np.ndarray) -> None:
    n2 = dirs[:, 0] ** 2 + dirs[:, 1] ** 2 + dirs[:, 2] ** 2
    err = float(np.abs(np.sqrt(n2) - 1.0).max()) if len(n2) else 0.0
    if err > UNIT_TOL:
        raise ValueError(f"ray directions must be unit length (max deviation {err:.3e})")


def raycast_batch(world: World, t: float, origins: np.ndarray, dirs: np.ndarray,
                  max_range: float, exclude_actors: Sequence[int] = ()):
    """Nearest semantic hits for a batch of world-frame rays.

    Returns (dist, label, actor): dist is inf on miss, actor is -1 unless the
    hit box belongs to an actor.  Hits count only through a box's entry face.
    """
    if max_range <= 0:
        raise ValueError("max_range must be > 0")
    o = np.ascontiguousarray(origins, dtype=np.float64)
    d = np.ascontiguousarray(dirs, dtype=np.float64)
    _check_unit(d)
    s = _scene_boxes(world, t, exclude_actors)
    g = world.ground
    return backend.raycast_boxes(
        o, d, float(max_range), s.rot, s.trans, s.lo, s.hi, s.labels, s.actors,
        1 if g is not None else 0,
        g.z if g else 0.0, g.road_center_y if g else 0.0,
        g.road_half_width if g else 0.0,
        int(RawLabel.ROAD), int(RawLabel.GROUND))


def semantic_raycast(world: World, t: float, origin, direction, max_range: float,
                     exclude_actors: Sequence[int] = ()) -> Optional[RayHit]:
    """Single-ray wrapper over raycast_batch."""
    o = np.asarray(origin, dtype=np.float64).reshape(1, 3)
    d = np.asarray(direction, dtype=np.float64).reshape(1, 3)
    dist, lab, act = raycast_batch(world, t, o, d, max_range, exclude_actors)
    if not np.isfinite(dist[0]):
        return None
    point = o[0] + dist[0] * d[0]
    idx = int(act[0])
    return RayHit(point=point, distance=float(dist[0]), label=RawLabel(int(lab[0])),
                  actor_index=idx if idx >= 0 else None)


def query_label_batch(world: World, t: float, points: np.ndarray,
                      exclude_actors: Sequence[int] = ()) -> np.ndarray:
    """Raw label at each point: containing primitive (nearest own surface wins
    when boxes overlap), else ground region for points at or below the ground
    plane, else FREE_RAW_ID.  Vectorized over points; used as the test oracle.
    """
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = p.shape[0]
    out = np.full(n, FREE_RAW_ID, dtype=np.int32)
    best = np.full(n, np.inf)
    s = _scene_boxes(world, t, exclude_actors)
    for b in range(len(s.labels)):
        local = (p - s.trans[b]) @ s.rot[b].T
        q_lo = local - s.lo[b]
        q_hi = s.hi[b] - local
        inside = (q_lo >= 0).all(axis=1) & (q_hi >= 0).all(axis=1)
        if not inside.any():
            continue
        d_surf = np.minimum(q_lo, q_hi).min(axis=1)
        upd = inside & (d_surf < best)
        best[upd] = d_surf[upd]
        out[upd] = s.labels[b]
    g = world.ground
    if g is not None:
        below = (p[:, 2] <= g.z) & ~np.isfinite(best)
        road = np.abs(p[:, 1] - g.road_center_y) <= g.road_half_width
        out[below & road] = int(RawLabel.ROAD)
        out[below & ~road] = int(RawLabel.GROUND)
    return out


def query_label(world: World, t: float, point) -> int:
    """Scalar query_label_batch; returns a RawLabel id or FREE_RAW_ID."""
    return int(query_label_batch(world, t, np.asarray(point).reshape(1, 3))[0])


def point_in_solid(world: World, t: float, point,
                   exclude_actors: Sequence[int] = ()) -> bool:
    """True when the point is inside any primitive (ground plane excluded)."""
    p = np.asarray(point, dtype=np.float64).reshape(1, 3)
    s = _scene_boxes(world, t, exclude_actors)
    for b in range(len(s.labels)):
        local = (p[0] - s.trans[b]) @ s.rot[b].T
        if (local >= s.lo[b]).all() and (local <= s.hi[b]).all():
            return True
    return False


# --- JSON description --------------------------------------------------------

def _pose_to_json(pose: Pose) -> dict:
    yaw = float(np.arctan2(pose.rotation[1, 0], pose.rotation[0, 0]))
    # Shipped worlds rotate about z only; preserve anything else as a quaternion.
    if np.abs(pose.rotation - Pose.from_yaw(yaw).rotation).max() < 1e-12:
        return {"xyz": [float(v) for v in pose.translation],
                "yaw_deg": float(np.degrees(yaw))}
    return {"xyz": [float(v) for v in pose.translation],
            "quat_wxyz": [float(v) for v in quat_from_matrix(pose.rotation)]}


def _pose_from_json(d: dict) -> Pose:
    t = np.asarray(d["xyz"], dtype=np.float64)
    if "quat_wxyz" in d:
        return Pose(matrix_from_quat(np.asarray(d["quat_wxyz"], dtype=np.float64)), t)
    return Pose.from_yaw(float(np.radians(d.get("yaw_deg", 0.0))), t)


def _primitive_to_json(p: Primitive) -> dict:
    return {"center": [float(v) for v in p.center],
            "half_extents": [float(v) for v in p.half_extents],
            "label": p.label.name}


def _primitive_from_json(d: dict) -> Primitive:
    return Primitive(np.asarray(d["center"]), np.asarray(d["half_extents"]),
                     RawLabel[d["label"]])


def world_to_dict(world: World) -> dict:
    doc = {
        "format_version": WORLD_FORMAT_VERSION,
        "duration_s": world.duration,
        "tick_s": world.tick,
        "statics": [_primitive_to_json(p) for p in world.statics],
        "actors": [
            {
                "is_ego": a.is_ego,
                "primitive": _primitive_to_json(a.primitive),
                "keyframes": [{"t": t, **_pose_to_json(p)} for t, p in a.keyframes],
            }
            for a in world.actors
        ],
    }
    if world.ground is not None:
        doc["ground"] = {"z": world.ground.z,
                         "road_center_y": world.ground.road_center_y,
                         "road_half_width": world.ground.road_half_width}
    return doc


def world_from_dict(doc: dict) -> World:
    try:
        version = doc["format_version"]
        if version != WORLD_FORMAT_VERSION:
            raise FormatError(f"unsupported world format_version {version}")
        ground = None
        if "ground" in doc:
            g = doc["ground"]
            ground = GroundPlane(float(g["z"]), float(g["road_center_y"]),
                                 float(g["road_half_width"]))
        statics = tuple(_primitive_from_json(p) for p in doc["statics"])
        actors = tuple(
            Actor(
                primitive=_primitive_from_json(a["primitive"]),
                keyframes=tuple((float(k["t"]), _pose_from_json(k)) for k in a["keyframes"]),
                is_ego=bool(a.get("is_ego", False)),
            )
            for a in doc["actors"]
        )
        return World(statics=statics, actors=actors, ground=ground,
                     duration=float(doc["duration_s"]), tick=float(doc["tick_s"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed world description: {exc!r}") from exc


def save_world(path, world: World) -> None:
    Path(path).write_text(json.dumps(world_to_dict(world), indent=2) + "\n")


def load_world(path) -> World:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"world file is not valid JSON: {exc}") from exc
    return world_from_dict(doc)

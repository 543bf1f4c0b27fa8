"""Seeded procedural street scenes.

A straight road runs along x with one lane per direction, parking strips,
raised sidewalks, pole/fence/vegetation clutter, and buildings on both sides.
The ego vehicle drives the +x lane; oncoming traffic uses the -x lane.  Every
preset places one guaranteed oncoming vehicle that starts 26 m ahead of the
ego and closes at 8 m/s, so any 10-frame window at the scene start contains a
fast mover in clear view (the demo scenario the trail metric is exercised on).

All draws come from one counter-based stream of (seed, preset), so a given
(seed, preset) pair always yields the identical world.
"""

from __future__ import annotations

import numpy as np

from semvox._rng import WORLD_STREAM, stream
from semvox.geometry import Pose
from semvox.labels import RawLabel
from semvox.world import Actor, GroundPlane, Primitive, World

ROAD_HALF_WIDTH = 5.5
LANE_Y = 1.8            # lane centers at +/- LANE_Y
PARK_Y = 4.4            # parking strip centers
SIDEWALK_Y = 7.0        # sidewalk strip centers (half width 1.5)
VEHICLE_HALF = (2.2, 0.9, 0.75)
PED_HALF = (0.25, 0.25, 0.9)

#: (moving vehicles incl. the guaranteed one, parked vehicles, pedestrians,
#:  buildings per side)
PRESETS = {
    "low": (2, 2, 2, 4),
    "medium": (4, 4, 6, 6),
    "high": (8, 6, 12, 7),
}


def _vehicle_prim() -> Primitive:
    return Primitive((0.0, 0.0, VEHICLE_HALF[2]), VEHICLE_HALF, RawLabel.VEHICLES)


def _box_actor(primitive, keyframes, is_ego=False) -> Actor:
    return Actor(primitive=primitive, keyframes=tuple(keyframes), is_ego=is_ego)


def _moving(x0, y, speed_x, duration) -> Actor:
    yaw = 0.0 if speed_x >= 0 else np.pi
    p0 = Pose.from_yaw(yaw, (x0, y, 0.0))
    p1 = Pose.from_yaw(yaw, (x0 + speed_x * duration, y, 0.0))
    return _box_actor(_vehicle_prim(), [(0.0, p0), (duration, p1)])


def generate_world(seed: int, preset: str, duration: float = 10.0,
                   tick: float = 0.1) -> World:
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    n_movers, n_parked, n_peds, n_buildings = PRESETS[preset]
    gen = stream(seed, WORLD_STREAM, index=list(PRESETS).index(preset))

    statics = []
    # Sidewalk slabs, slightly raised.
    for side in (1.0, -1.0):
        statics.append(Primitive((0.0, side * SIDEWALK_Y, 0.05), (36.0, 1.5, 0.05),
                                 RawLabel.SIDEWALK))
    # Buildings along both sides.
    for side in (1.0, -1.0):
        x = -30.0
        for _ in range(n_buildings):
            hx = 4.0 + 2.0 * gen.random()
            hy = 3.5 + 1.5 * gen.random()
            hz = 2.5 + 4.5 * gen.random()
            x += hx
            y = side * (9.5 + hy + 2.0 * gen.random())
            statics.append(Primitive((x, y, hz), (hx, hy, hz), RawLabel.BUILDING))
            x += hx + 2.0 + 4.0 * gen.random()
    # Poles with the occasional signal head, on the sidewalk inner edge.
    for side in (1.0, -1.0):
        for i, x in enumerate(np.arange(-24.0, 25.0, 12.0)):
            statics.append(Primitive((x, side * 5.8, 2.5), (0.08, 0.08, 2.5),
                                     RawLabel.POLE))
            if i % 2 == 0:
                statics.append(Primitive((x, side * 5.8, 5.3), (0.2, 0.2, 0.3),
                                         RawLabel.TRAFFIC_LIGHT))
    # Fence runs behind the sidewalks, trees and clutter between buildings.
    for side in (1.0, -1.0):
        x = -20.0 + 8.0 * gen.random()
        statics.append(Primitive((x, side * 8.8, 0.6), (4.0, 0.08, 0.6),
                                 RawLabel.FENCE))
        statics.append(Primitive((x + 14.0, side * 9.2, 2.0), (0.5, 0.5, 2.0),
                                 RawLabel.VEGETATION))
    statics.append(Primitive((3.0 + 6.0 * gen.random(), SIDEWALK_Y, 0.35),
                             (0.5, 0.5, 0.35), RawLabel.OTHER))

    actors = []
    # Ego drives the +x lane at a steady 2 m/s.
    ego_x0 = -8.0
    actors.append(_box_actor(
        _vehicle_prim(),
        [(0.0, Pose.from_yaw(0.0, (ego_x0, -LANE_Y, 0.0))),
         (duration, Pose.from_yaw(0.0, (ego_x0 + 2.0 * duration, -LANE_Y, 0.0)))],
        is_ego=True))
    # Guaranteed oncoming mover: 26 m ahead, closing at 8 m/s.
    actors.append(_moving(ego_x0 + 26.0, LANE_Y, -8.0, duration))
    # Further oncoming traffic, each slower than the one it follows.
    extra_oncoming = (n_movers - 1) // 2
    for i in range(extra_oncoming):
        x0 = ego_x0 + 44.0 + 16.0 * i + 4.0 * gen.random()
        actors.append(_moving(x0, LANE_Y, -(7.5 - 0.5 * i), duration))
    # Same-direction traffic ahead of the ego, faster with distance.
    for i in range(n_movers - 1 - extra_oncoming):
        x0 = ego_x0 + 16.0 + 14.0 * i + 4.0 * gen.random()
        actors.append(_moving(x0, -LANE_Y, 4.5 + 0.8 * i, duration))
    # Parked vehicles alternate sides of the road.
    for i in range(n_parked):
        side = 1.0 if i % 2 == 0 else -1.0
        x = -16.0 + 9.0 * i + 3.0 * gen.random()
        pose = Pose.from_yaw(0.0, (x, side * PARK_Y, 0.0))
        actors.append(_box_actor(_vehicle_prim(), [(0.0, pose)]))
    # Pedestrians stroll the sidewalks.
    for i in range(n_peds):
        side = 1.0 if i % 2 == 0 else -1.0
        x0 = -20.0 + 7.0 * i + 2.0 * gen.random()
        speed = 1.0 + 0.5 * gen.random()
        direction = 1.0 if i % 4 < 2 else -1.0
        yaw = 0.0 if direction > 0 else np.pi
        prim = Primitive((0.0, 0.0, PED_HALF[2]), PED_HALF, RawLabel.PEDESTRIAN)
        actors.append(_box_actor(prim, [
            (0.0, Pose.from_yaw(yaw, (x0, side * SIDEWALK_Y, 0.0))),
            (duration, Pose.from_yaw(yaw, (x0 + direction * speed * duration,
                                           side * SIDEWALK_Y, 0.0))),
        ]))

    ground = GroundPlane(z=0.0, road_center_y=0.0, road_half_width=ROAD_HALF_WIDTH)
    return World(statics=tuple(statics), actors=tuple(actors), ground=ground,
                 duration=duration, tick=tick)

"""Semantic label tables.

Two palettes exist side by side:

* ``RawLabel`` -- the 23-entry palette attached to simulated returns.  Id 0 is
  reserved for Unlabeled/Invalid.  The numeric ids below are declared here and
  used everywhere (files, kernels, docs); there is no external id authority.
* ``RemappedLabel`` -- the 11 evaluation classes.  Raw classes that a LiDAR
  cannot reliably tell apart collapse onto one evaluation class; voxel voting
  and all metrics run on this palette.  Id 255 (``UNLABELED_ID``) marks voxels
  with no observations.

``FREE_RAW_ID`` (255) is a pseudo raw id carried by free-space observations.
It is not part of the 23-entry palette and never appears in point clouds.
"""

from __future__ import annotations

import enum

import numpy as np


class RawLabel(enum.IntEnum):
    UNLABELED = 0
    OTHER = 1
    SKY = 2
    BRIDGE = 3
    RAILTRACK = 4
    STATIC = 5
    DYNAMIC = 6
    WATER = 7
    FENCE = 8
    WALL = 9
    GUARDRAIL = 10
    POLE = 11
    TRAFFIC_LIGHT = 12
    TRAFFIC_SIGN = 13
    ROAD = 14
    ROADLINE = 15
    GROUND = 16
    TERRAIN = 17
    BUILDING = 18
    PEDESTRIAN = 19
    SIDEWALK = 20
    VEGETATION = 21
    VEHICLES = 22


class RemappedLabel(enum.IntEnum):
    FREE = 0
    BUILDING = 1
    BARRIER = 2
    OTHER = 3
    PEDESTRIAN = 4
    POLE = 5
    ROAD = 6
    GROUND = 7
    SIDEWALK = 8
    VEGETATION = 9
    VEHICLES = 10


#: Pseudo raw id for free-space observations (not in the raw palette).
FREE_RAW_ID = 255

#: Remapped sentinel for voxels without any observation.
UNLABELED_ID = 255

#: Number of evaluation classes (Free included).
N_CLASSES = 11

CLASS_NAMES = tuple(lbl.name.capitalize() for lbl in RemappedLabel)

RAW_TO_REMAPPED: dict[RawLabel, RemappedLabel] = {
    RawLabel.OTHER: RemappedLabel.OTHER,
    RawLabel.SKY: RemappedLabel.OTHER,
    RawLabel.BRIDGE: RemappedLabel.OTHER,
    RawLabel.RAILTRACK: RemappedLabel.OTHER,
    RawLabel.STATIC: RemappedLabel.OTHER,
    RawLabel.DYNAMIC: RemappedLabel.OTHER,
    RawLabel.WATER: RemappedLabel.OTHER,
    RawLabel.FENCE: RemappedLabel.BARRIER,
    RawLabel.WALL: RemappedLabel.BARRIER,
    RawLabel.GUARDRAIL: RemappedLabel.BARRIER,
    RawLabel.POLE: RemappedLabel.POLE,
    RawLabel.TRAFFIC_LIGHT: RemappedLabel.POLE,
    RawLabel.TRAFFIC_SIGN: RemappedLabel.POLE,
    RawLabel.ROAD: RemappedLabel.ROAD,
    RawLabel.ROADLINE: RemappedLabel.ROAD,
    RawLabel.GROUND: RemappedLabel.GROUND,
    RawLabel.TERRAIN: RemappedLabel.GROUND,
    RawLabel.BUILDING: RemappedLabel.BUILDING,
    RawLabel.PEDESTRIAN: RemappedLabel.PEDESTRIAN,
    RawLabel.SIDEWALK: RemappedLabel.SIDEWALK,
    RawLabel.VEGETATION: RemappedLabel.VEGETATION,
    RawLabel.VEHICLES: RemappedLabel.VEHICLES,
}

# 256-entry raw-id -> remapped-id lookup used by the kernels.  Unknown raw ids
# (including Unlabeled) map to UNLABELED_ID and are dropped with a diagnostic
# count; FREE_RAW_ID maps to the Free class.
REMAP_LUT = np.full(256, UNLABELED_ID, dtype=np.uint8)
for _raw, _remapped in RAW_TO_REMAPPED.items():
    REMAP_LUT[int(_raw)] = int(_remapped)
REMAP_LUT[FREE_RAW_ID] = int(RemappedLabel.FREE)
REMAP_LUT.setflags(write=False)


def remap_label(raw: int) -> int:
    """Map a raw label id to its evaluation class id.

    Unlabeled (and any id outside the palette) maps to ``UNLABELED_ID``;
    ``FREE_RAW_ID`` maps to ``RemappedLabel.FREE``.
    """
    if not 0 <= int(raw) <= 255:
        raise ValueError(f"raw label id out of range: {raw}")
    return int(REMAP_LUT[int(raw)])


#: RGB colors for the 11 evaluation classes, used by the BEV renderer.
PALETTE_RGB = np.array(
    [
        (248, 248, 248),  # Free
        (70, 70, 70),     # Building
        (190, 153, 153),  # Barrier
        (250, 170, 160),  # Other
        (220, 20, 60),    # Pedestrian
        (153, 153, 153),  # Pole
        (128, 64, 128),   # Road
        (81, 0, 81),      # Ground
        (244, 35, 232),   # Sidewalk
        (107, 142, 35),   # Vegetation
        (0, 0, 142),      # Vehicles
    ],
    dtype=np.uint8,
)
PALETTE_RGB.setflags(write=False)

#: Color for voxel columns with no valid voxel at all.
INVALID_RGB = (0, 0, 0)

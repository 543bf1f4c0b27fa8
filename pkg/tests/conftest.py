from pathlib import Path

import numpy as np
import pytest

from semvox import io
from semvox.geometry import Pose
from semvox.labels import RawLabel
from semvox.world import Actor, GroundPlane, Primitive, World

REPO_ROOT = Path(__file__).resolve().parent.parent


def make_box_world(center=(10.0, 0.0, 0.0), half=(1.0, 1.0, 1.0),
                   label=RawLabel.BUILDING, ground=None, duration=1.0):
    return World(statics=(Primitive(center, half, label),), actors=(),
                 ground=ground, duration=duration, tick=0.1)


def make_ego_world(statics=(), actors=(), ground=GroundPlane(0.0, 0.0, 4.0),
                   duration=2.0, ego_xyz=(0.0, 0.0, 0.0)):
    """World with a parked ego vehicle plus whatever else the test needs."""
    ego = Actor(
        primitive=Primitive((0.0, 0.0, 0.75), (2.2, 0.9, 0.75), RawLabel.VEHICLES),
        keyframes=((0.0, Pose.from_yaw(0.0, ego_xyz)),),
        is_ego=True,
    )
    return World(statics=tuple(statics), actors=(ego,) + tuple(actors),
                 ground=ground, duration=duration, tick=0.1)


@pytest.fixture(scope="session")
def demo_manifest():
    return io.load_manifest(REPO_ROOT / "scenes" / "demo.json")


@pytest.fixture(scope="session")
def demo_world(demo_manifest):
    from semvox.world import load_world

    return load_world(demo_manifest.resolve_world_path())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def surface_distance(world, t, points, exclude_actors=()):
    """Distance from each point to the nearest primitive surface or the ground
    plane (unsigned; zero on a surface). Independent of the ray kernels."""
    from semvox.world import _scene_boxes

    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dist = np.full(p.shape[0], np.inf)
    s = _scene_boxes(world, t, exclude_actors)
    for b in range(len(s.labels)):
        local = (p - s.trans[b]) @ s.rot[b].T
        center = (s.lo[b] + s.hi[b]) / 2.0
        he = (s.hi[b] - s.lo[b]) / 2.0
        q = np.abs(local - center) - he
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = -np.max(q, axis=1)
        d = np.where((q > 0).any(axis=1), outside, inside)
        dist = np.minimum(dist, np.abs(d))
    if world.ground is not None:
        dist = np.minimum(dist, np.abs(p[:, 2] - world.ground.z))
    return dist

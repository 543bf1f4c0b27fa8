import numpy as np
import pytest

from conftest import make_box_world, make_ego_world
from semvox.geometry import Pose
from semvox.labels import FREE_RAW_ID, RawLabel
from semvox.world import (Actor, GroundPlane, Primitive, World, actor_pose_at,
                          load_world, point_in_solid, query_label,
                          query_label_batch, raycast_batch, save_world,
                          semantic_raycast, world_from_dict, world_to_dict)


def linear_actor(x0, x1, t1, label=RawLabel.VEHICLES, half=(1.0, 1.0, 1.0)):
    return Actor(
        primitive=Primitive((0.0, 0.0, 0.0), half, label),
        keyframes=((0.0, Pose.from_translation((x0, 0.0, 0.0))),
                   (t1, Pose.from_translation((x1, 0.0, 0.0)))),
    )


class TestActorPoseAt:
    def test_single_keyframe_clamps(self):
        pose = Pose.from_translation((3.0, 4.0, 5.0))
        actor = Actor(Primitive((0, 0, 0), (1, 1, 1), RawLabel.VEHICLES),
                      ((0.0, pose),))
        got = actor_pose_at(actor, 5.0)
        np.testing.assert_array_equal(got.translation, pose.translation)

    def test_linear_midpoint(self):
        actor = linear_actor(0.0, 20.0, 10.0)
        np.testing.assert_allclose(actor_pose_at(actor, 5.0).translation[0], 10.0)

    def test_linear_interpolation(self):
        actor = linear_actor(0.0, 20.0, 10.0)
        np.testing.assert_allclose(actor_pose_at(actor, 2.5).translation[0], 5.0)

    def test_clamps_outside_range(self):
        actor = linear_actor(0.0, 20.0, 10.0)
        np.testing.assert_allclose(actor_pose_at(actor, 12.0).translation[0], 20.0)

    def test_yaw_interpolates_shortest_arc(self):
        a = Actor(Primitive((0, 0, 0), (1, 1, 1), RawLabel.VEHICLES),
                  ((0.0, Pose.from_yaw(0.0)), (1.0, Pose.from_yaw(np.pi / 2))))
        got = actor_pose_at(a, 0.5)
        np.testing.assert_allclose(got.rotation, Pose.from_yaw(np.pi / 4).rotation,
                                   atol=1e-12)


class TestSemanticRaycast:
    def test_empty_world_misses(self):
        world = World(duration=1.0, tick=0.1)
        assert semantic_raycast(world, 0.0, (0, 0, 0), (1, 0, 0), 50.0) is None

    def test_slab_hit(self):
        world = make_box_world(center=(10, 0, 0), half=(1, 1, 1))
        hit = semantic_raycast(world, 0.0, (0, 0, 0), (1, 0, 0), 50.0)
        assert hit is not None
        np.testing.assert_allclose(hit.point, [9.0, 0.0, 0.0], atol=1e-12)
        assert hit.distance == pytest.approx(9.0, abs=1e-12)
        assert hit.label == RawLabel.BUILDING
        assert hit.actor_index is None

    def test_beyond_range_misses(self):
        world = make_box_world(center=(10, 0, 0), half=(1, 1, 1))
        assert semantic_raycast(world, 0.0, (0, 0, 0), (1, 0, 0), 5.0) is None

    def test_non_unit_direction_rejected(self):
        world = make_box_world()
        with pytest.raises(ValueError, match="unit"):
            semantic_raycast(world, 0.0, (0, 0, 0), (2, 0, 0), 50.0)

    def test_actor_hit_reports_index(self):
        world = make_ego_world(actors=(linear_actor(10.0, 10.0, 1.0),), ground=None)
        hit = semantic_raycast(world, 0.0, (3.0, 0, 3.0), (1, 0, 0), 50.0)
        assert hit is None  # actor box spans z in [-1, 1], the ray is above it
        hit = semantic_raycast(world, 0.0, (3.0, 0, 0.5), (1, 0, 0), 50.0)
        assert hit is not None and hit.actor_index == 1

    def test_exclusion_skips_actor(self):
        world = make_ego_world(actors=(linear_actor(10.0, 11.0, 1.0),), ground=None)
        hit = semantic_raycast(world, 0.0, (3.0, 0, 0.5), (1, 0, 0), 50.0,
                               exclude_actors=(1,))
        assert hit is None

    def test_ray_from_inside_passes_through(self):
        # Entry-face-only rule: a ray starting inside a box does not hit it.
        world = make_box_world(center=(0, 0, 0), half=(1, 1, 1))
        assert semantic_raycast(world, 0.0, (0, 0, 0), (1, 0, 0), 50.0) is None

    def test_ground_region_labels(self):
        world = World(ground=GroundPlane(0.0, 0.0, 4.0), duration=1.0, tick=0.1)
        down = (0.0, 0.0, -1.0)
        road = semantic_raycast(world, 0.0, (0, 2.0, 5.0), down, 50.0)
        off = semantic_raycast(world, 0.0, (0, 6.0, 5.0), down, 50.0)
        assert road.label == RawLabel.ROAD
        assert off.label == RawLabel.GROUND
        assert road.distance == pytest.approx(5.0)

    def test_nearest_hit_is_minimum_entry_distance(self, rng):
        # Brute-force scan over all boxes, independent of the kernel.
        prims = [Primitive(rng.uniform(-15, 15, 3), rng.uniform(0.3, 3.0, 3),
                           RawLabel.BUILDING) for _ in range(25)]
        world = World(statics=tuple(prims), duration=1.0, tick=0.1)
        for _ in range(200):
            origin = rng.uniform(-20, 20, 3)
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            hit = semantic_raycast(world, 0.0, origin, d, 60.0)
            expected = np.inf
            for p in prims:
                lo, hi = p.center - p.half_extents, p.center + p.half_extents
                with np.errstate(divide="ignore", invalid="ignore"):
                    t1 = (lo - origin) / d
                    t2 = (hi - origin) / d
                tent = np.fmax.reduce(np.fmin(t1, t2))
                tex = np.fmin.reduce(np.fmax(t1, t2))
                if tent <= tex and 0.0 < tent <= 60.0:
                    expected = min(expected, tent)
            if np.isinf(expected):
                assert hit is None
            else:
                assert hit is not None
                assert hit.distance == pytest.approx(expected, abs=1e-9)

    def test_determinism(self, rng):
        world = make_ego_world(statics=make_box_world().statics,
                               actors=(linear_actor(5.0, 15.0, 2.0),))
        origins = rng.uniform(-5, 5, (500, 3))
        dirs = rng.normal(size=(500, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        a = raycast_batch(world, 1.3, origins, dirs, 50.0)
        b = raycast_batch(world, 1.3, origins, dirs, 50.0)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


class TestQueryLabel:
    def test_inside_box(self):
        world = make_box_world(center=(10, 0, 0), half=(1, 1, 1))
        assert query_label(world, 0.0, (10, 0, 0)) == RawLabel.BUILDING

    def test_open_air_is_free(self):
        world = make_box_world(ground=GroundPlane(0.0, 0.0, 4.0))
        assert query_label(world, 0.0, (0, 0, 5.0)) == FREE_RAW_ID

    def test_below_ground_is_ground_region(self):
        world = World(ground=GroundPlane(0.0, 0.0, 4.0), duration=1.0, tick=0.1)
        assert query_label(world, 0.0, (0, 0.0, -0.5)) == RawLabel.ROAD
        assert query_label(world, 0.0, (0, 9.0, -0.5)) == RawLabel.GROUND

    def test_moving_actor_containment(self):
        # At t=3 the box covers x=6; at t=0 it does not.
        actor = linear_actor(0.0, 20.0, 10.0)
        world = World(actors=(actor,), duration=10.0, tick=0.1)
        assert query_label(world, 3.0, (6.0, 0, 0)) == RawLabel.VEHICLES
        assert query_label(world, 0.0, (6.0, 0, 0)) == FREE_RAW_ID

    def test_nearest_surface_tiebreak(self):
        # A thin pole nested inside a large building: points near the pole
        # surface belong to the pole.
        big = Primitive((0, 0, 0), (5, 5, 5), RawLabel.BUILDING)
        thin = Primitive((0, 0, 0), (0.1, 0.1, 5), RawLabel.POLE)
        world = World(statics=(big, thin), duration=1.0, tick=0.1)
        assert query_label(world, 0.0, (0.05, 0, 0)) == RawLabel.POLE
        assert query_label(world, 0.0, (3.0, 0, 0)) == RawLabel.BUILDING

    def test_oracle_consistency_with_raycast(self, rng):
        """Nudging 1 mm past any hit surface lands inside matter of the same label."""
        prims = [Primitive(rng.uniform(-12, 12, 3), rng.uniform(0.5, 2.5, 3),
                           RawLabel(int(rng.integers(1, 23))))
                 for _ in range(15)]
        world = World(statics=tuple(prims), ground=GroundPlane(0.0, 0.0, 4.0),
                      duration=1.0, tick=0.1)
        checked = 0
        for _ in range(300):
            origin = rng.uniform(-15, 15, 3)
            origin[2] = abs(origin[2]) + 3.0
            if point_in_solid(world, 0.0, origin):
                continue
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            hit = semantic_raycast(world, 0.0, origin, d, 60.0)
            if hit is None:
                continue
            nudged = hit.point + 1e-3 * d
            assert query_label(world, 0.0, nudged) == hit.label
            checked += 1
        assert checked > 50

    def test_batch_matches_scalar(self, rng):
        world = make_ego_world(statics=make_box_world().statics)
        pts = rng.uniform(-12, 12, (100, 3))
        batch = query_label_batch(world, 0.0, pts)
        for i in range(0, 100, 7):
            assert batch[i] == query_label(world, 0.0, pts[i])


class TestWorldValidation:
    def test_two_egos_rejected(self):
        ego = Actor(Primitive((0, 0, 0.75), (2, 1, 0.75), RawLabel.VEHICLES),
                    ((0.0, Pose.identity()),), is_ego=True)
        with pytest.raises(ValueError, match="ego"):
            World(actors=(ego, ego), duration=1.0, tick=0.1)

    def test_duration_must_be_multiple_of_tick(self):
        with pytest.raises(ValueError, match="multiple"):
            World(duration=1.05, tick=0.1)

    def test_bad_half_extents(self):
        with pytest.raises(ValueError):
            Primitive((0, 0, 0), (1.0, 0.0, 1.0), RawLabel.BUILDING)

    def test_keyframes_strictly_increasing(self):
        with pytest.raises(ValueError, match="increasing"):
            Actor(Primitive((0, 0, 0), (1, 1, 1), RawLabel.VEHICLES),
                  ((0.0, Pose.identity()), (0.0, Pose.identity())))


def test_world_json_round_trip(tmp_path):
    from semvox.worldgen import generate_world

    world = generate_world(3, "low")
    path = tmp_path / "w.json"
    save_world(path, world)
    loaded = load_world(path)
    assert world_to_dict(loaded) == world_to_dict(world)
    assert loaded.duration == world.duration
    assert len(loaded.statics) == len(world.statics)
    assert loaded.ego_index == world.ego_index


def test_world_json_rejects_bad_version():
    from semvox.errors import FormatError

    with pytest.raises(FormatError, match="format_version"):
        world_from_dict({"format_version": 99, "statics": [], "actors": [],
                         "duration_s": 1.0, "tick_s": 0.1})

import sys
from pathlib import Path

import numpy as np
import pytest

from semvox import io
from semvox.errors import FormatError
from semvox.geometry import Pose
from semvox.grid import GridSpec, LabelGrid, OccupancyStack, build_stack
from semvox.labels import PALETTE_RGB, UNLABELED_ID, RemappedLabel
from semvox.lidar import LidarSpec, PointCloud

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "scripts"))
import make_goldens  # noqa: E402

GOLDEN = Path(__file__).resolve().parent / "golden"


class TestCloudFormat:
    def test_empty_cloud_round_trip(self, tmp_path):
        cloud = PointCloud(np.empty((0, 3), np.float32), np.empty(0, np.uint8),
                           Pose.identity(), 0.0)
        path = tmp_path / "empty.csc"
        io.write_cloud(path, cloud)
        assert path.stat().st_size == 8  # magic + zero count
        back = io.read_cloud(path)
        assert len(back) == 0

    def test_round_trip_bit_exact(self, tmp_path, rng):
        pts = rng.normal(0, 20, (100, 3)).astype(np.float32)
        labs = rng.integers(0, 23, 100).astype(np.uint8)
        cloud = PointCloud(pts, labs, Pose.identity(), 0.5, 3)
        path = tmp_path / "c.csc"
        io.write_cloud(path, cloud)
        back = io.read_cloud(path, t=0.5, sensor_id=3)
        assert back.positions.tobytes() == cloud.positions.tobytes()
        np.testing.assert_array_equal(back.labels, cloud.labels)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.csc"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(FormatError, match="magic"):
            io.read_cloud(path)

    def test_truncation_reports_offset(self, tmp_path):
        good = tmp_path / "good.csc"
        io.write_cloud(good, make_goldens.golden_cloud())
        data = good.read_bytes()
        bad = tmp_path / "trunc.csc"
        bad.write_bytes(data[:-5])
        with pytest.raises(FormatError, match="byte"):
            io.read_cloud(bad)

    def test_trailing_bytes_rejected(self, tmp_path):
        good = tmp_path / "good.csc"
        io.write_cloud(good, make_goldens.golden_cloud())
        bad = tmp_path / "trail.csc"
        bad.write_bytes(good.read_bytes() + b"x")
        with pytest.raises(FormatError, match="trailing"):
            io.read_cloud(bad)


class TestGridFormat:
    def test_all_invalid_round_trip(self, tmp_path):
        spec = GridSpec.default()
        grid = LabelGrid(spec, np.full(spec.shape, UNLABELED_ID, np.uint8),
                         np.zeros(spec.shape, bool))
        path = tmp_path / "g.csg"
        io.write_grid(path, grid)
        back = io.read_grid(path)
        assert back.spec == spec
        assert (back.labels == UNLABELED_ID).all()
        assert not back.valid.any()

    def test_round_trip_bit_exact(self, tmp_path, rng):
        spec = GridSpec.default()
        labels = rng.integers(0, 11, spec.shape).astype(np.uint8)
        valid = rng.random(spec.shape) < 0.7
        labels[~valid] = UNLABELED_ID
        grid = LabelGrid(spec, labels, valid)
        path = tmp_path / "g.csg"
        io.write_grid(path, grid)
        io.write_grid(tmp_path / "g2.csg", io.read_grid(path))
        assert path.read_bytes() == (tmp_path / "g2.csg").read_bytes()


class TestStackFormat:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        spec = GridSpec.default()
        clouds = [PointCloud(rng.uniform(-20, 20, (200, 3)).astype(np.float32),
                             rng.integers(1, 23, 200).astype(np.uint8),
                             Pose.from_translation((0.2 * i, 0, 0)), 0.1 * i)
                  for i in range(16)]
        stack = build_stack(clouds, spec)
        path = tmp_path / "s.cst"
        io.write_stack(path, stack)
        back = io.read_stack(path)
        np.testing.assert_array_equal(back.grids, stack.grids)
        io.write_stack(tmp_path / "s2.cst", back)
        assert path.read_bytes() == (tmp_path / "s2.cst").read_bytes()

    def test_header_depth(self, tmp_path):
        io.write_stack(tmp_path / "s.cst", make_goldens.golden_stack())
        raw = (tmp_path / "s.cst").read_bytes()
        assert raw[:4] == b"CST1"
        assert int.from_bytes(raw[4:8], "little") == 2


class TestPoseFile:
    def test_identity_line(self, tmp_path):
        path = tmp_path / "poses.txt"
        path.write_text("1 0 0 0 0 1 0 0 0 0 1 0\n")
        (pose,) = io.read_poses(path)
        np.testing.assert_array_equal(pose.rotation, np.eye(3))
        np.testing.assert_array_equal(pose.translation, np.zeros(3))

    def test_round_trip_bit_exact(self, tmp_path, rng):
        poses = [Pose.from_yaw(rng.uniform(0, 2 * np.pi), rng.normal(size=3))
                 for _ in range(5)]
        path = tmp_path / "poses.txt"
        io.write_poses(path, poses)
        back = io.read_poses(path)
        for a, b in zip(poses, back):
            assert a.rotation.tobytes() == b.rotation.tobytes()
            assert a.translation.tobytes() == b.translation.tobytes()

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "poses.txt"
        path.write_text("1 0 0\n")
        with pytest.raises(FormatError, match="12"):
            io.read_poses(path)

    def test_non_orthonormal_rejected(self, tmp_path):
        path = tmp_path / "poses.txt"
        path.write_text("2 0 0 0 0 1 0 0 0 0 1 0\n")
        with pytest.raises(FormatError, match="orthonormal"):
            io.read_poses(path)


class TestGoldenFiles:
    """Pin the byte layouts: writers must reproduce the committed files."""

    def test_cloud_bytes(self, tmp_path):
        io.write_cloud(tmp_path / "c.csc", make_goldens.golden_cloud())
        assert (tmp_path / "c.csc").read_bytes() == (GOLDEN / "cloud3.csc").read_bytes()

    def test_grid_bytes(self, tmp_path):
        io.write_grid(tmp_path / "g.csg", make_goldens.golden_grid())
        assert (tmp_path / "g.csg").read_bytes() == (GOLDEN / "grid.csg").read_bytes()

    def test_stack_bytes(self, tmp_path):
        io.write_stack(tmp_path / "s.cst", make_goldens.golden_stack())
        assert (tmp_path / "s.cst").read_bytes() == (GOLDEN / "stack.cst").read_bytes()

    def test_poses_bytes(self, tmp_path):
        io.write_poses(tmp_path / "p.txt", make_goldens.golden_poses())
        assert (tmp_path / "p.txt").read_bytes() == (GOLDEN / "poses.txt").read_bytes()

    def test_goldens_read_back(self):
        cloud = io.read_cloud(GOLDEN / "cloud3.csc")
        ref = make_goldens.golden_cloud()
        assert cloud.positions.tobytes() == ref.positions.tobytes()
        grid = io.read_grid(GOLDEN / "grid.csg")
        np.testing.assert_array_equal(grid.labels, make_goldens.golden_grid().labels)
        stack = io.read_stack(GOLDEN / "stack.cst")
        np.testing.assert_array_equal(stack.grids, make_goldens.golden_stack().grids)


class TestManifest:
    def test_round_trip(self, tmp_path):
        from semvox.rig import RigBounds, sample_rig

        manifest = io.SceneManifest(
            world_path="w.json", seed=5, frames=30, tick_s=0.1,
            traffic_preset="low", free_step_m=1.5, lidar=LidarSpec(),
            rig=sample_rig(RigBounds(), 4, 5), grid=GridSpec.default(),
            base_dir=tmp_path)
        path = tmp_path / "m.json"
        io.save_manifest(path, manifest)
        back = io.load_manifest(path)
        assert io.manifest_to_dict(back) == io.manifest_to_dict(manifest)
        assert back.resolve_world_path() == tmp_path / "w.json"

    def test_tampered_mounts_rejected(self, tmp_path):
        import json

        from semvox.rig import RigBounds, sample_rig

        manifest = io.SceneManifest(
            world_path="w.json", seed=5, frames=30, tick_s=0.1,
            traffic_preset="low", free_step_m=1.5, lidar=LidarSpec(),
            rig=sample_rig(RigBounds(), 4, 5), grid=GridSpec.default())
        doc = io.manifest_to_dict(manifest)
        doc["rig"]["aux_mounts_xyz"][0][2] += 0.5
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(FormatError, match="mounts"):
            io.load_manifest(path)


class TestRenderBev:
    def _read_ppm(self, path):
        raw = Path(path).read_bytes()
        header, rest = raw.split(b"\n", 1)
        assert header == b"P6"
        dims, rest = rest.split(b"\n", 1)
        w, h = (int(v) for v in dims.split())
        maxval, pixels = rest.split(b"\n", 1)
        assert maxval == b"255"
        return np.frombuffer(pixels, np.uint8).reshape(h, w, 3)

    def test_all_free_uniform(self, tmp_path):
        spec = GridSpec.default()
        grid = LabelGrid(spec, np.zeros(spec.shape, np.uint8),
                         np.ones(spec.shape, bool))
        io.render_bev(grid, tmp_path / "f.ppm")
        img = self._read_ppm(tmp_path / "f.ppm")
        assert img.shape == (128, 128, 3)
        assert (img == PALETTE_RGB[int(RemappedLabel.FREE)]).all()

    def test_single_building_voxel(self, tmp_path):
        spec = GridSpec.default()
        labels = np.zeros(spec.shape, np.uint8)
        valid = np.ones(spec.shape, bool)
        labels[64, 64, 7] = int(RemappedLabel.BUILDING)
        io.render_bev(LabelGrid(spec, labels, valid), tmp_path / "b.ppm")
        img = self._read_ppm(tmp_path / "b.ppm")
        hits = np.argwhere((img == PALETTE_RGB[int(RemappedLabel.BUILDING)]).all(axis=2))
        assert len(hits) == 1
        row, col = hits[0]
        assert col == 64 and row == 128 - 1 - 64

    def test_highest_voxel_wins(self, tmp_path):
        spec = GridSpec.default()
        labels = np.zeros(spec.shape, np.uint8)
        valid = np.ones(spec.shape, bool)
        labels[10, 10, 2] = int(RemappedLabel.ROAD)
        labels[10, 10, 6] = int(RemappedLabel.VEHICLES)
        io.render_bev(LabelGrid(spec, labels, valid), tmp_path / "t.ppm")
        img = self._read_ppm(tmp_path / "t.ppm")
        assert (img[128 - 1 - 10, 10] == PALETTE_RGB[int(RemappedLabel.VEHICLES)]).all()

    def test_invalid_column_black(self, tmp_path):
        spec = GridSpec.default()
        grid = LabelGrid(spec, np.full(spec.shape, UNLABELED_ID, np.uint8),
                         np.zeros(spec.shape, bool))
        io.render_bev(grid, tmp_path / "i.ppm")
        img = self._read_ppm(tmp_path / "i.ppm")
        assert (img == 0).all()

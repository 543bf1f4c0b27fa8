"""Regenerate the golden binary files under tests/golden/.

Run from the repo root after an intentional format change, then review the
hexdump diffs by hand; the formats are frozen otherwise.
"""

from pathlib import Path

import numpy as np

from semvox import io
from semvox.geometry import Pose
from semvox.grid import GridSpec, LabelGrid, OccupancyStack

OUT = Path(__file__).resolve().parent.parent / "tests" / "golden"


def golden_cloud():
    from semvox.lidar import PointCloud

    positions = np.array([[1.0, 2.0, 3.0],
                          [-0.5, 0.25, 50.0],
                          [0.0, -0.0, 1.5]], dtype=np.float32)
    labels = np.array([14, 22, 255], dtype=np.uint8)
    return PointCloud(positions, labels, Pose.identity(), 0.0, 0)


def golden_grid():
    spec = GridSpec((-1.0, -2.0, 0.0), (1.0, 2.0, 1.5), (2, 4, 3))
    labels = np.full(spec.shape, 255, np.uint8)
    valid = np.zeros(spec.shape, bool)
    labels[0, 0, 0] = 6   # Road
    labels[1, 3, 2] = 0   # Free
    labels[1, 0, 1] = 10  # Vehicles
    valid[0, 0, 0] = valid[1, 3, 2] = valid[1, 0, 1] = True
    return LabelGrid(spec, labels, valid)


def golden_stack():
    spec = GridSpec((-1.0, -2.0, 0.0), (1.0, 2.0, 1.5), (2, 4, 3))
    grids = np.zeros((2, 3, 2, 4), np.uint8)
    grids[0, 0, 0, 0] = 1
    grids[0, 2, 1, 3] = 1
    grids[1, 1, 1, 1] = 1
    return OccupancyStack(spec=spec, grids=grids, poses=None, t_latest=0.1)


def golden_poses():
    return [Pose.identity(),
            Pose.from_yaw(np.pi / 2, (1.0, -2.0, 0.25))]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    io.write_cloud(OUT / "cloud3.csc", golden_cloud())
    io.write_grid(OUT / "grid.csg", golden_grid())
    io.write_stack(OUT / "stack.cst", golden_stack())
    io.write_poses(OUT / "poses.txt", golden_poses())
    for name in ("cloud3.csc", "grid.csg", "stack.cst", "poses.txt"):
        print(name, (OUT / name).stat().st_size, "bytes")


if __name__ == "__main__":
    main()

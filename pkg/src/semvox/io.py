"""Persistence: bit-exact little-endian binary formats for clouds, label
grids, and occupancy stacks; text pose files; the JSON scene manifest; and a
PPM bird's-eye-view renderer.

Byte layouts are documented in docs/formats.md and pinned by golden-file
tests.  Every writer/reader pair satisfies read(write(x)) == x on its domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from semvox.errors import FormatError
from semvox.geometry import Pose
from semvox.grid import GridSpec, LabelGrid, OccupancyStack
from semvox.labels import (INVALID_RGB, N_CLASSES, PALETTE_RGB, UNLABELED_ID,
                           RemappedLabel)
from semvox.lidar import LidarSpec, PointCloud
from semvox.rig import EGO_MOUNT_XYZ, Rig, RigBounds, sample_rig

CLOUD_MAGIC = b"CSC1"
GRID_MAGIC = b"CSG1"
STACK_MAGIC = b"CST1"
MANIFEST_FORMAT_VERSION = 1


def _read_exact(f, n: int, path, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"{path}: truncated {what} at byte {f.tell() - len(data)}"
                          f" (wanted {n} bytes, got {len(data)})")
    return data


def _check_magic(f, magic: bytes, path) -> None:
    got = _read_exact(f, len(magic), path, "magic")
    if got != magic:
        raise FormatError(f"{path}: bad magic at byte 0: {got!r} != {magic!r}")


# --- point clouds -------------------------------------------------------------

def write_cloud(path, cloud: PointCloud) -> None:
    """Magic "CSC1", u32 count, then per point 3 x f32 position + u32 raw label."""
    n = len(cloud)
    rec = np.empty((n, 4), dtype="<u4")
    rec[:, :3] = cloud.positions.astype("<f4").view("<u4")
    rec[:, 3] = cloud.labels.astype("<u4")
    with open(path, "wb") as f:
        f.write(CLOUD_MAGIC)
        f.write(np.uint32(n).astype("<u4").tobytes())
        f.write(rec.tobytes())


def read_cloud(path, sensor_pose: Optional[Pose] = None, t: float = 0.0,
               sensor_id: int = 0) -> PointCloud:
    """Inverse of write_cloud.  The file stores points only; pose and time
    live in the pose file / manifest and may be supplied here."""
    with open(path, "rb") as f:
        _check_magic(f, CLOUD_MAGIC, path)
        (n,) = np.frombuffer(_read_exact(f, 4, path, "point count"), "<u4")
        rec = np.frombuffer(_read_exact(f, int(n) * 16, path, "point records"),
                            "<u4").reshape(int(n), 4)
        extra = f.read(1)
        if extra:
            raise FormatError(f"{path}: trailing bytes after {n} points at byte {f.tell() - 1}")
    positions = rec[:, :3].view("<f4").astype(np.float32)
    labels = rec[:, 3].astype(np.uint8)
    return PointCloud(positions, labels, sensor_pose or Pose.identity(), t, sensor_id)


# --- label grids --------------------------------------------------------------

def _write_spec(f, spec: GridSpec) -> None:
    ext = np.array([spec.mins[0], spec.maxs[0], spec.mins[1], spec.maxs[1],
                    spec.mins[2], spec.maxs[2]], dtype="<f8")
    f.write(ext.tobytes())
    f.write(np.asarray(spec.shape, dtype="<u4").tobytes())


def _read_spec(f, path) -> GridSpec:
    ext = np.frombuffer(_read_exact(f, 48, path, "grid extents"), "<f8")
    shape = np.frombuffer(_read_exact(f, 12, path, "grid shape"), "<u4")
    return GridSpec((ext[0], ext[2], ext[4]), (ext[1], ext[3], ext[5]),
                    tuple(int(v) for v in shape))


def write_grid(path, grid: LabelGrid) -> None:
    """Magic "CSG1", 6 x f64 extents (xmin, xmax, ymin, ymax, zmin, zmax),
    3 x u32 shape, then u8 labels and u8 validity, both x-major
    (index = ((ix * Y) + iy) * Z + iz)."""
    with open(path, "wb") as f:
        f.write(GRID_MAGIC)
        _write_spec(f, grid.spec)
        f.write(np.ascontiguousarray(grid.labels, dtype=np.uint8).tobytes())
        f.write(np.ascontiguousarray(grid.valid, dtype=np.uint8).tobytes())


def read_grid(path) -> LabelGrid:
    with open(path, "rb") as f:
        _check_magic(f, GRID_MAGIC, path)
        spec = _read_spec(f, path)
        n = spec.n_voxels
        labels = np.frombuffer(_read_exact(f, n, path, "labels"), np.uint8)
        valid = np.frombuffer(_read_exact(f, n, path, "validity mask"), np.uint8)
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes after grid payload")
    labels = labels.reshape(spec.shape).copy()
    valid = valid.reshape(spec.shape).astype(bool)
    return LabelGrid(spec, labels, valid)


# --- occupancy stacks ---------------------------------------------------------

def write_stack(path, stack: OccupancyStack) -> None:
    """Magic "CST1", u32 T, grid spec header as in "CSG1", then T binary
    layers, each (Z, X, Y) C-order bit-packed big-endian-within-byte."""
    t = stack.grids.shape[0]
    with open(path, "wb") as f:
        f.write(STACK_MAGIC)
        f.write(np.uint32(t).astype("<u4").tobytes())
        _write_spec(f, stack.spec)
        for layer in stack.grids:
            f.write(np.packbits(layer.reshape(-1)).tobytes())


def read_stack(path) -> OccupancyStack:
    with open(path, "rb") as f:
        _check_magic(f, STACK_MAGIC, path)
        (t,) = np.frombuffer(_read_exact(f, 4, path, "stack depth"), "<u4")
        spec = _read_spec(f, path)
        nx, ny, nz = spec.shape
        bits = nz * nx * ny
        nbytes = (bits + 7) // 8
        layers = []
        for _ in range(int(t)):
            raw = np.frombuffer(_read_exact(f, nbytes, path, "stack layer"), np.uint8)
            layers.append(np.unpackbits(raw, count=bits).reshape(nz, nx, ny))
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes after stack payload")
    grids = np.ascontiguousarray(np.stack(layers), dtype=np.uint8)
    return OccupancyStack(spec=spec, grids=grids, poses=None, t_latest=0.0)


# --- pose files ---------------------------------------------------------------

def write_poses(path, poses: Sequence[Pose]) -> None:
    """One line per frame: 12 whitespace-separated numbers, row-major 3x4 [R|t].
    Floats are written with shortest round-trip precision."""
    lines = []
    for p in poses:
        lines.append(" ".join(repr(float(v)) for v in p.matrix34().reshape(-1)))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_poses(path) -> list:
    poses = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        vals = line.split()
        if len(vals) != 12:
            raise FormatError(f"{path}:{ln}: expected 12 numbers, got {len(vals)}")
        m = np.array([float(v) for v in vals]).reshape(3, 4)
        r = m[:, :3]
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-6:
            raise FormatError(f"{path}:{ln}: rotation not orthonormal")
        poses.append(Pose(r, m[:, 3]))
    return poses


# --- scene manifest -----------------------------------------------------------

@dataclass(frozen=True)
class SceneManifest:
    """Everything needed to reproduce one scene, world file aside."""

    world_path: str
    seed: int
    frames: int
    tick_s: float
    traffic_preset: str
    free_step_m: float
    lidar: LidarSpec
    rig: Rig
    grid: GridSpec
    base_dir: Path = Path(".")

    def resolve_world_path(self) -> Path:
        p = Path(self.world_path)
        return p if p.is_absolute() else self.base_dir / p


def manifest_to_dict(m: SceneManifest) -> dict:
    return {
        "format_version": MANIFEST_FORMAT_VERSION,
        "world": m.world_path,
        "seed": m.seed,
        "frames": m.frames,
        "tick_s": m.tick_s,
        "traffic_preset": m.traffic_preset,
        "free_step_m": m.free_step_m,
        "lidar": {
            "channels": m.lidar.channels,
            "vertical_fov_deg": list(m.lidar.vertical_fov_deg),
            "azimuth_steps": m.lidar.azimuth_steps,
            "max_range_m": m.lidar.max_range,
            "noise_bound_m": m.lidar.noise_bound,
            "rate_hz": m.lidar.rate_hz,
        },
        "rig": {
            "seed": m.rig.seed,
            "n_aux": m.rig.n_aux,
            "bounds": {"x": list(m.rig.bounds.x), "y": list(m.rig.bounds.y),
                       "z": list(m.rig.bounds.z)},
            "ego_mount_xyz": [float(v) for v in m.rig.ego_mount.translation],
            "aux_mounts_xyz": [[float(v) for v in p.translation] for p in m.rig.aux_mounts],
        },
        "grid": {"x": [m.grid.mins[0], m.grid.maxs[0]],
                 "y": [m.grid.mins[1], m.grid.maxs[1]],
                 "z": [m.grid.mins[2], m.grid.maxs[2]],
                 "shape": list(m.grid.shape)},
    }


def manifest_from_dict(doc: dict, base_dir=Path(".")) -> SceneManifest:
    try:
        version = doc["format_version"]
        if version != MANIFEST_FORMAT_VERSION:
            raise FormatError(f"unsupported manifest format_version {version}")
        ld = doc["lidar"]
        lidar = LidarSpec(channels=int(ld["channels"]),
                          vertical_fov_deg=tuple(ld["vertical_fov_deg"]),
                          azimuth_steps=int(ld["azimuth_steps"]),
                          max_range=float(ld["max_range_m"]),
                          noise_bound=float(ld["noise_bound_m"]),
                          rate_hz=float(ld["rate_hz"]))
        rd = doc["rig"]
        bounds = RigBounds(tuple(rd["bounds"]["x"]), tuple(rd["bounds"]["y"]),
                           tuple(rd["bounds"]["z"]))
        rig = sample_rig(bounds, int(rd["n_aux"]), int(rd["seed"]))
        if list(rd["ego_mount_xyz"]) != list(EGO_MOUNT_XYZ):
            raise FormatError(f"manifest ego mount {rd['ego_mount_xyz']} does not match "
                              f"the fixed mount {EGO_MOUNT_XYZ}")
        stored = np.asarray(rd["aux_mounts_xyz"], dtype=np.float64).reshape(-1, 3)
        ours = np.array([p.translation for p in rig.aux_mounts]).reshape(-1, 3)
        if stored.shape != ours.shape or (stored.size and np.abs(stored - ours).max() > 1e-9):
            raise FormatError("manifest aux mounts do not match the rig seed/bounds")
        gd = doc["grid"]
        grid = GridSpec((gd["x"][0], gd["y"][0], gd["z"][0]),
                        (gd["x"][1], gd["y"][1], gd["z"][1]),
                        tuple(gd["shape"]))
        return SceneManifest(world_path=doc["world"], seed=int(doc["seed"]),
                             frames=int(doc["frames"]), tick_s=float(doc["tick_s"]),
                             traffic_preset=str(doc["traffic_preset"]),
                             free_step_m=float(doc["free_step_m"]),
                             lidar=lidar, rig=rig, grid=grid, base_dir=Path(base_dir))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed manifest: {exc!r}") from exc


def save_manifest(path, m: SceneManifest) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(m), indent=2) + "\n")


def load_manifest(path) -> SceneManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    return manifest_from_dict(doc, base_dir=path.parent)


# --- bird's-eye-view rendering ------------------------------------------------

def render_bev(grid: LabelGrid, path) -> None:
    """Top-down PPM (P6) image, one pixel per (x, y) column.

    A column shows the palette color of its highest valid non-Free voxel,
    the Free color if it only holds valid Free voxels, and black if it has no
    valid voxel at all.  Row 0 is the maximum-y edge (north up), column 0 the
    minimum-x edge.
    """
    nx, ny, nz = grid.spec.shape
    occ = grid.valid & (grid.labels != int(RemappedLabel.FREE))
    has_occ = occ.any(axis=2)
    # Highest occupied z per column (argmax on the reversed axis finds the top).
    top = nz - 1 - np.argmax(occ[:, :, ::-1], axis=2)
    img = np.empty((nx, ny, 3), dtype=np.uint8)
    img[:] = INVALID_RGB
    any_valid = grid.valid.any(axis=2)
    img[any_valid] = PALETTE_RGB[int(RemappedLabel.FREE)]
    ix, iy = np.nonzero(has_occ)
    img[ix, iy] = PALETTE_RGB[grid.labels[ix, iy, top[ix, iy]]]
    # (x, y) -> image rows of decreasing y, columns of increasing x.
    img = np.ascontiguousarray(img.transpose(1, 0, 2)[::-1])
    with open(path, "wb") as f:
        f.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        f.write(img.tobytes())

"""Rigid-body poses, quaternion interpolation, and batched point transforms.

Conventions used throughout the package:

* A ``Pose`` maps coordinates of its own (child) frame into the parent frame:
  ``p_parent = R @ p_child + t``.
* ``compose``: ``(a @ b)`` maps b's frame through a, i.e. first apply b.
* Frames are right-handed; yaw is a counter-clockwise rotation about +z.

The point-transform arithmetic is written component-by-component in a fixed
order so that the numpy code here and the compiled kernels produce
bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Tolerance for rotation-matrix orthonormality checks.
ORTHO_TOL = 1e-9


def apply_rotation(points: np.ndarray, rot: np.ndarray) -> np.ndarray:
    """Rotate (N, 3) or (3,) points. Fixed evaluation order (see module docs)."""
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    if single:
        p = p[None, :]
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    out = np.empty_like(p)
    out[:, 0] = x * rot[0, 0] + y * rot[0, 1] + z * rot[0, 2]
    out[:, 1] = x * rot[1, 0] + y * rot[1, 1] + z * rot[1, 2]
    out[:, 2] = x * rot[2, 0] + y * rot[2, 1] + z * rot[2, 2]
    return out[0] if single else out


def apply_rigid(points: np.ndarray, rot: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """Apply ``p -> R p + t`` to (N, 3) or (3,) points."""
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    if single:
        p = p[None, :]
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    out = np.empty_like(p)
    out[:, 0] = x * rot[0, 0] + y * rot[0, 1] + z * rot[0, 2] + trans[0]
    out[:, 1] = x * rot[1, 0] + y * rot[1, 1] + z * rot[1, 2] + trans[1]
    out[:, 2] = x * rot[2, 0] + y * rot[2, 1] + z * rot[2, 2] + trans[2]
    return out[0] if single else out


def _check_rotation(r: np.ndarray) -> None:
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {r.shape}")
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err > ORTHO_TOL:
        raise ValueError(f"rotation not orthonormal (max deviation {err:.3e})")
    det = float(np.linalg.det(r))
    if abs(det - 1.0) > ORTHO_TOL:
        raise ValueError(f"rotation determinant {det} != +1")


@dataclass(frozen=True)
class Pose:
    """Rigid transform: orthonormal 3x3 rotation plus translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        r = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        _check_rotation(r)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_yaw(yaw_rad: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        c, s = math.cos(yaw_rad), math.sin(yaw_rad)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return Pose(rot, np.asarray(translation, dtype=np.float64))

    @staticmethod
    def from_translation(translation) -> "Pose":
        return Pose(np.eye(3), np.asarray(translation, dtype=np.float64))

    def compose(self, other: "Pose") -> "Pose":
        """self after other: ``(self.compose(other)).apply(p) == self.apply(other.apply(p))``."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        rt = self.rotation.T.copy()
        return Pose(rt, -(rt @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return apply_rigid(points, self.rotation, self.translation)

    def matrix34(self) -> np.ndarray:
        """Row-major 3x4 [R | t]."""
        return np.hstack([self.rotation, self.translation[:, None]])


def transform_points(points: np.ndarray, frm: Pose, to: Pose) -> np.ndarray:
    """Re-express points given in frame ``frm`` in frame ``to`` (applies to^-1 o frm).

    The relative transform is composed first and applied once, so the
    round trip ``to -> frm -> to`` is stable to ~1e-15.
    """
    if frm is to:
        return np.array(points, dtype=np.float64)
    rel = to.inverse().compose(frm)
    return rel.apply(points)


# --- quaternions (w, x, y, z), unit norm ------------------------------------

def quat_from_matrix(r: np.ndarray) -> np.ndarray:
    """Unit quaternion for a rotation matrix (Shepperd's method)."""
    m = np.asarray(r, dtype=np.float64)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return q / math.sqrt(float(q @ q))


def matrix_from_quat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = (float(v) for v in q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def slerp(q0: np.ndarray, q1: np.ndarray, u: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(q0 @ q1)
    if dot < 0.0:  # take the short way around
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-12:  # nearly parallel: nlerp avoids 0/0
        q = q0 + u * (q1 - q0)
        return q / math.sqrt(float(q @ q))
    theta = math.acos(min(dot, 1.0))
    s = math.sin(theta)
    a = math.sin((1.0 - u) * theta) / s
    b = math.sin(u * theta) / s
    q = a * q0 + b * q1
    return q / math.sqrt(float(q @ q))

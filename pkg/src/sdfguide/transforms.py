"""Rigid transforms and rotation parameterizations.

Conventions used throughout the package: rotations are proper 3x3 matrices
(det = +1), translations are millimetres, quaternions are (w, x, y, z) and
rotation vectors are axis * angle with the angle in radians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHONORMAL_TOL = 1e-9


def _vec3(v) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(3)


@dataclass
class RigidTransform:
    """Proper rigid motion: p -> rotation @ p + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        self.translation = _vec3(self.translation)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Returns self * other (apply `other` first, then `self`)."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt.copy(), -rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def is_orthonormal(self, tol: float = ORTHONORMAL_TOL) -> bool:
        r = self.rotation
        return bool(
            np.abs(r.T @ r - np.eye(3)).max() <= tol
            and abs(np.linalg.det(r) - 1.0) <= tol
        )

    def to_json_obj(self) -> dict:
        return {"q": [float(c) for c in rot_to_quat(self.rotation)],
                "t": [float(c) for c in self.translation]}

    @staticmethod
    def from_json_obj(obj: dict) -> "RigidTransform":
        return RigidTransform(quat_to_rot(obj["q"]), obj["t"])


def quat_to_rot(q) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to rotation matrix. Normalizes its input."""
    w, x, y, z = np.asarray(q, dtype=float).reshape(4)
    n = np.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rot_to_quat(r) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z), w >= 0."""
    m = np.asarray(r, dtype=float).reshape(3, 3)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def rotvec_to_rot(v) -> np.ndarray:
    """Rodrigues formula: rotation vector (axis * angle, rad) to matrix."""
    v = _vec3(v)
    angle = np.linalg.norm(v)
    if angle < 1e-12:
        k = skew(v)
        return np.eye(3) + k  # first order, adequate below 1e-12 rad
    axis = v / angle
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rot_to_rotvec(r) -> np.ndarray:
    """Log map: rotation matrix to rotation vector (axis * angle, rad)."""
    m = np.asarray(r, dtype=float).reshape(3, 3)
    cos_a = np.clip((np.trace(m) - 1.0) / 2.0, -1.0, 1.0)
    angle = float(np.arccos(cos_a))
    anti = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    if angle < 1e-7:
        return 0.5 * anti
    if angle > np.pi - 1e-6:
        # near pi the antisymmetric part vanishes; recover axis from diagonal
        d = np.diag(m)
        axis = np.sqrt(np.maximum((d + 1.0) / 2.0, 0.0))
        k = int(np.argmax(axis))
        if axis[k] > 0:
            for i in range(3):
                if i != k and m[k, i] + m[i, k] < 0:
                    axis[i] = -axis[i]
        # fix the overall sign using the antisymmetric remnant when available
        if np.dot(axis, anti) < 0:
            axis = -axis
        n = np.linalg.norm(axis)
        return axis / n * angle if n > 0 else np.zeros(3)
    return anti / (2.0 * np.sin(angle)) * angle


def rotation_angle_rad(r) -> float:
    m = np.asarray(r, dtype=float).reshape(3, 3)
    return float(np.arccos(np.clip((np.trace(m) - 1.0) / 2.0, -1.0, 1.0)))


def skew(v) -> np.ndarray:
    x, y, z = _vec3(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation via a normalized Gaussian quaternion."""
    q = rng.standard_normal(4)
    while np.linalg.norm(q) < 1e-9:
        q = rng.standard_normal(4)
    return quat_to_rot(q)


def random_transform(rng: np.random.Generator, trans_scale_mm: float = 100.0) -> RigidTransform:
    return RigidTransform(random_rotation(rng),
                          rng.uniform(-trans_scale_mm, trans_scale_mm, size=3))

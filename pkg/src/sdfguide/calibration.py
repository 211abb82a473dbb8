"""Calibration solvers: pivot, hand-eye (AX = XB), point-set registration and
a Bernstein-surface force-bias (gravity/cable drag) model.

All solvers are closed-form batch least squares; every one has a companion
synthetic-data generator so noise-free runs can be checked against exact
ground truth. Reported RMSE values are root-mean-square over per-sample
residual vector norms, in mm (and degrees for rotational residuals).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .transforms import (RigidTransform, random_rotation, rot_to_rotvec,
                         rotation_angle_rad, rotvec_to_rot)


class CalibrationError(ValueError):
    """Raised for degenerate or insufficient calibration input."""


# ---------------------------------------------------------------------------
# pivot calibration
# ---------------------------------------------------------------------------

def pivot_calibrate(poses: list[RigidTransform]) -> tuple[np.ndarray, np.ndarray, float]:
    """Recover a tool-tip offset by rotating the tool about a fixed point.

    Each pose (R_i, p_i) satisfies R_i t_tip + p_i = p_pivot; the stacked
    linear system in (t_tip, p_pivot) is solved by SVD least squares.

    Returns (tip_offset_mm, pivot_point_mm, rmse_mm).
    """
    if len(poses) < 3:
        raise CalibrationError(f"pivot calibration needs >= 3 poses, got {len(poses)}")
    n = len(poses)
    a = np.zeros((3 * n, 6))
    b = np.zeros(3 * n)
    for i, pose in enumerate(poses):
        a[3 * i:3 * i + 3, :3] = pose.rotation
        a[3 * i:3 * i + 3, 3:] = -np.eye(3)
        b[3 * i:3 * i + 3] = -pose.translation
    if np.linalg.matrix_rank(a) < 6:
        raise CalibrationError(
            "degenerate pose set: rotations do not span enough axes for pivoting")
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = (a @ x - b).reshape(n, 3)
    rmse = float(np.sqrt(np.mean(np.sum(residual ** 2, axis=1))))
    return x[:3], x[3:], rmse


def make_pivot_poses(tip_offset, pivot_point, count: int, rng: np.random.Generator,
                     noise_mm: float = 0.0) -> list[RigidTransform]:
    """Forward-generate pivoting poses: random orientations about a fixed tip point."""
    tip_offset = np.asarray(tip_offset, dtype=float)
    pivot_point = np.asarray(pivot_point, dtype=float)
    poses = []
    for _ in range(count):
        r = random_rotation(rng)
        t = pivot_point - r @ tip_offset
        if noise_mm > 0:
            t = t + rng.normal(0.0, noise_mm, size=3)
        poses.append(RigidTransform(r, t))
    return poses


# ---------------------------------------------------------------------------
# hand-eye calibration (AX = XB)
# ---------------------------------------------------------------------------

def hand_eye_calibrate(pairs: list[tuple[RigidTransform, RigidTransform]]
                       ) -> tuple[RigidTransform, float, float]:
    """Solve A_i X = X B_i for the fixed transform X.

    Two-stage closed form: the rotation aligns the motions' rotation-axis
    vectors (log maps) by orthogonal Procrustes, then the translation solves
    the stacked linear system (R_Ai - I) t_X = R_X t_Bi - t_Ai.

    Returns (X, rotation_rmse_deg, translation_rmse_mm).
    """
    if len(pairs) < 2:
        raise CalibrationError(f"hand-eye needs >= 2 motion pairs, got {len(pairs)}")
    alphas = np.array([rot_to_rotvec(a.rotation) for a, _ in pairs])
    betas = np.array([rot_to_rotvec(b.rotation) for _, b in pairs])
    angles = np.linalg.norm(alphas, axis=1)
    if np.count_nonzero(angles > 1e-9) < 2:
        raise CalibrationError("hand-eye needs at least two non-identity rotations")
    axes = alphas[angles > 1e-9] / angles[angles > 1e-9][:, None]
    cross = np.cross(axes[0], axes)
    if np.max(np.linalg.norm(cross, axis=1)) < 1e-6:
        raise CalibrationError("degenerate motions: rotation axes are all parallel")

    r_x = _fit_rotation(betas, alphas)

    n = len(pairs)
    a_mat = np.zeros((3 * n, 3))
    b_vec = np.zeros(3 * n)
    for i, (a, b) in enumerate(pairs):
        a_mat[3 * i:3 * i + 3] = a.rotation - np.eye(3)
        b_vec[3 * i:3 * i + 3] = r_x @ b.translation - a.translation
    if np.linalg.matrix_rank(a_mat) < 3:
        raise CalibrationError("degenerate motions: translation system is rank deficient")
    t_x, *_ = np.linalg.lstsq(a_mat, b_vec, rcond=None)
    x = RigidTransform(r_x, t_x)

    rot_sq = 0.0
    trans_sq = 0.0
    for a, b in pairs:
        lhs = a.compose(x)
        rhs = x.compose(b)
        rot_sq += rotation_angle_rad(rhs.rotation.T @ lhs.rotation) ** 2
        trans_sq += float(np.sum((lhs.translation - rhs.translation) ** 2))
    rot_rmse_deg = float(np.degrees(np.sqrt(rot_sq / n)))
    trans_rmse_mm = float(np.sqrt(trans_sq / n))
    return x, rot_rmse_deg, trans_rmse_mm


def make_hand_eye_pairs(x: RigidTransform, count: int, rng: np.random.Generator,
                        pos_noise_mm: float = 0.0, rot_noise_deg: float = 0.0,
                        motion_trans_mm: float = 250.0
                        ) -> list[tuple[RigidTransform, RigidTransform]]:
    """Forward-generate (A_i, B_i) motion pairs from a known X.

    Tracker-style noise: zero-mean positional noise on both translations and
    small random-axis rotational noise on both rotations.
    """
    pairs = []
    rot_noise_rad = np.radians(rot_noise_deg)
    for _ in range(count):
        a = RigidTransform(random_rotation(rng),
                           rng.uniform(-motion_trans_mm, motion_trans_mm, size=3))
        b = x.inverse().compose(a).compose(x)
        a_noisy, b_noisy = a, b
        if pos_noise_mm > 0 or rot_noise_rad > 0:
            a_noisy = _perturb(a, rng, pos_noise_mm, rot_noise_rad)
            b_noisy = _perturb(b, rng, pos_noise_mm, rot_noise_rad)
        pairs.append((a_noisy, b_noisy))
    return pairs


def _perturb(t: RigidTransform, rng: np.random.Generator, pos_sigma: float,
             rot_sigma_rad: float) -> RigidTransform:
    dr = rotvec_to_rot(rng.normal(0.0, rot_sigma_rad, size=3)) if rot_sigma_rad > 0 \
        else np.eye(3)
    dt = rng.normal(0.0, pos_sigma, size=3) if pos_sigma > 0 else np.zeros(3)
    return RigidTransform(t.rotation @ dr, t.translation + dt)


# ---------------------------------------------------------------------------
# correspondence-known rigid registration
# ---------------------------------------------------------------------------

def _fit_rotation(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Proper rotation minimizing sum |q_i - R p_i|^2 (SVD with reflection guard)."""
    h = p.T @ q
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    return vt.T @ np.diag([1.0, 1.0, d]) @ u.T


def register_points(p_points, q_points) -> tuple[RigidTransform, float]:
    """Least-squares rigid fit mapping P onto Q with known correspondences.

    Returns (transform, rmse_mm). The reflection guard flips the smallest
    singular direction so the result is always a proper rotation.
    """
    p = np.asarray(p_points, dtype=float).reshape(-1, 3)
    q = np.asarray(q_points, dtype=float).reshape(-1, 3)
    if p.shape != q.shape:
        raise CalibrationError(f"point sets differ in size: {p.shape[0]} vs {q.shape[0]}")
    if p.shape[0] < 3:
        raise CalibrationError(f"registration needs >= 3 points, got {p.shape[0]}")
    pc = p - p.mean(axis=0)
    qc = q - q.mean(axis=0)
    sv = np.linalg.svd(pc, compute_uv=False)
    if sv[1] <= max(1e-9, 1e-12 * sv[0]):
        raise CalibrationError("degenerate point set: source points are collinear")
    r = _fit_rotation(pc, qc)
    t = q.mean(axis=0) - r @ p.mean(axis=0)
    transform = RigidTransform(r, t)
    residual = transform.apply(p) - q
    rmse = float(np.sqrt(np.mean(np.sum(residual ** 2, axis=1))))
    return transform, rmse


def make_registration_points(transform: RigidTransform, count: int,
                             rng: np.random.Generator, noise_mm: float = 0.0,
                             spread_mm: float = 60.0) -> tuple[np.ndarray, np.ndarray]:
    p = rng.uniform(-spread_mm, spread_mm, size=(count, 3))
    q = transform.apply(p)
    if noise_mm > 0:
        q = q + rng.normal(0.0, noise_mm, size=q.shape)
    return p, q


# ---------------------------------------------------------------------------
# Bernstein force-bias model
# ---------------------------------------------------------------------------

def bernstein_basis(degree: int, t: np.ndarray) -> np.ndarray:
    """Rows of Bernstein basis values B_0..B_degree at parameters t in [0,1]."""
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    i = np.arange(degree + 1)[None, :]
    coeff = np.array([comb(degree, k) for k in range(degree + 1)], dtype=float)[None, :]
    return coeff * t ** i * (1.0 - t) ** (degree - i)


@dataclass
class GravityModel:
    """Tensor-product Bernstein surface per force axis over (u, v) in [0,1]^2."""

    degree: int
    coefficients: np.ndarray  # (3, degree+1, degree+1)
    fit_rmse: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float).reshape(
            3, self.degree + 1, self.degree + 1)

    def predict(self, u: float, v: float) -> np.ndarray:
        bu = bernstein_basis(self.degree, np.array([u]))[0]
        bv = bernstein_basis(self.degree, np.array([v]))[0]
        return np.einsum("kij,i,j->k", self.coefficients, bu, bv)

    def to_json_obj(self) -> dict:
        return {"degree": self.degree,
                "coefficients": self.coefficients.tolist(),
                "fit_rmse": self.fit_rmse}

    @staticmethod
    def from_json_obj(obj: dict) -> "GravityModel":
        return GravityModel(degree=int(obj["degree"]),
                            coefficients=np.asarray(obj["coefficients"], dtype=float),
                            fit_rmse=float(obj.get("fit_rmse", 0.0)))


def _design_matrix(degree: int, uv: np.ndarray) -> np.ndarray:
    bu = bernstein_basis(degree, uv[:, 0])
    bv = bernstein_basis(degree, uv[:, 1])
    return (bu[:, :, None] * bv[:, None, :]).reshape(len(uv), -1)


def fit_gravity_model(samples: list[tuple[float, float, np.ndarray]] | tuple,
                      degree: int = 3) -> GravityModel:
    """Fit the bias surface to (u, v, measured bias N) samples per axis.

    Requires at least (degree+1)^2 samples with enough parameter coverage to
    make the tensor-product system full rank.
    """
    uv = np.array([(s[0], s[1]) for s in samples], dtype=float)
    f = np.array([np.asarray(s[2], dtype=float) for s in samples])
    n_coef = (degree + 1) ** 2
    if len(uv) < n_coef:
        raise CalibrationError(
            f"need >= {n_coef} samples for degree {degree}, got {len(uv)}")
    design = _design_matrix(degree, uv)
    if np.linalg.matrix_rank(design) < n_coef:
        raise CalibrationError("underdetermined fit: sample coverage is insufficient")
    coef, *_ = np.linalg.lstsq(design, f, rcond=None)
    residual = design @ coef - f
    rmse = float(np.sqrt(np.mean(np.sum(residual ** 2, axis=1))))
    return GravityModel(degree=degree,
                        coefficients=coef.T.reshape(3, degree + 1, degree + 1),
                        fit_rmse=rmse)


def compensate(model: GravityModel | None, uv: tuple[float, float], raw_force) -> np.ndarray:
    """Subtract the modeled bias from a raw force reading."""
    raw = np.asarray(raw_force, dtype=float).reshape(3)
    if model is None:
        return raw.copy()
    return raw - model.predict(uv[0], uv[1])


def orientation_params(rotation: np.ndarray) -> tuple[float, float]:
    """Map a tool orientation to the (u, v) in [0,1]^2 bias-model domain.

    Uses the gravity direction expressed in the tool frame: u is its azimuth,
    v its polar angle, both normalized. Smooth over the reachable hemisphere.
    """
    g_tool = np.asarray(rotation, dtype=float).reshape(3, 3).T @ np.array([0.0, 0.0, -1.0])
    u = (np.arctan2(g_tool[1], g_tool[0]) + np.pi) / (2.0 * np.pi)
    v = np.arccos(np.clip(g_tool[2], -1.0, 1.0)) / np.pi
    return float(u), float(v)

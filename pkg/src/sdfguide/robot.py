"""Serial-chain kinematics and the admittance velocity law.

Joint conventions: prismatic joints translate along their axis in mm,
revolute joints rotate about their axis in radians; each joint's fixed
origin transform is applied before its motion. The geometric Jacobian
stacks linear rows (mm/s per unit joint rate) over angular rows (rad/s).

The admittance map solves  argmin_dq | G F - J dq |  by damped least
squares, dq = J^T (J J^T + delta^2 I)^-1 G F, which stays bounded through
singular poses. Gains are the diagonal of G: mm/s per N on the linear
rows, rad/s per N*mm on the angular rows (everything in this package is
millimetre-scaled).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transforms import RigidTransform, rotvec_to_rot


@dataclass
class Joint:
    kind: str  # "prismatic" | "revolute"
    axis: np.ndarray
    origin: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        if self.kind not in ("prismatic", "revolute"):
            raise ValueError(f"unknown joint kind {self.kind!r}")
        a = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(a)
        if n == 0:
            raise ValueError("joint axis must be nonzero")
        self.axis = a / n


@dataclass
class RobotModel:
    joints: list[Joint]
    gains: np.ndarray  # diagonal of G, length 6
    limits: np.ndarray  # (m, 2) ordered [lo, hi]
    damping: float = 1e-6
    ee_offset: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        if len(self.joints) < 1:
            raise ValueError("robot needs at least one joint")
        self.gains = np.asarray(self.gains, dtype=float).reshape(6)
        if np.any(self.gains <= 0):
            raise ValueError("admittance gains must be positive")
        self.limits = np.asarray(self.limits, dtype=float).reshape(len(self.joints), 2)
        if np.any(self.limits[:, 0] > self.limits[:, 1]):
            raise ValueError("joint limits must be ordered lo <= hi")
        if self.damping <= 0:
            raise ValueError("damping must be positive")

    @property
    def dof(self) -> int:
        return len(self.joints)


@dataclass
class RobotState:
    q: np.ndarray
    ee_pose: RigidTransform
    time: float = 0.0


def _joint_motion(joint: Joint, qi: float) -> RigidTransform:
    if joint.kind == "prismatic":
        return RigidTransform(np.eye(3), joint.axis * qi)
    return RigidTransform(rotvec_to_rot(joint.axis * qi), np.zeros(3))


def fk(model: RobotModel, q) -> RigidTransform:
    """End-effector pose for a joint vector."""
    q = np.asarray(q, dtype=float).reshape(model.dof)
    t = RigidTransform.identity()
    for joint, qi in zip(model.joints, q):
        t = t.compose(joint.origin).compose(_joint_motion(joint, float(qi)))
    return t.compose(model.ee_offset)


def jacobian(model: RobotModel, q) -> np.ndarray:
    """Geometric Jacobian (6 x dof) of the end-effector at q."""
    q = np.asarray(q, dtype=float).reshape(model.dof)
    jac = np.zeros((6, model.dof))
    frames: list[RigidTransform] = []
    t = RigidTransform.identity()
    for joint, qi in zip(model.joints, q):
        t = t.compose(joint.origin)
        frames.append(t)  # frame whose origin/axes carry the joint motion
        t = t.compose(_joint_motion(joint, float(qi)))
    p_ee = t.compose(model.ee_offset).translation
    for i, (joint, frame) in enumerate(zip(model.joints, frames)):
        axis_w = frame.rotation @ joint.axis
        if joint.kind == "prismatic":
            jac[:3, i] = axis_w
        else:
            jac[:3, i] = np.cross(axis_w, p_ee - frame.translation)
            jac[3:, i] = axis_w
    return jac


def solve_admittance(model: RobotModel, q, wrench) -> np.ndarray:
    """Joint velocities commanded for a 6-vector wrench (force N, torque N*mm).

    Damped least squares keeps the solution bounded at singularities; after
    solving, components that would push a joint past a limit it already sits
    at are zeroed.
    """
    q = np.asarray(q, dtype=float).reshape(model.dof)
    f = np.asarray(wrench, dtype=float).reshape(6)
    jac = jacobian(model, q)
    rhs = model.gains * f
    delta2 = model.damping * model.damping
    a = jac @ jac.T + delta2 * np.eye(6)
    dq = jac.T @ np.linalg.solve(a, rhs)
    at_hi = (q >= model.limits[:, 1]) & (dq > 0)
    at_lo = (q <= model.limits[:, 0]) & (dq < 0)
    dq[at_hi | at_lo] = 0.0
    return dq


def gantry(gains=(1.0, 1.0, 1.0, 0.1, 0.1, 0.1), limits_mm=((-500.0, 500.0),) * 3,
           damping: float = 1e-6) -> RobotModel:
    """3-axis prismatic Cartesian robot: exact, singularity-free test platform."""
    axes = np.eye(3)
    return RobotModel(
        joints=[Joint(kind="prismatic", axis=axes[i]) for i in range(3)],
        gains=np.asarray(gains, dtype=float),
        limits=np.asarray(limits_mm, dtype=float),
        damping=damping,
    )


def robot_from_config(cfg: dict) -> tuple[RobotModel, np.ndarray]:
    """Build (model, start_q) from a scenario robot config dict."""
    kind = cfg.get("kind", "gantry")
    gains = np.asarray(cfg.get("gains", (1.0, 1.0, 1.0, 0.1, 0.1, 0.1)), dtype=float)
    damping = float(cfg.get("damping", 1e-6))
    if kind == "gantry":
        limits = np.asarray(cfg.get("limits", ((-500.0, 500.0),) * 3), dtype=float)
        model = gantry(gains=gains, limits_mm=limits, damping=damping)
    elif kind == "chain":
        joints = []
        for jc in cfg["joints"]:
            origin = RigidTransform.from_json_obj(jc["origin"]) if "origin" in jc \
                else RigidTransform.identity()
            joints.append(Joint(kind=jc["kind"], axis=np.asarray(jc["axis"], dtype=float),
                                origin=origin))
        limits = np.asarray(cfg.get("limits", ((-1e6, 1e6),) * len(joints)), dtype=float)
        ee_offset = RigidTransform.from_json_obj(cfg["ee_offset"]) if "ee_offset" in cfg \
            else RigidTransform.identity()
        model = RobotModel(joints=joints, gains=gains, limits=limits, damping=damping,
                           ee_offset=ee_offset)
    else:
        raise ValueError(f"unknown robot kind {kind!r}")
    start_q = np.asarray(cfg.get("start_q", np.zeros(model.dof)), dtype=float)
    if start_q.shape != (model.dof,):
        raise ValueError(f"start_q must have length {model.dof}")
    return model, start_q

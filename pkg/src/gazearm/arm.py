"""6-DoF serial manipulator: DH-parameterized FK, damped least-squares IK.

The shipped default table corresponds to published UR5 geometry; the whole
model is config-driven and loadable from JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import RigidTransform, compose, invert

MAX_REACH_M = 0.85


class OutOfReach(Exception):
    pass


class NoConvergence(Exception):
    pass


@dataclass(frozen=True)
class DHJoint:
    a: float        # link length (m)
    d: float        # link offset (m)
    alpha: float    # link twist (rad)
    theta_offset: float = 0.0


@dataclass
class ArmModel:
    joints: tuple                   # six DHJoint
    lower: np.ndarray               # joint limits (rad)
    upper: np.ndarray
    base: RigidTransform = field(default_factory=RigidTransform.identity)
    max_reach: float = MAX_REACH_M

    def __post_init__(self):
        if len(self.joints) != 6:
            raise ValueError("expected six joints")
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if np.any(self.lower >= self.upper):
            raise ValueError("joint limits must satisfy lower < upper")
        if self.max_reach <= 0:
            raise ValueError("max_reach must be positive")

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.lower, self.upper)

    def within_limits(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool((q >= self.lower - 1e-12).all() and (q <= self.upper + 1e-12).all())

    def to_json(self) -> str:
        return json.dumps({
            "dh": [[j.a, j.d, j.alpha, j.theta_offset] for j in self.joints],
            "lower": self.lower.tolist(), "upper": self.upper.tolist(),
            "base_rotation": self.base.rotation.tolist(),
            "base_translation": self.base.translation.tolist(),
            "max_reach": self.max_reach,
        }, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ArmModel":
        d = json.loads(text)
        joints = tuple(DHJoint(*row) for row in d["dh"])
        base = RigidTransform(np.array(d["base_rotation"]), np.array(d["base_translation"]))
        return ArmModel(joints, np.array(d["lower"]), np.array(d["upper"]),
                        base, d.get("max_reach", MAX_REACH_M))


def ur5_model(base: RigidTransform | None = None) -> ArmModel:
    """UR5 standard DH table, +-2pi limits on all joints."""
    dh = (
        DHJoint(0.0, 0.089159, math.pi / 2),
        DHJoint(-0.425, 0.0, 0.0),
        DHJoint(-0.39225, 0.0, 0.0),
        DHJoint(0.0, 0.10915, math.pi / 2),
        DHJoint(0.0, 0.09465, -math.pi / 2),
        DHJoint(0.0, 0.0823, 0.0),
    )
    two_pi = 2 * math.pi
    return ArmModel(dh, -two_pi * np.ones(6), two_pi * np.ones(6),
                    base or RigidTransform.identity())


def _dh_transform(j: DHJoint, theta: float) -> RigidTransform:
    th = theta + j.theta_offset
    ct, st = math.cos(th), math.sin(th)
    ca, sa = math.cos(j.alpha), math.sin(j.alpha)
    R = np.array([
        [ct, -st * ca, st * sa],
        [st, ct * ca, -ct * sa],
        [0.0, sa, ca],
    ])
    t = np.array([j.a * ct, j.a * st, j.d])
    return RigidTransform(R, t)


def fk(model: ArmModel, q) -> RigidTransform:
    """End-effector pose in the world frame."""
    return fk_frames(model, q)[-1]


def fk_frames(model: ArmModel, q) -> list[RigidTransform]:
    """World-frame pose of the base and each link frame (7 transforms)."""
    q = np.asarray(q, dtype=float)
    frames = [model.base]
    T = model.base
    for j, theta in zip(model.joints, q):
        T = compose(T, _dh_transform(j, float(theta)))
        frames.append(T)
    return frames


def jacobian(model: ArmModel, q) -> np.ndarray:
    """Geometric Jacobian (6x6): rows are linear then angular ee velocity."""
    frames = fk_frames(model, q)
    p_ee = frames[-1].translation
    J = np.zeros((6, 6))
    for i in range(6):
        z = frames[i].rotation[:, 2]
        p = frames[i].translation
        J[:3, i] = np.cross(z, p_ee - p)
        J[3:, i] = z
    return J


def within_reach(model: ArmModel, p) -> bool:
    """Closed ball around the base origin (workspace simplification)."""
    p = np.asarray(p, dtype=float)
    return bool(np.linalg.norm(p - model.base.translation) <= model.max_reach + 1e-12)


def _pose_error(current: RigidTransform, target: RigidTransform, position_only: bool):
    e_p = target.translation - current.translation
    if position_only:
        return e_p, np.zeros(3)
    e_R = Rotation.from_matrix(target.rotation @ current.rotation.T).as_rotvec()
    return e_p, e_R


def ik(model: ArmModel, target, q_seed, position_only: bool = False,
       max_iters: int = 200, pos_tol: float = 1e-3, rot_tol: float = math.radians(0.5),
       damping: float = 0.05, reseeds: int = 8,
       rng: np.random.Generator | None = None) -> np.ndarray:
    """Damped least-squares inverse kinematics.

    target may be a RigidTransform or a 3-vector (then position_only).
    Raises OutOfReach for targets beyond the reach ball, NoConvergence if
    all re-seeds fail.  Contract: < 1 mm position, < 0.5 deg orientation.
    """
    if isinstance(target, RigidTransform):
        target_T = target
        target_p = target.translation
    else:
        target_p = np.asarray(target, dtype=float)
        target_T = RigidTransform(np.eye(3), target_p)
        position_only = True
    if not within_reach(model, target_p):
        raise OutOfReach(f"target {np.round(target_p, 3)} beyond {model.max_reach} m reach")
    if rng is None:
        rng = np.random.default_rng(0)
    q0 = model.clamp(np.asarray(q_seed, dtype=float))
    seeds = [q0] + [model.clamp(q0 + rng.uniform(-1.0, 1.0, 6)) for _ in range(reseeds)]
    for q in seeds:
        q = q.copy()
        for _ in range(max_iters):
            cur = fk(model, q)
            e_p, e_R = _pose_error(cur, target_T, position_only)
            if np.linalg.norm(e_p) < pos_tol and (position_only or np.linalg.norm(e_R) < rot_tol):
                return model.clamp(q)
            e = np.concatenate([e_p, e_R])
            J = jacobian(model, q)
            if position_only:
                Jp = J[:3]
                dq = Jp.T @ np.linalg.solve(Jp @ Jp.T + damping ** 2 * np.eye(3), e_p)
            else:
                dq = J.T @ np.linalg.solve(J @ J.T + damping ** 2 * np.eye(6), e)
            step = np.linalg.norm(dq)
            if step > 0.5:
                dq *= 0.5 / step
            q = model.clamp(q + dq)
    raise NoConvergence("IK failed to converge from all seeds")

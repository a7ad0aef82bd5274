"""Collision-aware joint-space planning and cartesian waypoint paths."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .arm import ArmModel, NoConvergence, OutOfReach, fk, fk_frames, ik, within_reach
from .geometry import Aabb, RigidTransform, compose
from .objects import ObjectInstance, ObjectModel, UnknownModel

LINK_RADIUS_M = 0.05
LINK_SAMPLE_SPACING_M = 0.05
MAX_JOINT_STEP_RAD = 0.1
CARTESIAN_STEP_M = 0.01
PRE_GRIP_RETRACT_M = 0.10


class GoalUnreachable(Exception):
    pass


class PlanningTimeout(Exception):
    pass


class IkFailureAtWaypoint(Exception):
    def __init__(self, index: int):
        super().__init__(f"no IK solution at waypoint {index}")
        self.index = index


class CollisionAtWaypoint(Exception):
    def __init__(self, index: int):
        super().__init__(f"collision at waypoint {index}")
        self.index = index


@dataclass
class CollisionWorld:
    safe_zones: list = field(default_factory=list)     # Aabb, always active
    obstacles: list = field(default_factory=list)      # Aabb per recognized object
    object_collision_enabled: bool = True

    def active_boxes(self) -> list:
        boxes = list(self.safe_zones)
        if self.object_collision_enabled:
            boxes += list(self.obstacles)
        return boxes


@dataclass
class Path:
    waypoints: list                 # joint configurations, np arrays
    kind: str                       # "motion" | "cartesian"

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for q in self.waypoints:
                fh.write(json.dumps([float(x) for x in q]) + "\n")

    @staticmethod
    def read_jsonl(path, kind="motion") -> "Path":
        wps = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    wps.append(np.array(json.loads(line), dtype=float))
        return Path(wps, kind)


def _link_sample_points(model: ArmModel, q, spacing: float = LINK_SAMPLE_SPACING_M) -> np.ndarray:
    """Points along the capsule axes between consecutive link frames."""
    frames = fk_frames(model, q)
    pts = [frames[0].translation]
    for a, b in zip(frames[:-1], frames[1:]):
        pa, pb = a.translation, b.translation
        seg = pb - pa
        length = float(np.linalg.norm(seg))
        n = max(1, int(math.ceil(length / spacing)))
        for k in range(1, n + 1):
            pts.append(pa + seg * (k / n))
    return np.array(pts)


def collision_check(model: ArmModel, q, world: CollisionWorld,
                    spacing: float = LINK_SAMPLE_SPACING_M,
                    radius: float = LINK_RADIUS_M) -> bool:
    """True if the configuration is collision-free.

    Links are capsules of uniform radius around the segments between
    consecutive link-frame origins, sampled at `spacing`.
    """
    boxes = world.active_boxes()
    if not boxes:
        return True
    pts = _link_sample_points(model, q, spacing)
    for box in boxes:
        lo = box.min - radius
        hi = box.max + radius
        # inflated-box check is equivalent to point-to-box distance <= radius
        # only per axis; use the true clamped distance
        close = np.all((pts >= lo) & (pts <= hi), axis=1)
        if close.any():
            clamped = np.clip(pts[close], box.min, box.max)
            d = np.linalg.norm(pts[close] - clamped, axis=1)
            if (d <= radius).any():
                return False
    return True


def _segment_free(model, qa, qb, world, step=MAX_JOINT_STEP_RAD):
    delta = np.max(np.abs(qb - qa))
    n = max(1, int(math.ceil(delta / step)))
    for k in range(1, n + 1):
        if not collision_check(model, qa + (qb - qa) * (k / n), world):
            return False
    return True


def densify(qa, qb, step=MAX_JOINT_STEP_RAD):
    delta = np.max(np.abs(qb - qa))
    n = max(1, int(math.ceil(delta / step)))
    return [qa + (qb - qa) * (k / n) for k in range(1, n + 1)]


def plan_motion(model: ArmModel, world: CollisionWorld, q_start, target: RigidTransform,
                seed: int = 0, max_time: float = 10.0, goal_bias: float = 0.1,
                extend_step: float = 0.2, position_only: bool = False) -> Path:
    """RRT in joint space with shortcut smoothing; deterministic per seed."""
    q_start = np.asarray(q_start, dtype=float)
    if not collision_check(model, q_start, world):
        raise GoalUnreachable("start configuration in collision")
    target_p = target.translation if isinstance(target, RigidTransform) else np.asarray(target)
    for box in world.active_boxes():
        if box.expanded(LINK_RADIUS_M).contains(target_p):
            raise GoalUnreachable("target inside a forbidden region")
    rng = np.random.default_rng(seed)
    goals = []
    for _ in range(8):
        try:
            qg = ik(model, target, q_start, position_only=position_only, rng=rng)
        except (OutOfReach, NoConvergence) as e:
            raise GoalUnreachable(str(e)) from e
        if collision_check(model, qg, world):
            goals.append(qg)
        if goals:
            break
    if not goals:
        raise GoalUnreachable("all IK goal configurations collide")
    goal = goals[0]
    if np.max(np.abs(goal - q_start)) < 1e-9:
        return Path([q_start.copy()], "motion")
    # trivial connect first, then RRT
    if _segment_free(model, q_start, goal, world):
        waypoints = [q_start] + densify(q_start, goal)
        return Path(waypoints, "motion")
    nodes = [q_start]
    parents = [-1]
    deadline = time.monotonic() + max_time
    found = None
    # sampling window around the working volume of the two endpoints
    lo = np.minimum(q_start, goal) - math.pi
    hi = np.maximum(q_start, goal) + math.pi
    lo = np.maximum(lo, model.lower)
    hi = np.minimum(hi, model.upper)
    while found is None:
        if time.monotonic() > deadline:
            raise PlanningTimeout(f"no path within {max_time} s")
        sample = goal if rng.random() < goal_bias else rng.uniform(lo, hi)
        dists = [np.linalg.norm(n - sample) for n in nodes]
        i_near = int(np.argmin(dists))
        q_near = nodes[i_near]
        d = sample - q_near
        norm = np.linalg.norm(d)
        if norm < 1e-9:
            continue
        q_new = q_near + d * min(1.0, extend_step / norm)
        if not _segment_free(model, q_near, q_new, world):
            continue
        nodes.append(q_new)
        parents.append(i_near)
        if np.linalg.norm(q_new - goal) < extend_step and _segment_free(model, q_new, goal, world):
            nodes.append(goal)
            parents.append(len(nodes) - 2)
            found = len(nodes) - 1
    # extract and smooth
    path = []
    i = found
    while i != -1:
        path.append(nodes[i])
        i = parents[i]
    path.reverse()
    path = _shortcut(model, world, path, rng)
    waypoints = [path[0]]
    for qa, qb in zip(path[:-1], path[1:]):
        waypoints.extend(densify(qa, qb))
    return Path(waypoints, "motion")


def _shortcut(model, world, path, rng, attempts: int = 50):
    path = list(path)
    for _ in range(attempts):
        if len(path) <= 2:
            break
        i = int(rng.integers(0, len(path) - 1))
        j = int(rng.integers(0, len(path) - 1))
        if abs(i - j) < 2:
            continue
        i, j = min(i, j), max(i, j)
        if _segment_free(model, path[i], path[j], world):
            path = path[:i + 1] + path[j:]
    return path


def plan_cartesian(model: ArmModel, world: CollisionWorld, q_start, waypoint_poses,
                   step: float = CARTESIAN_STEP_M, position_only: bool = True,
                   seed: int = 0) -> Path:
    """Straight-line end-effector path through waypoints at <= step spacing.

    Each sample is solved by IK seeded from the previous configuration, so
    the joint path follows the cartesian line closely.
    """
    q_start = np.asarray(q_start, dtype=float)
    rng = np.random.default_rng(seed)
    configs = [q_start]
    prev_pose = fk(model, q_start)
    prev_p = prev_pose.translation
    for wi, wp in enumerate(waypoint_poses):
        target_T = wp if isinstance(wp, RigidTransform) else RigidTransform(prev_pose.rotation, wp)
        if not within_reach(model, target_T.translation):
            raise IkFailureAtWaypoint(wi)
        seg = target_T.translation - prev_p
        length = float(np.linalg.norm(seg))
        n = max(1, int(math.ceil(length / step)))
        for k in range(1, n + 1):
            p = prev_p + seg * (k / n)
            tgt = RigidTransform(target_T.rotation, p)
            try:
                q = ik(model, tgt if not position_only else p, configs[-1],
                       position_only=position_only, rng=rng, reseeds=0)
            except (OutOfReach, NoConvergence) as e:
                raise IkFailureAtWaypoint(wi) from e
            if not collision_check(model, q, world):
                raise CollisionAtWaypoint(wi)
            configs.append(q)
        prev_pose = target_T
        prev_p = target_T.translation
    return Path(configs, "cartesian")


def pre_grip_pose(instance: ObjectInstance, model: ObjectModel | None,
                  retract: float = PRE_GRIP_RETRACT_M) -> dict:
    """Contact and pre-grip end-effector poses for a recognized object.

    The contact point is offset from the centroid to the surface along the
    model's grip spec; the pre-grip pose retracts `retract` meters back
    along the approach axis.  The end-effector +z axis is aligned with the
    approach direction.
    """
    if model is None or model.grip is None:
        raise UnknownModel(f"no grip model for '{instance.model_id}'")
    approach_w = instance.pose.apply_vector(np.asarray(model.grip.approach, dtype=float))
    approach_w = approach_w / np.linalg.norm(approach_w)
    contact_p = instance.centroid + instance.pose.apply_vector(
        np.asarray(model.grip.contact_offset, dtype=float))
    pre_p = contact_p - retract * approach_w
    R = _frame_from_z(approach_w)
    return {"pre_grip": RigidTransform(R, pre_p), "contact": RigidTransform(R, contact_p)}


def _frame_from_z(z):
    z = np.asarray(z, dtype=float)
    z = z / np.linalg.norm(z)
    ref = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = np.cross(ref, z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)


def verify_path(model: ArmModel, path: Path, world: CollisionWorld,
                step: float = 0.01) -> bool:
    """Independent post-hoc check: dense re-sampling at finer resolution."""
    wps = path.waypoints
    if not wps:
        return True
    if not collision_check(model, wps[0], world, spacing=step):
        return False
    for qa, qb in zip(wps[:-1], wps[1:]):
        delta = np.max(np.abs(np.asarray(qb) - np.asarray(qa)))
        n = max(1, int(math.ceil(delta / 0.01)))
        for k in range(1, n + 1):
            q = np.asarray(qa) + (np.asarray(qb) - np.asarray(qa)) * (k / n)
            if not collision_check(model, q, world, spacing=step):
                return False
    return True

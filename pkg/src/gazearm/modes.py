"""Automatic task triggering and manual gaze-stepping control policies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import RigidTransform, compose
from .gazefilter import WinkEvent
from .objects import ObjectInstance, ObjectModel
from .planning import pre_grip_pose
from .registration import FrameGraph, NoPath

MANUAL_STEP_M = 0.02
DEAD_ZONE_PX = 300
MANUAL_REFRACTORY_S = 0.5

# image-frame command directions in the scene-camera frame
# (camera: x right, y down, z forward)
_DIRECTIONS = {
    "left": np.array([-1.0, 0.0, 0.0]),
    "right": np.array([1.0, 0.0, 0.0]),
    "up": np.array([0.0, -1.0, 0.0]),
    "down": np.array([0.0, 1.0, 0.0]),
    "in": np.array([0.0, 0.0, 1.0]),
    "out": np.array([0.0, 0.0, -1.0]),
}

# which wink maps to which depth command; the source interface only says
# "one or the other eye", so this is configurable
WINK_COMMANDS = {"left": "in", "right": "out"}


class IllegalTransition(Exception):
    pass


@dataclass(frozen=True)
class ManualCommand:
    direction: str            # left|right|up|down|in|out
    step: float = MANUAL_STEP_M


@dataclass(frozen=True)
class FeedbackEvent:
    t: float
    utterance: str


# --- task scripts -----------------------------------------------------------

@dataclass(frozen=True)
class MotionTo:
    pose: RigidTransform


@dataclass(frozen=True)
class CartesianVia:
    poses: tuple


@dataclass(frozen=True)
class Attach:
    object_id: str


@dataclass(frozen=True)
class Detach:
    pass


@dataclass(frozen=True)
class Pour:
    angle: float              # rad


@dataclass(frozen=True)
class Dwell:
    seconds: float


@dataclass(frozen=True)
class TaskScript:
    object_id: str
    task: str
    steps: tuple


def dead_zone_bounds(width: int = 1280, height: int = 960, size: int = DEAD_ZONE_PX):
    """(u_min, u_max, v_min, v_max) of the centered no-command region."""
    cx, cy = width / 2, height / 2
    return (cx - size / 2, cx + size / 2, cy - size / 2, cy + size / 2)


def manual_map(por, winks: list, width: int = 1280, height: int = 960) -> ManualCommand | None:
    """Map a 2D point of regard (plus pending winks) to a manual command.

    Winks command depth (in/out) regardless of where the gaze is; otherwise
    gaze outside the dead zone commands the dominant axis, normalized by the
    image half-extents and tie-broken toward horizontal.
    """
    for w in winks:
        cmd = WINK_COMMANDS.get(w.eye)
        if cmd:
            return ManualCommand(cmd)
    u, v = float(por[0]), float(por[1])
    u0, u1, v0, v1 = dead_zone_bounds(width, height)
    if u0 <= u <= u1 and v0 <= v <= v1:
        return None
    du = u - width / 2
    dv = v - height / 2
    if abs(du) / (width / 2) >= abs(dv) / (height / 2):
        return ManualCommand("left" if du < 0 else "right")
    return ManualCommand("up" if dv < 0 else "down")


def manual_step(cmd: ManualCommand, graph: FrameGraph, ee_pose: RigidTransform,
                t: float = 0.0) -> dict:
    """Target pose for one manual step: the commanded offset along the
    scene-camera axes rotated into the world frame, orientation unchanged."""
    T_r_o = graph.resolve("o", "r")
    offset = T_r_o.apply_vector(_DIRECTIONS[cmd.direction] * cmd.step)
    target = RigidTransform(ee_pose.rotation, ee_pose.translation + offset)
    return {"target": target, "feedback": FeedbackEvent(t, cmd.direction)}


def automatic_trigger(object_id: str, instances: list, db: dict,
                      delivery_pose: RigidTransform,
                      home_pose: RigidTransform) -> TaskScript | None:
    """Build the pre-defined task script for a selected object, or None.

    mug: approach from above, descend inside, attach, lift, deliver to the
    user boundary.  cereal: side grip, lift, pour above the bowl, place the
    box beside the bowl, go home.  Anything else carries no task.
    """
    model = db.get(object_id)
    if model is None or model.task == "none":
        return None
    inst = next((i for i in instances if i.model_id == object_id), None)
    if inst is None:
        return None
    grips = pre_grip_pose(inst, model)
    pre, contact = grips["pre_grip"], grips["contact"]
    if model.task == "mug-retrieval":
        inside = RigidTransform(contact.rotation, contact.translation + np.array([0, 0, -0.03]))
        lift = RigidTransform(contact.rotation, pre.translation + np.array([0, 0, 0.05]))
        steps = (
            MotionTo(pre),
            CartesianVia((inside,)),
            Attach(object_id),
            CartesianVia((lift,)),
            MotionTo(delivery_pose),
            Dwell(2.0),
        )
        return TaskScript(object_id, model.task, steps)
    if model.task == "cereal-pour":
        bowl = next((i for i in instances if i.model_id == "bowl"), None)
        if bowl is None:
            return None
        lift = RigidTransform(pre.rotation, contact.translation + np.array([0, 0, 0.15]))
        above_bowl = RigidTransform(pre.rotation, bowl.centroid + np.array([0, 0, 0.35]))
        beside = RigidTransform(pre.rotation, bowl.centroid + np.array([0.0, 0.15, 0.20]))
        steps = (
            MotionTo(pre),
            CartesianVia((contact,)),
            Attach(object_id),
            CartesianVia((lift,)),
            MotionTo(above_bowl),
            Pour(2.0),
            Pour(-2.0),
            CartesianVia((beside,)),
            Detach(),
            MotionTo(home_pose),
        )
        return TaskScript(object_id, model.task, steps)
    return None


@dataclass
class ModeState:
    mode: str = "idle"                     # idle | auto_executing | manual
    attached_object: str | None = None
    step_target: RigidTransform | None = None
    active_script: TaskScript | None = None


class ModeController:
    """Single-owner state machine over fixation / command / plan events.

    Emits (kind, payload) event tuples for the harness log; illegal
    transitions are logged and leave the state unchanged.
    """

    def __init__(self):
        self.state = ModeState()
        self.events: list = []

    def _emit(self, t, kind, **payload):
        self.events.append((t, kind, payload))

    def on_fixation_selection(self, t: float, object_id: str | None,
                              script: TaskScript | None) -> bool:
        """Returns True when a task execution starts."""
        if self.state.mode == "manual":
            self._emit(t, "mode", note="fixation ignored in manual mode")
            return False
        if self.state.mode == "auto_executing":
            self._emit(t, "mode", note="fixation ignored while executing", illegal=True)
            return False
        if object_id is None or script is None:
            self._emit(t, "selection", object=object_id, task=None)
            return False
        self.state.mode = "auto_executing"
        self.state.active_script = script
        self._emit(t, "mode", mode="auto_executing", object=object_id)
        return True

    def on_script_finished(self, t: float, success: bool):
        if self.state.mode != "auto_executing":
            self._emit(t, "mode", note="script result outside execution", illegal=True)
            return
        self.state.mode = "idle"
        self.state.active_script = None
        self.state.attached_object = None
        self._emit(t, "mode", mode="idle", success=success)

    def toggle_manual(self, t: float):
        if self.state.mode == "auto_executing":
            self._emit(t, "mode", note="cannot toggle during execution", illegal=True)
            return
        self.state.mode = "manual" if self.state.mode == "idle" else "idle"
        self._emit(t, "mode", mode=self.state.mode)

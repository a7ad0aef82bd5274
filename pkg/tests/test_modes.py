import numpy as np
import pytest

from gazearm.gazefilter import WinkEvent
from gazearm.geometry import RigidTransform
from gazearm.modes import (Attach, CartesianVia, Detach, ManualCommand, ModeController,
                           MotionTo, Pour, automatic_trigger, dead_zone_bounds,
                           manual_map, manual_step)
from gazearm.objects import ObjectInstance, default_database
from gazearm.registration import FrameGraph, NoPath


def test_dead_zone_geometry():
    assert dead_zone_bounds() == (490.0, 790.0, 330.0, 630.0)


def test_manual_map_dead_zone_and_pure_directions():
    assert manual_map((640, 480), []) is None
    assert manual_map((500, 400), []) is None        # still inside
    assert manual_map((100, 480), []).direction == "left"
    assert manual_map((1200, 480), []).direction == "right"
    assert manual_map((640, 100), []).direction == "up"
    assert manual_map((640, 900), []).direction == "down"


def test_manual_map_dominant_axis_and_tie():
    # (100,100): normalized |du| = 540/640 > |dv| = 380/480 -> left
    assert manual_map((100, 100), []).direction == "left"
    # exactly equal normalized deviations break toward horizontal
    assert manual_map((960, 720), []).direction == "right"
    # vertical dominance
    assert manual_map((700, 900), []).direction == "down"


def test_manual_map_wink_overrides_gaze():
    wink = WinkEvent(1.0, "left", 0.6)
    assert manual_map((640, 480), [wink]).direction == "in"
    assert manual_map((100, 480), [WinkEvent(1.0, "right", 0.6)]).direction == "out"


def test_manual_step_identity_frames():
    graph = FrameGraph()
    graph.set_edge("o", "r", RigidTransform.identity())
    ee = RigidTransform.from_translation([0.4, 0.0, 0.2])
    out = manual_step(ManualCommand("left"), graph, ee, t=3.0)
    assert np.allclose(out["target"].translation, [0.38, 0.0, 0.2])
    assert np.allclose(out["target"].rotation, ee.rotation)
    assert out["feedback"].utterance == "left"
    assert out["feedback"].t == 3.0
    up = manual_step(ManualCommand("up"), graph, ee)
    assert np.allclose(up["target"].translation, [0.4, -0.02, 0.2])
    inward = manual_step(ManualCommand("in"), graph, ee)
    assert np.allclose(inward["target"].translation, [0.4, 0.0, 0.22])


def test_manual_step_rotated_camera():
    # camera yawed 90 deg about world z: camera -x maps to world -y
    graph = FrameGraph()
    graph.set_edge("o", "r", RigidTransform.from_axis_angle([0, 0, 1], np.pi / 2))
    ee = RigidTransform.from_translation([0.4, 0.0, 0.2])
    out = manual_step(ManualCommand("left"), graph, ee)
    assert np.allclose(out["target"].translation, [0.4, -0.02, 0.2], atol=1e-12)


def test_manual_step_requires_head_pose():
    with pytest.raises(NoPath):
        manual_step(ManualCommand("left"), FrameGraph(), RigidTransform.identity())


def make_instances():
    db = default_database()
    out = []
    for i, oid in enumerate(("mug", "cereal", "bowl")):
        pose = RigidTransform.from_translation([0.4 + 0.2 * i, 0.0, -0.05])
        out.append(ObjectInstance.place(oid, db[oid].mesh, pose, True))
    return db, out


def test_automatic_trigger_mug_script():
    db, instances = make_instances()
    home = RigidTransform.from_translation([0.3, 0.3, 0.3])
    delivery = RigidTransform.from_translation([-0.25, 0.0, 0.35])
    script = automatic_trigger("mug", instances, db, delivery, home)
    assert script.task == "mug-retrieval"
    assert isinstance(script.steps[0], MotionTo)
    kinds = [type(s).__name__ for s in script.steps]
    assert "Attach" in kinds and "Detach" not in kinds
    # delivery pose appears near the user boundary
    assert any(isinstance(s, MotionTo)
               and np.allclose(s.pose.translation, delivery.translation)
               for s in script.steps)


def test_automatic_trigger_cereal_script():
    db, instances = make_instances()
    home = RigidTransform.from_translation([0.3, 0.3, 0.3])
    delivery = RigidTransform.from_translation([-0.25, 0.0, 0.35])
    script = automatic_trigger("cereal", instances, db, delivery, home)
    kinds = [type(s).__name__ for s in script.steps]
    assert kinds.index("Attach") < kinds.index("Detach")
    pours = [s for s in script.steps if isinstance(s, Pour)]
    assert len(pours) == 2 and pours[0].angle == -pours[1].angle
    # the pour happens above the bowl centroid
    bowl = next(i for i in instances if i.model_id == "bowl")
    above = script.steps[kinds.index("Pour") - 1]
    assert isinstance(above, MotionTo)
    assert np.allclose(above.pose.translation[:2], bowl.centroid[:2])
    assert above.pose.translation[2] > bowl.centroid[2]


def test_automatic_trigger_none_cases():
    db, instances = make_instances()
    home = delivery = RigidTransform.identity()
    assert automatic_trigger("bowl", instances, db, delivery, home) is None
    assert automatic_trigger("banana", instances, db, delivery, home) is None
    # cereal task needs a bowl in the scene
    no_bowl = [i for i in instances if i.model_id != "bowl"]
    assert automatic_trigger("cereal", no_bowl, db, delivery, home) is None


def test_mode_controller_transitions():
    db, instances = make_instances()
    script = automatic_trigger("mug", instances, db, RigidTransform.identity(),
                               RigidTransform.identity())
    ctl = ModeController()
    assert ctl.state.mode == "idle"
    assert ctl.on_fixation_selection(1.0, "mug", script)
    assert ctl.state.mode == "auto_executing"
    # further fixations during execution are ignored and flagged
    assert not ctl.on_fixation_selection(2.0, "cereal", script)
    assert any(p.get("illegal") for _, _, p in ctl.events)
    ctl.on_script_finished(3.0, success=True)
    assert ctl.state.mode == "idle"
    ctl.toggle_manual(4.0)
    assert ctl.state.mode == "manual"
    # fixations in manual mode never start scripts
    assert not ctl.on_fixation_selection(5.0, "mug", script)
    ctl.toggle_manual(6.0)
    assert ctl.state.mode == "idle"


def test_mode_controller_illegal_toggle_during_execution():
    db, instances = make_instances()
    script = automatic_trigger("mug", instances, db, RigidTransform.identity(),
                               RigidTransform.identity())
    ctl = ModeController()
    ctl.on_fixation_selection(1.0, "mug", script)
    ctl.toggle_manual(2.0)
    assert ctl.state.mode == "auto_executing"


def test_selection_without_task_stays_idle():
    ctl = ModeController()
    assert not ctl.on_fixation_selection(1.0, "bowl", None)
    assert ctl.state.mode == "idle"

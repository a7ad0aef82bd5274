import math

import numpy as np
import pytest

from gazearm.arm import (ArmModel, NoConvergence, OutOfReach, fk, fk_frames, ik,
                         jacobian, ur5_model, within_reach)
from gazearm.geometry import RigidTransform, rotation_angle_between


def dh_matrix_chain(model, q):
    """Independent oracle: textbook 4x4 DH matrices multiplied directly."""
    T = model.base.matrix()
    for j, theta in zip(model.joints, q):
        th = theta + j.theta_offset
        ct, st = math.cos(th), math.sin(th)
        ca, sa = math.cos(j.alpha), math.sin(j.alpha)
        A = np.array([
            [ct, -st * ca, st * sa, j.a * ct],
            [st, ct * ca, -ct * sa, j.a * st],
            [0.0, sa, ca, j.d],
            [0.0, 0.0, 0.0, 1.0],
        ])
        T = T @ A
    return T


def test_fk_matches_independent_dh_chain():
    model = ur5_model()
    rng = np.random.default_rng(0)
    for _ in range(30):
        q = rng.uniform(-np.pi, np.pi, 6)
        assert np.allclose(fk(model, q).matrix(), dh_matrix_chain(model, q), atol=1e-12)


def test_fk_zero_configuration_fixture():
    # UR5 at q = 0: x = -(a2+a3), y = -(d4+d6), z = d1-d5
    p = fk(ur5_model(), np.zeros(6)).translation
    assert p == pytest.approx([-0.81725, -0.19145, -0.005491], abs=1e-9)


def test_fk_frames_shape_and_base_offset():
    base = RigidTransform.from_translation([0.1, 0.2, 0.3])
    model = ur5_model(base)
    frames = fk_frames(model, np.zeros(6))
    assert len(frames) == 7
    assert np.allclose(frames[0].translation, [0.1, 0.2, 0.3])
    off = fk(model, np.zeros(6)).translation - fk(ur5_model(), np.zeros(6)).translation
    assert np.allclose(off, [0.1, 0.2, 0.3], atol=1e-12)


def test_jacobian_matches_finite_differences():
    model = ur5_model()
    rng = np.random.default_rng(1)
    h = 1e-7
    for _ in range(5):
        q = rng.uniform(-np.pi, np.pi, 6)
        J = jacobian(model, q)
        T0 = fk(model, q)
        for i in range(6):
            dq = np.zeros(6)
            dq[i] = h
            T1 = fk(model, q + dq)
            v = (T1.translation - T0.translation) / h
            dR = T1.rotation @ T0.rotation.T
            from scipy.spatial.transform import Rotation
            w = Rotation.from_matrix(dR).as_rotvec() / h
            assert np.allclose(J[:3, i], v, atol=1e-5)
            assert np.allclose(J[3:, i], w, atol=1e-5)


def test_within_reach_boundary():
    model = ur5_model()
    assert within_reach(model, [0.84, 0, 0])
    assert within_reach(model, [0.85, 0, 0])
    assert not within_reach(model, [0.86, 0, 0])


def test_ik_out_of_reach():
    with pytest.raises(OutOfReach):
        ik(ur5_model(), np.array([1.2, 0.0, 0.0]), np.zeros(6))


def test_ik_position_only_vector_target():
    model = ur5_model()
    target = np.array([0.4, 0.1, 0.3])
    q = ik(model, target, np.array([np.pi, -1.2, 1.6, -1.97, -1.57, 0.0]))
    assert np.linalg.norm(fk(model, q).translation - target) < 1e-3
    assert model.within_limits(q)


def test_ik_full_pose_roundtrip():
    """Contract: < 1 mm position, < 0.5 deg orientation, >= 99% of reachable
    random poses solved."""
    model = ur5_model()
    rng = np.random.default_rng(2)
    n, ok = 0, 0
    while n < 300:
        q_true = rng.uniform(-np.pi, np.pi, 6)
        target = fk(model, q_true)
        if np.linalg.norm(target.translation) > 0.8:
            continue  # stay off the workspace boundary
        n += 1
        seed_q = q_true + rng.uniform(-0.5, 0.5, 6)
        try:
            q = ik(model, target, seed_q, rng=np.random.default_rng(n))
        except (OutOfReach, NoConvergence):
            continue
        pose = fk(model, q)
        if (np.linalg.norm(pose.translation - target.translation) < 1e-3
                and rotation_angle_between(pose, target) < math.radians(0.5)):
            ok += 1
    assert ok / n >= 0.99


def test_arm_model_json_roundtrip():
    model = ur5_model(RigidTransform.from_translation([0.0, 0.1, 0.0]))
    back = ArmModel.from_json(model.to_json())
    q = np.array([0.3, -0.7, 1.1, -0.2, 0.5, -1.3])
    assert np.allclose(fk(back, q).matrix(), fk(model, q).matrix(), atol=1e-12)
    assert back.max_reach == model.max_reach


def test_arm_model_validation():
    model = ur5_model()
    with pytest.raises(ValueError):
        ArmModel(model.joints[:5], model.lower[:5], model.upper[:5])
    with pytest.raises(ValueError):
        ArmModel(model.joints, model.upper, model.lower)


def test_clamp_respects_limits():
    model = ur5_model()
    q = model.clamp(np.full(6, 100.0))
    assert model.within_limits(q)
    assert np.allclose(q, model.upper)

import numpy as np
import pytest

from gazearm.gazefilter import FixationEvent
from gazearm.geometry import (ETG_CAMERA, PointCloud, Ray, RigidTransform, compose,
                              project)
from gazearm.meshio import box_mesh
from gazearm.por3d import (NoIntersection, SceneModel, gaze_ray_world,
                           locate_3d_fixation)
from gazearm.registration import FrameGraph


def box_scene(center=(0.5, 0.0, 0.0), size=0.2, extra_points=None):
    mesh = box_mesh(size, size, size)
    pose = RigidTransform.from_translation(center)
    pts = [np.asarray(center) + [0, 0, size]]  # keep the cloud non-empty
    if extra_points is not None:
        pts.extend(extra_points)
    return SceneModel.build(PointCloud(np.array(pts)), [(mesh, pose)])


def test_mesh_hit_exact_point():
    scene = box_scene()
    fix = locate_3d_fixation(Ray([0, 0, 0], [1, 0, 0]), scene)
    assert fix.source == "mesh-hit"
    assert np.allclose(fix.point, [0.4, 0.0, 0.0], atol=1e-12)


def test_nearest_mesh_wins():
    near = (box_mesh(0.2, 0.2, 0.2), RigidTransform.from_translation([0.5, 0, 0]))
    far = (box_mesh(0.2, 0.2, 0.2), RigidTransform.from_translation([1.5, 0, 0]))
    scene = SceneModel.build(PointCloud(np.array([[0.5, 0, 0.2]])), [far, near])
    fix = locate_3d_fixation(Ray([0, 0, 0], [1, 0, 0]), scene)
    assert np.allclose(fix.point, [0.4, 0.0, 0.0], atol=1e-12)


def test_cloud_snap_within_tolerance():
    # no mesh: a point 5 mm off the ray axis snaps, 2 cm off does not
    cloud = PointCloud(np.array([[0.5, 0.005, 0.0]]))
    scene = SceneModel.build(cloud, [])
    fix = locate_3d_fixation(Ray([0, 0, 0], [1, 0, 0]), scene)
    assert fix.source == "cloud-snap"
    assert np.allclose(fix.point, [0.5, 0.005, 0.0])
    miss = SceneModel.build(PointCloud(np.array([[0.5, 0.02, 0.0]])), [])
    with pytest.raises(NoIntersection):
        locate_3d_fixation(Ray([0, 0, 0], [1, 0, 0]), miss)


def test_cloud_snap_prefers_smallest_ray_parameter():
    cloud = PointCloud(np.array([[0.9, 0.0, 0.0], [0.3, 0.005, 0.0]]))
    scene = SceneModel.build(cloud, [])
    fix = locate_3d_fixation(Ray([0, 0, 0], [1, 0, 0]), scene)
    assert np.allclose(fix.point, [0.3, 0.005, 0.0])


def test_points_behind_origin_never_snap():
    scene = SceneModel.build(PointCloud(np.array([[-0.5, 0.0, 0.0]])), [])
    with pytest.raises(NoIntersection):
        locate_3d_fixation(Ray([0, 0, 0], [1, 0, 0]), scene)


def test_mesh_hit_takes_priority_over_nearer_cloud_point():
    scene = box_scene(extra_points=[np.array([0.2, 0.0, 0.0])])
    fix = locate_3d_fixation(Ray([0, 0, 0], [1, 0, 0]), scene)
    assert fix.source == "mesh-hit"


def test_gaze_ray_world_chains_frames():
    # scene camera 10 cm from the RGB-D camera, RGB-D camera 1 m up in the world
    T_k_o = RigidTransform.from_translation([0.1, 0.0, 0.0])
    T_r_k = RigidTransform.from_translation([0.0, 0.0, 1.0])
    graph = FrameGraph()
    graph.set_edge("k", "r", T_r_k)
    fix = FixationEvent(0.0, 2.0, (ETG_CAMERA.cx, ETG_CAMERA.cy), (0, 120))
    ray = gaze_ray_world(fix, T_k_o, graph, ETG_CAMERA)
    assert np.allclose(ray.origin, compose(T_r_k, T_k_o).translation)
    assert np.allclose(ray.direction, [0, 0, 1])  # principal point looks along +z


def test_gaze_ray_world_roundtrip_through_projection():
    # project a world point through the true camera, then the lifted ray
    # through the same pixel must pass back through the point
    rng = np.random.default_rng(0)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    T_k_o = RigidTransform.from_axis_angle(axis, 0.3, [0.05, -0.02, 0.1])
    T_r_k = RigidTransform.from_axis_angle([0, 0, 1], 0.7, [0.2, 0.1, 0.5])
    graph = FrameGraph()
    graph.set_edge("k", "r", T_r_k)
    T_r_o = compose(T_r_k, T_k_o)
    p_world = T_r_o.apply(np.array([0.1, -0.05, 1.4]))
    from gazearm.geometry import invert
    px = project(ETG_CAMERA, invert(T_r_o).apply(p_world))
    fix = FixationEvent(0.0, 2.0, tuple(px), (0, 120))
    ray = gaze_ray_world(fix, T_k_o, graph, ETG_CAMERA)
    t = np.dot(p_world - ray.origin, ray.direction)
    assert np.linalg.norm(ray.at(t) - p_world) < 1e-9

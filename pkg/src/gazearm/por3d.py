"""3D point of regard: world gaze ray from a fixation, raycast into the scene."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (PinholeCamera, PointCloud, Ray, RigidTransform, SpatialIndex,
                       TriMesh, backproject, build_kdtree, compose, invert,
                       ray_mesh_intersect, voxel_downsample)
from .gazefilter import FixationEvent
from .registration import FrameGraph

SNAP_TOLERANCE_M = 0.01
DEFAULT_VOXEL_LEAF_M = 0.01


class NoIntersection(Exception):
    pass


@dataclass
class SceneModel:
    """World-frame scene: full and compressed clouds plus posed meshes.

    The compressed cloud is the raycast/association target (voxel-downsampled
    copy of the full reconstruction); meshes are exact geometry and take
    priority on hits.
    """

    full_cloud: PointCloud
    compressed_cloud: PointCloud
    meshes: list                      # [(TriMesh, RigidTransform world pose)]
    index: SpatialIndex

    @staticmethod
    def build(full_cloud: PointCloud, meshes=(), leaf: float = DEFAULT_VOXEL_LEAF_M) -> "SceneModel":
        compressed = voxel_downsample(full_cloud, leaf)
        return SceneModel(full_cloud, compressed, list(meshes), build_kdtree(compressed))


@dataclass(frozen=True)
class Fixation3D:
    point: np.ndarray
    t: float
    source: str     # "mesh-hit" | "cloud-snap"


def gaze_ray_world(fix: FixationEvent, pose_k_o: RigidTransform, graph: FrameGraph,
                   etg_cam: PinholeCamera) -> Ray:
    """Backproject the fixation centroid and lift the ray into the world frame.

    pose_k_o maps scene-camera coordinates into the RGB-D frame; the graph
    supplies k -> r.
    """
    ray_cam = backproject(etg_cam, fix.centroid)
    T_r_k = graph.resolve("k", "r")
    T_r_o = compose(T_r_k, pose_k_o)
    return ray_cam.transformed(T_r_o)


def locate_3d_fixation(ray: Ray, scene: SceneModel, t_of_fix: float = 0.0,
                       snap_tol: float = SNAP_TOLERANCE_M) -> Fixation3D:
    """Nearest mesh intersection, else nearest cloud point within snap_tol
    of the ray (smallest ray parameter wins)."""
    best = None
    for mesh, pose in scene.meshes:
        local_ray = ray.transformed(invert(pose))
        hit = ray_mesh_intersect(local_ray, mesh)
        if hit is not None and (best is None or hit[0] < best[0]):
            best = (hit[0], pose.apply(hit[1]))
    if best is not None:
        return Fixation3D(best[1], t_of_fix, "mesh-hit")
    pts = scene.compressed_cloud.points
    rel = pts - ray.origin
    t = rel @ ray.direction
    perp = rel - t[:, None] * ray.direction
    d = np.linalg.norm(perp, axis=1)
    ok = (t > 0) & (d <= snap_tol)
    if not ok.any():
        raise NoIntersection("gaze ray misses the scene")
    candidates = np.flatnonzero(ok)
    i = candidates[np.argmin(t[candidates])]
    return Fixation3D(pts[i].copy(), t_of_fix, "cloud-snap")

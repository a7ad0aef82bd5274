"""Synthetic RGB-D scene presets, world layout, and noise models."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import meshio
from .arm import ArmModel, ur5_model
from .geometry import (Aabb, ETG_CAMERA, PinholeCamera, PointCloud, RigidTransform,
                       compose, invert)
from .objects import ObjectInstance, ObjectModel, default_database
from .planning import CollisionWorld
from .por3d import SceneModel
from .registration import (FrameGraph, calibrate_robot_camera, checkerboard_corners)

TABLE_Z = -0.10                       # table top height in the robot frame
TABLE_X = (0.15, 1.0)
TABLE_Y = (-0.6, 0.6)
KINECT_POSITION = np.array([-0.35, -0.45, 0.40])
ETG_POSITION = np.array([-0.55, 0.0, 0.55])
CLOUD_SPACING_M = 0.005
HOME_Q = np.array([np.pi, -1.2, 1.6, -1.97, -1.57, 0.0])  # folded over the table side


class UnknownPreset(Exception):
    pass


@dataclass(frozen=True)
class NoiseModel:
    gaze_sigma_deg: float = 0.0       # per-fixation angular offset of the 2D PoR
    corr_noise_px: float = 0.0        # head-pose correspondence pixel noise
    corr_outlier_ratio: float = 0.0
    recog_sigma_m: float = 0.0        # recognized pose translation noise
    misdetect_p: float = 0.0
    depth_sigma_m: float = 0.0        # cloud point noise

    def __post_init__(self):
        for name in ("gaze_sigma_deg", "corr_noise_px", "recog_sigma_m", "depth_sigma_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("corr_outlier_ratio", "misdetect_p"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")

    @staticmethod
    def default() -> "NoiseModel":
        # calibrated so the simulated 3D PoR error lands near the 2.31 cm
        # figure of the physical rig; see README
        return NoiseModel(gaze_sigma_deg=0.5, corr_noise_px=1.0, corr_outlier_ratio=0.2,
                          recog_sigma_m=0.005, misdetect_p=0.01, depth_sigma_m=0.002)

    @staticmethod
    def off() -> "NoiseModel":
        return NoiseModel()


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> RigidTransform:
    """Camera pose (camera -> world) with +z toward target, +x right, +y down."""
    position = np.asarray(position, dtype=float)
    z = np.asarray(target, dtype=float) - position
    z = z / np.linalg.norm(z)
    up = np.asarray(up, dtype=float)
    x = np.cross(z, up)
    n = np.linalg.norm(x)
    if n < 1e-9:
        x = np.array([1.0, 0.0, 0.0])
    else:
        x = x / n
    y = np.cross(z, x)
    return RigidTransform(np.stack([x, y, z], axis=1), position)


# distractor meshes: not in the recognition database
def _distractor_models():
    return {
        "banana": meshio.box_mesh(0.04, 0.18, 0.04),
        "container": meshio.box_mesh(0.12, 0.15, 0.05),
    }


CONTAINER_DIMS = (0.12, 0.15, 0.05)


@dataclass
class Scene:
    """Everything the harness needs for one simulated tabletop."""

    preset: str
    db: dict                               # recognition database
    instances_gt: list                     # ground-truth ObjectInstance (recognized=False)
    dims: dict                             # object id -> (w, d, h)
    cloud: PointCloud                      # labeled world-frame cloud
    model: SceneModel                      # raycast target (meshes + compressed cloud)
    kinect_pose: RigidTransform            # true T^r_k
    etg_cam: PinholeCamera
    world: CollisionWorld
    arm: ArmModel
    home_q: np.ndarray
    table_z: float = TABLE_Z

    def etg_pose(self, rng: np.random.Generator | None = None,
                 offset=None) -> RigidTransform:
        """True head-camera pose: seated user looking at the table center."""
        pos = ETG_POSITION.copy()
        if offset is not None:
            pos = pos + np.asarray(offset, dtype=float)
        elif rng is not None:
            pos = pos + rng.uniform([-0.08, -0.15, -0.05], [0.08, 0.15, 0.05])
        look = np.array([0.55, 0.0, TABLE_Z + 0.05])
        return look_at(pos, look)


def _mesh_for(db, distractors, object_id):
    if object_id in db:
        return db[object_id].mesh
    return distractors[object_id]


def _place_pose(mesh, x, y, yaw, table_z=TABLE_Z) -> RigidTransform:
    """Rest the mesh on the table at (x, y) with the given yaw."""
    c, s = np.cos(yaw), np.sin(yaw)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    z_shift = table_z - mesh.bounds().min[2]
    return RigidTransform(R, np.array([x, y, z_shift]))


def _sample_positions(rng, ids, meshes, n_tries=200, restarts=50,
                      min_kinect=1.0, max_kinect=1.2, max_base=0.77, clearance=0.03,
                      yaw_for=None):
    # max_base < arm reach: task waypoints climb up to ~0.35 m above an
    # object and must stay inside the 0.85 m workspace ball
    for _ in range(restarts):
        placed = {}
        boxes = []
        for oid in ids:
            mesh = meshes[oid]
            for _ in range(n_tries):
                x = rng.uniform(0.30, 0.78)
                y = rng.uniform(-0.42, 0.42)
                if yaw_for and oid in yaw_for:
                    yaw = yaw_for[oid](rng, x, y)
                else:
                    yaw = rng.uniform(0.0, 2 * np.pi)
                pose = _place_pose(mesh, x, y, yaw)
                world_mesh = mesh.transformed(pose)
                bb = world_mesh.bounds().expanded(clearance)
                centroid = pose.apply(mesh.centroid())
                dk = np.linalg.norm(centroid - KINECT_POSITION)
                if not (min_kinect <= dk <= max_kinect):
                    continue
                if np.linalg.norm(centroid) > max_base - 0.02:
                    continue
                if any(bb.intersects(other) for other in boxes):
                    continue
                placed[oid] = pose
                boxes.append(bb)
                break
            else:
                break  # this object would not fit; reshuffle everything
        if len(placed) == len(ids):
            return placed
    raise RuntimeError(f"could not place objects {ids}")


def _table_mesh():
    x0, x1 = TABLE_X
    y0, y1 = TABLE_Y
    return meshio.quad_mesh([[x0, y0, TABLE_Z], [x1, y0, TABLE_Z],
                             [x1, y1, TABLE_Z], [x0, y1, TABLE_Z]])


def default_world() -> CollisionWorld:
    table = Aabb(np.array([TABLE_X[0], TABLE_Y[0], TABLE_Z - 0.05]),
                 np.array([TABLE_X[1], TABLE_Y[1], TABLE_Z]))
    user = Aabb(np.array([-1.25, -0.4, -0.5]), np.array([-0.45, 0.4, 1.0]))
    return CollisionWorld(safe_zones=[table, user], obstacles=[], object_collision_enabled=True)


def build_scene(preset: str, seed: int = 0, noise: NoiseModel | None = None) -> Scene:
    """Seeded scene synthesis.

    "table5": mug, cereal box, bowl plus banana and container distractors,
    1.0-1.2 m from the RGB-D sensor and within arm reach.
    "manual": drink can plus the small container 30 cm away.
    """
    noise = noise or NoiseModel.off()
    rng = np.random.default_rng(seed)
    db = default_database()
    distractors = _distractor_models()
    if preset == "table5":
        ids = ["mug", "cereal", "bowl", "banana", "container"]
    elif preset == "manual":
        ids = ["can", "container"]
    else:
        raise UnknownPreset(preset)
    meshes = {oid: _mesh_for(db, distractors, oid) for oid in ids}
    if preset == "manual":
        # can placed freely, container exactly 30 cm away on the table
        placed = _sample_positions(rng, ["can"], meshes)
        can_c = placed["can"].apply(meshes["can"].centroid())
        for _ in range(500):
            ang = rng.uniform(0.0, 2 * np.pi)
            x = can_c[0] + 0.30 * np.cos(ang)
            y = can_c[1] + 0.30 * np.sin(ang)
            if not (0.30 <= x <= 0.78 and -0.42 <= y <= 0.42):
                continue
            pose = _place_pose(meshes["container"], x, y, 0.0)
            centroid = pose.apply(meshes["container"].centroid())
            if np.linalg.norm(centroid) > 0.75:
                continue
            placed["container"] = pose
            break
        else:
            raise RuntimeError("could not place container")
    else:
        # the cereal box is set down with its grip face toward the robot, so
        # the side approach (and its 10 cm retreat) stays inside the workspace
        yaw_for = {"cereal": lambda r, x, y: np.arctan2(-y, -x) + r.uniform(-0.6, 0.6)}
        placed = _sample_positions(rng, ids, meshes, yaw_for=yaw_for)

    instances = [ObjectInstance.place(oid, meshes[oid], placed[oid], recognized=False)
                 for oid in ids]
    dims = {oid: (db[oid].dimensions if oid in db else
                  tuple(meshes[oid].bounds().max - meshes[oid].bounds().min))
            for oid in ids}

    # labeled cloud from mesh surface sampling + table points
    pts = []
    labels = []
    for oid in ids:
        world_mesh = meshes[oid].transformed(placed[oid])
        p = meshio.sample_mesh_surface(world_mesh, CLOUD_SPACING_M, rng)
        pts.append(p)
        labels.extend([oid] * len(p))
    table = _table_mesh()
    tp = meshio.sample_mesh_surface(table, 0.02, rng)
    pts.append(tp)
    labels.extend([None] * len(tp))
    pts = np.vstack(pts)
    if noise.depth_sigma_m > 0:
        pts = pts + rng.normal(0.0, noise.depth_sigma_m, pts.shape)
    cloud = PointCloud(pts, tuple(labels))

    scene_meshes = [(meshes[oid], placed[oid]) for oid in ids] + \
                   [(table, RigidTransform.identity())]
    model = SceneModel.build(cloud, scene_meshes)

    kinect_pose = look_at(KINECT_POSITION, np.array([0.55, 0.0, TABLE_Z]))
    world = default_world()
    world.obstacles = [meshes[oid].transformed(placed[oid]).bounds() for oid in ids]
    return Scene(preset, db, instances, dims, cloud, model, kinect_pose,
                 ETG_CAMERA, world, ur5_model(), HOME_Q.copy())


def calibrated_graph(scene: Scene, seed: int = 0, corner_noise_m: float = 0.001) -> FrameGraph:
    """Checkerboard touch calibration of k -> r, with measurement noise."""
    rng = np.random.default_rng(seed)
    board = checkerboard_corners()
    # board lying on the table in front of the robot
    board_r = board + np.array([0.35, -0.2, TABLE_Z + 0.001])
    seen_k = invert(scene.kinect_pose).apply(board_r)
    touch = board_r + rng.normal(0.0, corner_noise_m, board_r.shape)
    seen = seen_k + rng.normal(0.0, corner_noise_m, seen_k.shape)
    calib = calibrate_robot_camera(touch, seen)
    graph = FrameGraph()
    graph.set_edge("k", "r", calib.transform, stamp=0.0)
    return graph

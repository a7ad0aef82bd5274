"""Deterministic simulator for free-view gaze-controlled robotic manipulation.

A seated user wearing eye-tracking glasses looks at tabletop objects; the
library covers the full pipeline: fixation detection on the 2D gaze stream,
head-camera pose estimation against an RGB-D reconstruction, 3D point-of-regard
localisation, object association, and either pre-defined task scripts
(automatic mode) or gaze-stepped end-effector control (manual mode) on a
simulated 6-DOF arm.
"""

from .geometry import (Aabb, ETG_CAMERA, PinholeCamera, PointCloud, Ray,
                       RigidTransform, TriMesh, backproject, build_kdtree, compose,
                       invert, project, radius_search, ray_mesh_intersect,
                       rotation_angle_between, voxel_downsample)
from .registration import (CalibrationResult, FrameGraph, calibrate_robot_camera,
                           checkerboard_corners, fit_rigid)
from .gazefilter import (FixationEvent, GazeSample, WinkEvent, angular_velocity,
                         classify_fixations, detect_winks, read_trace, write_trace)
from .headpose import Correspondence2D3D, PoseEstimate, ransac_pnp, refine_gauss_newton, solve_pnp
from .por3d import Fixation3D, SceneModel, gaze_ray_world, locate_3d_fixation
from .objects import (NoiseSpec, ObjectInstance, ObjectModel, associate_fixation,
                      default_database, load_database, recognize, save_database)
from .arm import ArmModel, fk, fk_frames, ik, jacobian, ur5_model, within_reach
from .planning import (CollisionWorld, Path, collision_check, plan_cartesian,
                       plan_motion, pre_grip_pose, verify_path)
from .modes import (ManualCommand, ModeController, TaskScript, automatic_trigger,
                    dead_zone_bounds, manual_map, manual_step)
from .scene import NoiseModel, Scene, build_scene, calibrated_graph
from .events import EventLog, SimEvent
from .harness import (ManualSession, Timeout, TrialResult, replay_trace,
                      run_automatic_trials, run_manual_task, run_planning_grid,
                      run_por_eval)

__version__ = "0.1.0"

"""Experiment harness: scenario runs, noise injection, trace replay, metrics.

Everything here is deterministic per (config, seed, trace): RNGs are seeded
derived generators, and wall-clock never enters the event log.  The pipeline
compute component of the activation time is simulated from a calibrated
distribution so logs stay reproducible.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .arm import NoConvergence, OutOfReach, fk, within_reach
from .events import EventLog
from .gazefilter import GazeSample, classify_fixations, read_trace
from .geometry import RigidTransform, compose, invert
from .headpose import ransac_pnp, synth_correspondences
from .modes import (Attach, CartesianVia, Detach, Dwell, ManualCommand, ModeController,
                    MotionTo, Pour, TaskScript, WINK_COMMANDS, automatic_trigger,
                    dead_zone_bounds, manual_map, manual_step)
from .objects import NoiseSpec, recognize, associate_fixation
from .planning import (CollisionWorld, CollisionAtWaypoint, GoalUnreachable,
                       IkFailureAtWaypoint, PlanningTimeout, plan_cartesian,
                       plan_motion, verify_path)
from .por3d import NoIntersection, gaze_ray_world, locate_3d_fixation
from .registration import FrameGraph
from .scene import CONTAINER_DIMS, NoiseModel, Scene, build_scene, calibrated_graph

SAMPLE_RATE_HZ = 60.0
DWELL_COMPONENT_S = 2.0
LOOP_LATENCY_S = 1.0          # fixed per-cycle control loop latency
FIXATION_TRACE_S = 2.5
DELIVERY_POSITION = np.array([-0.25, 0.0, 0.35])
ATTACH_TOLERANCE_M = 0.03
DETACH_HOLD_S = 1.0


class Timeout(Exception):
    pass


@dataclass
class TrialResult:
    trial_id: str
    intended: str
    selected: str | None
    plan_valid: bool
    executed_clean: bool
    activation_s: float
    activation_parts: tuple     # (dwell, loop, compute)
    completion_s: float | None = None

    @property
    def selection_ok(self) -> bool:
        return self.selected == self.intended

    @property
    def success(self) -> bool:
        return self.selection_ok and self.plan_valid and self.executed_clean


def simulated_compute_time(rng: np.random.Generator) -> float:
    """Pose estimation + fixation localisation compute budget (seconds)."""
    return float(np.clip(rng.normal(0.55, 0.08), 0.25, 0.69))


def estimate_head_pose(scene: Scene, etg_pose_true: RigidTransform, noise: NoiseModel,
                       seed: int):
    """Simulated head-pose pipeline: synthetic 2D-3D matches -> robust PnP."""
    T_k_o_true = compose(invert(scene.kinect_pose), etg_pose_true)
    prob = synth_correspondences(T_k_o_true, scene.etg_cam, n=50,
                                 outlier_ratio=noise.corr_outlier_ratio,
                                 noise_px=noise.corr_noise_px, seed=seed)
    est = ransac_pnp(prob.corrs, scene.etg_cam, seed=seed + 1)
    return est.pose, est


def synth_fixation_trace(target_px, t0: float, noise: NoiseModel,
                         rng: np.random.Generator, cam,
                         duration: float = FIXATION_TRACE_S,
                         rate: float = SAMPLE_RATE_HZ) -> list[GazeSample]:
    """Gaze samples fixating a pixel: one per-fixation angular offset (the
    tracker calibration error) plus small per-sample jitter."""
    sigma_px = cam.fx * math.tan(math.radians(noise.gaze_sigma_deg))
    offset = rng.normal(0.0, sigma_px, 2) if sigma_px > 0 else np.zeros(2)
    n = int(round(duration * rate))
    jitter = rng.normal(0.0, 0.3, (n, 2))
    samples = []
    for i in range(n):
        u = float(np.clip(target_px[0] + offset[0] + jitter[i, 0], 1.0, cam.width - 1.0))
        v = float(np.clip(target_px[1] + offset[1] + jitter[i, 1], 1.0, cam.height - 1.0))
        samples.append(GazeSample(t0 + i / rate, u, v))
    return samples


def _worlds_for_task(scene: Scene, target_id: str | None, paper_mode: bool):
    """(planning world, execution-check world).

    The manipulated object is never an obstacle for its own task; paper mode
    drops all object obstacles from planning (no obstacle detection), while
    the execution check always keeps the other objects."""
    others = [box for oid, box in zip([i.model_id for i in scene.instances_gt],
                                      scene.world.obstacles) if oid != target_id]
    plan_world = CollisionWorld(scene.world.safe_zones,
                                [] if paper_mode else list(others),
                                object_collision_enabled=not paper_mode)
    exec_world = CollisionWorld(scene.world.safe_zones, list(others), True)
    return plan_world, exec_world


def execute_script(scene: Scene, script: TaskScript, paper_mode: bool, seed: int,
                   log: EventLog, t: float, exec_objects: bool = True):
    """Plan every scripted motion; returns (plan_valid, executed_clean, t_end).

    exec_objects=False re-verifies each path against the world it was planned
    in (pure planning consistency); True sweeps it against the other objects
    too, which paper-mode plans are blind to."""
    plan_world, exec_world = _worlds_for_task(scene, script.object_id, paper_mode)
    if not exec_objects:
        exec_world = plan_world
    q = scene.home_q.copy()
    plan_valid = True
    executed_clean = True
    for si, step in enumerate(script.steps):
        if isinstance(step, MotionTo):
            try:
                path = plan_motion(scene.arm, plan_world, q, step.pose, seed=seed + si,
                                   position_only=False)
            except (GoalUnreachable, PlanningTimeout, OutOfReach, NoConvergence) as e:
                log.emit(t, "plan", step=si, ok=False, error=type(e).__name__)
                plan_valid = False
                break
            clean = verify_path(scene.arm, path, exec_world)
            executed_clean = executed_clean and clean
            q = path.waypoints[-1]
            log.emit(t, "plan", step=si, kind_="motion", waypoints=len(path.waypoints),
                     ok=True, clean=clean)
            t += 1.0
        elif isinstance(step, CartesianVia):
            try:
                path = plan_cartesian(scene.arm, plan_world, q, step.poses, seed=seed + si)
            except (IkFailureAtWaypoint, CollisionAtWaypoint) as e:
                log.emit(t, "plan", step=si, ok=False, error=type(e).__name__)
                plan_valid = False
                break
            clean = verify_path(scene.arm, path, exec_world)
            executed_clean = executed_clean and clean
            q = path.waypoints[-1]
            log.emit(t, "plan", step=si, kind_="cartesian", waypoints=len(path.waypoints),
                     ok=True, clean=clean)
            t += 0.5
        elif isinstance(step, Attach):
            log.emit(t, "step", action="attach", object=step.object_id)
        elif isinstance(step, Detach):
            log.emit(t, "step", action="detach")
        elif isinstance(step, Pour):
            log.emit(t, "step", action="pour", angle=step.angle)
            t += 0.5
        elif isinstance(step, Dwell):
            log.emit(t, "step", action="dwell", seconds=step.seconds)
            t += step.seconds
    return plan_valid, (plan_valid and executed_clean), t


def run_single_trial(scene: Scene, graph: FrameGraph, intended: str, noise: NoiseModel,
                     seed: int, paper_mode: bool, log: EventLog, t0: float):
    rng = np.random.default_rng(seed)
    etg_pose_true = scene.etg_pose(rng)
    pose_est, est = estimate_head_pose(scene, etg_pose_true, noise,
                                       seed=int(rng.integers(2 ** 31)))
    inst_gt = next(i for i in scene.instances_gt if i.model_id == intended)
    target_px = _visible_aim_px(scene, etg_pose_true, inst_gt)
    trace = synth_fixation_trace(target_px, t0, noise, rng, scene.etg_cam)
    fixes = classify_fixations(trace, scene.etg_cam)
    log.emit(t0, "gaze", intended=intended, samples=len(trace))
    instances = recognize(scene.instances_gt, scene.db,
                          NoiseSpec(noise.recog_sigma_m, noise.misdetect_p),
                          seed=seed + 7)
    selected = None
    if fixes:
        fix = fixes[0]
        log.emit(t0 + DWELL_COMPONENT_S, "fixation", centroid=list(fix.centroid),
                 duration=fix.duration)
        log.emit(t0 + DWELL_COMPONENT_S, "pose", rmse_px=est.rmse_px,
                 inliers=len(est.inliers))
        try:
            ray = gaze_ray_world(fix, pose_est, graph, scene.etg_cam)
            fix3d = locate_3d_fixation(ray, scene.model)
            selected = associate_fixation(fix3d.point, instances,
                                          scene.model.compressed_cloud, scene.model.index)
        except NoIntersection:
            selected = None
    compute = simulated_compute_time(rng)
    activation = DWELL_COMPONENT_S + LOOP_LATENCY_S + compute
    log.emit(t0 + activation, "selection", object=selected, intended=intended,
             activation=activation,
             parts=[DWELL_COMPONENT_S, LOOP_LATENCY_S, compute])
    script = None
    if selected is not None:
        home_pose = fk(scene.arm, scene.home_q)
        delivery = RigidTransform(home_pose.rotation, DELIVERY_POSITION)
        script = automatic_trigger(selected, instances, scene.db, delivery, home_pose)
    plan_valid = True
    executed = True
    t_end = t0 + activation
    if script is not None:
        plan_valid, executed, t_end = execute_script(scene, script, paper_mode,
                                                     seed + 100, log, t0 + activation)
    result = TrialResult(f"s{seed}", intended, selected, plan_valid, executed,
                         activation, (DWELL_COMPONENT_S, LOOP_LATENCY_S, compute))
    log.emit(t_end, "result", intended=intended, selected=selected,
             plan_valid=plan_valid, executed_clean=executed,
             triggered=script is not None, activation=activation)
    return result, script is not None, t_end


def _project_world_point(scene: Scene, etg_pose: RigidTransform, p_world):
    from .geometry import project
    p_cam = invert(etg_pose).apply(np.asarray(p_world, dtype=float))
    return project(scene.etg_cam, p_cam)


def _first_hit_id(scene: Scene, ray) -> str | None:
    """model_id of the nearest mesh the ray strikes (None: table or miss)."""
    from .geometry import ray_mesh_intersect
    best_t = math.inf
    best_id = None
    ids = [inst.model_id for inst in scene.instances_gt]
    for idx, (mesh, pose) in enumerate(scene.model.meshes):
        hit = ray_mesh_intersect(ray.transformed(invert(pose)), mesh)
        if hit is not None and hit[0] < best_t:
            best_t = hit[0]
            best_id = ids[idx] if idx < len(ids) else None
    return best_id


def _visible_aim_px(scene: Scene, etg_pose: RigidTransform, inst) -> np.ndarray:
    """Pixel a subject would fixate: a point on the object that is actually
    visible from the head camera, preferring spots where nearby gaze still
    lands on the same object (objects can occlude each other).
    """
    from .geometry import BehindCamera, OutOfImage, backproject
    idx = [i.model_id for i in scene.instances_gt].index(inst.model_id)
    box = scene.world.obstacles[idx]
    ext = box.max - box.min
    offsets = [np.zeros(3)]
    for axis in (2, 0, 1):
        for sgn in (1.0, -1.0):
            o = np.zeros(3)
            o[axis] = sgn * 0.3 * ext[axis]
            offsets.append(o)
    best_score, best_px = -1, None
    for off in offsets:
        try:
            px = _project_world_point(scene, etg_pose, inst.centroid + off)
        except (BehindCamera, OutOfImage):
            continue
        score = 0
        for du, dv in ((0, 0), (12, 0), (-12, 0), (0, 12), (0, -12)):
            probe = (px[0] + du, px[1] + dv)
            if not scene.etg_cam.contains(*probe):
                continue
            ray = backproject(scene.etg_cam, probe).transformed(etg_pose)
            if _first_hit_id(scene, ray) == inst.model_id:
                score += 1
        if score > best_score:
            best_score, best_px = score, px
        if score == 5:
            break
    if best_px is None:  # degenerate: object behind the head; aim at centroid
        return _project_world_point(scene, etg_pose, inst.centroid)
    return best_px


TASK_OBJECTS = ("mug", "cereal", "bowl")
DISTRACTORS = ("banana", "container")


def run_automatic_trials(n_sets: int, noise: NoiseModel, seed: int,
                         subjects: int = 1, paper_mode: bool = False,
                         log: EventLog | None = None) -> dict:
    """Automatic-mode protocol: per set, one trial per object (including the
    distractors) on a freshly randomized scene."""
    log = log if log is not None else EventLog()
    results: list[TrialResult] = []
    triggered_flags: list[tuple[str, bool]] = []
    t = 0.0
    log.emit(t, "init", run="auto", sets=n_sets, subjects=subjects,
             seed=seed, paper_mode=paper_mode)
    for subj in range(subjects):
        for s in range(n_sets):
            scene_seed = seed + 1000 * subj + 10 * s
            scene = build_scene("table5", seed=scene_seed, noise=noise)
            graph = calibrated_graph(scene, seed=scene_seed + 1)
            order_rng = np.random.default_rng(scene_seed + 2)
            order = list(TASK_OBJECTS + DISTRACTORS)
            order_rng.shuffle(order)
            for k, intended in enumerate(order):
                trial_seed = scene_seed + 100 + k
                r, triggered, t = run_single_trial(scene, graph, intended, noise,
                                                   trial_seed, paper_mode, log, t)
                results.append(r)
                triggered_flags.append((intended, triggered))
                t += 1.0
    report = summarize_auto(results, triggered_flags)
    log.emit(t, "result", summary=report)
    report["results"] = results
    report["log"] = log
    return report


def summarize_auto(results, triggered_flags) -> dict:
    db_trials = [r for r in results if r.intended in TASK_OBJECTS]
    distractor_trials = [(i, trig) for i, trig in triggered_flags if i in DISTRACTORS]
    task_trials = [r for r in results if r.intended in ("mug", "cereal")]
    sel = [r.selection_ok for r in db_trials]
    plans = [r.plan_valid for r in task_trials if r.selection_ok]
    execs = [r.executed_clean for r in task_trials if r.selection_ok and r.plan_valid]
    act = np.array([r.activation_s for r in results])
    comp = np.array([r.activation_parts[2] for r in results])
    false_triggers = sum(1 for _, trig in distractor_trials if trig)
    return {
        "n_trials": len(results),
        "selection_rate": float(np.mean(sel)) if sel else 1.0,
        "plan_rate": float(np.mean(plans)) if plans else 1.0,
        "execution_rate": float(np.mean(execs)) if execs else 1.0,
        "distractor_false_triggers": int(false_triggers),
        "distractor_trials": len(distractor_trials),
        "activation_mean_s": float(act.mean()),
        "activation_sd_s": float(act.std()),
        "compute_p95_s": float(np.percentile(comp, 95)),
    }


# ---------------------------------------------------------------------------
# 3D PoR accuracy protocol: 10 targets x 6 head positions


def run_por_eval(noise: NoiseModel, seed: int = 0) -> dict:
    scene = build_scene("table5", seed=seed, noise=noise)
    graph = calibrated_graph(scene, seed=seed + 1,
                             corner_noise_m=0.001 if noise.corr_noise_px > 0 else 0.0)
    rng = np.random.default_rng(seed + 2)
    # 10 targets: object centroid sightlines and offset variants
    target_specs = []
    for inst in scene.instances_gt:
        target_specs.append((inst.model_id, np.zeros(3)))
        target_specs.append((inst.model_id, np.array([0.0, 0.02, 0.03])))
    offsets = [np.array(o) for o in
               ([0, 0, 0], [0.06, 0, 0], [-0.06, 0, 0],
                [0, 0.12, 0], [0, -0.12, 0], [0.04, 0.06, 0.03])]
    errors = []
    for pos_i, off in enumerate(offsets):
        etg_pose_true = scene.etg_pose(offset=off)
        pose_est, _ = estimate_head_pose(scene, etg_pose_true, noise,
                                         seed=seed + 50 + pos_i)
        for tgt_i, (oid, shift) in enumerate(target_specs):
            inst = next(i for i in scene.instances_gt if i.model_id == oid)
            aim = inst.centroid + shift
            px = _project_world_point(scene, etg_pose_true, aim)
            # ground truth: exact ray through exact poses
            gt_fix = _locate_px(scene, etg_pose_true, px)
            if gt_fix is None:
                continue
            sigma_px = scene.etg_cam.fx * math.tan(math.radians(noise.gaze_sigma_deg))
            px_noisy = px + (rng.normal(0.0, sigma_px, 2) if sigma_px > 0 else 0.0)
            px_noisy = np.clip(px_noisy, 1.0, [scene.etg_cam.width - 1.0,
                                               scene.etg_cam.height - 1.0])
            T_r_o_est = compose(graph.resolve("k", "r"), pose_est)
            est_fix = _locate_ray(scene, T_r_o_est, px_noisy)
            if est_fix is None:
                continue
            errors.append(float(np.linalg.norm(est_fix - gt_fix)))
    errors = np.array(errors)
    return {"n": len(errors), "mean_m": float(errors.mean()),
            "sd_m": float(errors.std()), "max_m": float(errors.max())}


def _locate_px(scene: Scene, etg_pose: RigidTransform, px):
    return _locate_ray(scene, etg_pose, px)


def _locate_ray(scene: Scene, T_r_o: RigidTransform, px):
    from .geometry import backproject
    try:
        ray = backproject(scene.etg_cam, px).transformed(T_r_o)
        return locate_3d_fixation(ray, scene.model).point
    except NoIntersection:
        return None


# ---------------------------------------------------------------------------
# trajectory-planning grid: 2 objects x 3 positions x 10 repeats


def run_planning_grid(seed: int = 0) -> dict:
    n_ok = 0
    n_total = 0
    failures = []
    for pos_i in range(3):
        scene = build_scene("table5", seed=seed + pos_i, noise=NoiseModel.off())
        for oid in ("mug", "cereal"):
            for rep in range(10):
                n_total += 1
                home_pose = fk(scene.arm, scene.home_q)
                delivery = RigidTransform(home_pose.rotation, DELIVERY_POSITION)
                script = automatic_trigger(oid, scene.instances_gt, scene.db,
                                           delivery, home_pose)
                log = EventLog()
                ok, clean, _ = execute_script(scene, script, paper_mode=True,
                                              seed=seed + 1000 * pos_i + 100 * rep,
                                              log=log, t=0.0, exec_objects=False)
                if ok and clean:
                    n_ok += 1
                else:
                    failures.append((pos_i, oid, rep))
    return {"n_ok": n_ok, "n_total": n_total, "failures": failures}


# ---------------------------------------------------------------------------
# manual mode


@dataclass
class _EyeTracker:
    """Online wink / detach-gesture detection over the sample stream."""

    closed_since: dict = field(default_factory=dict)   # eye -> (t_start, other_open_throughout)
    both_since: float | None = None

    def update(self, s: GazeSample):
        """Returns (completed_winks, detach_gesture_active_duration)."""
        winks = []
        states = {"left": s.left_open, "right": s.right_open}
        both_closed = not s.left_open and not s.right_open
        if both_closed:
            if self.both_since is None:
                self.both_since = s.t
        else:
            self.both_since = None
        for eye in ("left", "right"):
            other = "right" if eye == "left" else "left"
            if not states[eye]:
                if eye not in self.closed_since:
                    self.closed_since[eye] = [s.t, states[other]]
                else:
                    self.closed_since[eye][1] = self.closed_since[eye][1] and states[other]
            elif eye in self.closed_since:
                t0, other_ok = self.closed_since.pop(eye)
                if other_ok and s.t - t0 >= 0.5:
                    winks.append(eye)
        hold = (s.t - self.both_since) if self.both_since is not None else 0.0
        return winks, hold


class ManualSession:
    """Manual-mode pick-and-place simulation driven by a gaze sample stream.

    The approach phase (fixation on the misdetected can, plan to its wrong
    pre-grip pose) is executed at session start; samples then steer 2 cm
    steps on the head-camera axes.  The magnetic gripper attaches on contact
    and releases on a long both-eyes-closed gesture.
    """

    def __init__(self, seed: int = 0, noise: NoiseModel | None = None,
                 timeout_s: float = 300.0):
        self.noise = noise or NoiseModel.default()
        self.timeout_s = timeout_s
        self.rng = np.random.default_rng(seed)
        self.log = EventLog()
        self.scene = build_scene("manual", seed=seed, noise=self.noise)
        self.graph = calibrated_graph(self.scene, seed=seed + 1)
        self.etg_pose_true = self.scene.etg_pose(offset=np.zeros(3))
        pose_est, est = estimate_head_pose(self.scene, self.etg_pose_true, self.noise,
                                           seed=seed + 2)
        self.graph.set_edge("o", "k", pose_est, stamp=0.0)
        can_gt = next(i for i in self.scene.instances_gt if i.model_id == "can")
        cont_gt = next(i for i in self.scene.instances_gt if i.model_id == "container")
        self.can_pose_true = can_gt.pose
        self.container_pose = cont_gt.pose
        # injected recognition failure: reflective can, pose off by 3-5 cm
        ang = self.rng.uniform(0.0, 2 * math.pi)
        mag = self.rng.uniform(0.03, 0.05)
        bad = RigidTransform(can_gt.pose.rotation,
                             can_gt.pose.translation + mag * np.array([math.cos(ang),
                                                                       math.sin(ang), 0.0]))
        from .objects import ObjectInstance
        self.can_seen = ObjectInstance.place("can", self.scene.db["can"].mesh, bad, True)
        from .planning import pre_grip_pose
        grips = pre_grip_pose(self.can_seen, self.scene.db["can"])
        self.log.emit(0.0, "init", run="manual", seed=seed, timeout=timeout_s)
        self.log.emit(0.0, "pose", rmse_px=est.rmse_px, inliers=len(est.inliers))
        self.log.emit(0.0, "selection", object="can", intended="can",
                      pose_error_m=float(mag))
        plan_world, _ = _worlds_for_task(self.scene, "can", paper_mode=True)
        path = plan_motion(self.scene.arm, plan_world, self.scene.home_q,
                           grips["pre_grip"], seed=seed + 3)
        self.q = path.waypoints[-1]
        self.ee_pose = fk(self.scene.arm, self.q)
        # snap the tracked position onto the planned pre-grip point so manual
        # steps stay exact 2 cm lattice moves from here on
        self.ee_pose = grips["pre_grip"]
        self.log.emit(0.0, "plan", step=0, kind_="motion",
                      waypoints=len(path.waypoints), ok=True)
        self.mode = ModeController()
        self.mode.toggle_manual(0.0)
        self.log.emit(0.0, "mode", mode="manual")
        self.tracker = _EyeTracker()
        self.attached = False
        self.grab_offset = None
        self.released = False
        self.release_pose = None
        self.last_cmd_t = -math.inf
        self.pending_winks: list[str] = []
        self.handover_t = None
        self.last_t = 0.0
        self.samples_fed: list[GazeSample] = []
        self.success = None
        self.completion_s = None

    # geometry helpers ------------------------------------------------------
    def can_grab_point(self) -> np.ndarray:
        """True top-center of the can (magnet contact point)."""
        top = self.scene.db["can"].grip.contact_offset
        return self.can_pose_true.apply(self.scene.db["can"].mesh.centroid()) + \
            self.can_pose_true.apply_vector(np.asarray(top, dtype=float))

    def can_base_point(self) -> np.ndarray:
        c = self.can_pose_true.apply(self.scene.db["can"].mesh.centroid())
        return c - np.array([0.0, 0.0, self.scene.db["can"].dimensions[2] / 2])

    def container_floor_z(self) -> float:
        # 5 mm wall thickness above the container's resting base
        return float(self.container_pose.translation[2] - CONTAINER_DIMS[2] / 2 + 0.005)

    def container_center(self) -> np.ndarray:
        return self.container_pose.apply(np.zeros(3))

    def container_footprint_ok(self, p) -> bool:
        rel = invert(self.container_pose).apply(np.asarray(p, dtype=float))
        return bool(abs(rel[0]) <= CONTAINER_DIMS[0] / 2 and
                    abs(rel[1]) <= CONTAINER_DIMS[1] / 2)

    # stream processing -----------------------------------------------------
    def feed(self, s: GazeSample):
        if self.released:
            return
        if self.handover_t is None:
            self.handover_t = s.t
        self.last_t = s.t
        if s.t - self.handover_t > self.timeout_s:
            raise Timeout(f"manual task exceeded {self.timeout_s} s")
        self.samples_fed.append(s)
        self.log.emit(s.t, "gaze", u=s.u, v=s.v, lo=s.left_open, ro=s.right_open)
        if self.mode.state.mode != "manual":
            return
        winks, both_hold = self.tracker.update(s)
        self.pending_winks.extend(winks)
        if both_hold >= DETACH_HOLD_S and self.attached:
            self._release(s.t)
            return
        if s.t - self.last_cmd_t < 0.5:
            return
        if self.pending_winks:
            cmd = ManualCommand(WINK_COMMANDS[self.pending_winks.pop(0)])
            self.pending_winks.clear()
        elif s.valid:
            cmd = manual_map((s.u, s.v), [])
        else:
            cmd = None
        if cmd is None:
            return
        self._execute(cmd, s.t)

    def _execute(self, cmd: ManualCommand, t: float):
        out = manual_step(cmd, self.graph, self.ee_pose, t)
        target = out["target"]
        blocked = not within_reach(self.scene.arm, target.translation)
        if not blocked:
            for box in self.scene.world.safe_zones:
                if box.expanded(0.02).contains(target.translation):
                    blocked = True
                    break
        self.last_cmd_t = t
        if blocked:
            self.log.emit(t, "feedback", utterance="blocked")
            return
        prev = self.ee_pose.translation.copy()
        self.ee_pose = target
        if self.attached:
            self.can_pose_true = RigidTransform(
                self.can_pose_true.rotation,
                self.can_pose_true.translation + (target.translation - prev))
        self.log.emit(t, "step", direction=cmd.direction,
                      ee=[float(x) for x in target.translation])
        self.log.emit(t, "feedback", utterance=cmd.direction)
        if not self.attached:
            d = float(np.linalg.norm(self.ee_pose.translation - self.can_grab_point()))
            if d <= ATTACH_TOLERANCE_M:
                self.attached = True
                self.grab_offset = self.can_pose_true.translation - self.ee_pose.translation
                self.log.emit(t, "step", action="attach", object="can")
                self.log.emit(t, "feedback", utterance="attached")

    def _release(self, t: float):
        self.attached = False
        self.released = True
        base = self.can_base_point()
        in_footprint = self.container_footprint_ok(base)
        floor_z = self.container_floor_z()
        rim_z = floor_z + CONTAINER_DIMS[2]
        above_floor = base[2] >= floor_z - 1e-6
        close_enough = base[2] <= rim_z + 0.10
        self.success = bool(in_footprint and above_floor and close_enough)
        self.completion_s = t - (self.handover_t or 0.0)
        self.log.emit(t, "step", action="detach")
        self.log.emit(t, "feedback", utterance="task done" if self.success else "missed")
        self.log.emit(t, "result", success=self.success, completion_s=self.completion_s,
                      base=[float(x) for x in base])

    def snapshot(self, t: float | None = None) -> dict:
        """State snapshot for the teleop console (protocol v1)."""
        u0, u1, v0, v1 = dead_zone_bounds()
        objects = []
        for inst in self.scene.instances_gt:
            pos = (self.can_pose_true.translation if inst.model_id == "can"
                   else inst.pose.translation)
            objects.append({"id": inst.model_id,
                            "pos": [float(x) for x in pos],
                            "dims": [float(x) for x in self.scene.dims[inst.model_id]],
                            "recognized": inst.model_id == "can"})
        return {
            "v": 1, "kind": "snapshot",
            "t": round(self.last_t if t is None else t, 6),
            "mode": self.mode.state.mode,
            "joints": [float(x) for x in self.q],
            "ee": [float(x) for x in self.ee_pose.translation],
            "attached": "can" if self.attached else None,
            "released": self.released,
            "success": getattr(self, "success", None),
            "dead_zone": [u0, u1, v0, v1],
            "objects": objects,
        }


class Autopilot:
    """Scripted gaze policy completing the can pick-and-place.

    Plays the role of the subject: looks off-center to command steps, winks
    for depth, and closes both eyes to drop the can into the container.
    """

    CENTER = (640.0, 480.0)
    LOOK = {"left": (100.0, 480.0), "right": (1180.0, 480.0),
            "up": (640.0, 100.0), "down": (640.0, 860.0)}
    AXIS_TOL = 0.011

    def __init__(self, session: ManualSession):
        self.s = session
        self.wink_until = None
        self.wink_eye = None
        self.detach_until = None
        self.stage = "hover"        # hover -> grab -> lift -> transit -> lower -> drop
        self.cmd_to_wink = {v: k for k, v in WINK_COMMANDS.items()}
        self.R_o = session.graph.resolve("o", "r").rotation  # command basis

    def _converged(self, target) -> bool:
        d_cam = self.R_o.T @ (np.asarray(target) - self.s.ee_pose.translation)
        return bool(np.max(np.abs(d_cam)) <= self.AXIS_TOL)

    def _phase_target(self):
        """Current stage's end-effector goal; stages only advance, so the
        greedy stepping cannot cycle between phases."""
        s = self.s
        grab = s.can_grab_point()
        if self.stage == "hover":
            hover = grab + np.array([0.0, 0.0, 0.035])
            if not self._converged(hover):
                return hover, None
            self.stage = "grab"
        if self.stage == "grab":
            if not s.attached:
                return grab, None
            self.stage = "lift"
        base = s.can_base_point()
        offset = s.ee_pose.translation - base  # fixed while attached
        cont = s.container_center()
        floor_z = s.container_floor_z()
        carry_z = floor_z + CONTAINER_DIMS[2] + 0.08
        if self.stage == "lift":
            goal = np.array([base[0], base[1], carry_z]) + offset
            if not self._converged(goal):
                return goal, None
            self.stage = "transit"
        if self.stage == "transit":
            goal = np.array([cont[0], cont[1], carry_z]) + offset
            if not self._converged(goal):
                return goal, None
            self.stage = "lower"
        if self.stage == "lower":
            goal = np.array([cont[0], cont[1], floor_z + 0.025]) + offset
            if not self._converged(goal):
                return goal, None
            self.stage = "drop"
        return None, "detach"

    def _pick_command(self, target):
        d_cam = self.R_o.T @ (target - self.s.ee_pose.translation)
        axis = int(np.argmax(np.abs(d_cam)))
        if abs(d_cam[axis]) <= self.AXIS_TOL:
            return None
        sign = d_cam[axis] > 0
        return [["right", "left"], ["down", "up"], ["in", "out"]][axis][0 if sign else 1]

    def sample(self, t: float) -> GazeSample:
        s = self.s
        if self.detach_until is not None:
            if t <= self.detach_until:
                return GazeSample(t, *self.CENTER, left_open=False, right_open=False)
            self.detach_until = None
        if self.wink_until is not None:
            if t <= self.wink_until:
                lo = self.wink_eye != "left"
                ro = self.wink_eye != "right"
                return GazeSample(t, *self.CENTER, left_open=lo, right_open=ro)
            self.wink_until = None
            return GazeSample(t, *self.CENTER)  # reopen frame completes the wink
        if t - s.last_cmd_t < 0.5 + 1.0 / SAMPLE_RATE_HZ:
            return GazeSample(t, *self.CENTER)
        target, action = self._phase_target()
        if action == "detach":
            self.detach_until = t + DETACH_HOLD_S + 0.1
            return GazeSample(t, *self.CENTER, left_open=False, right_open=False)
        if target is None:
            return GazeSample(t, *self.CENTER)
        cmd = self._pick_command(target)
        if cmd is None:
            return GazeSample(t, *self.CENTER)
        if cmd in ("in", "out"):
            self.wink_eye = self.cmd_to_wink[cmd]
            self.wink_until = t + 0.55
            lo = self.wink_eye != "left"
            ro = self.wink_eye != "right"
            return GazeSample(t, *self.CENTER, left_open=lo, right_open=ro)
        return GazeSample(t, *self.LOOK[cmd])


def run_manual_task(seed: int = 0, trace=None, noise: NoiseModel | None = None,
                    timeout_s: float = 300.0):
    """Manual pick-and-place: scripted autopilot by default, or a JSONL gaze
    trace.  Returns (TrialResult, session); raises Timeout if the task never
    completes."""
    session = ManualSession(seed=seed, noise=noise, timeout_s=timeout_s)
    if trace is not None:
        samples = (read_trace(trace) if isinstance(trace, (str, bytes, os.PathLike))
                   else trace)
        for s in samples:
            session.feed(s)
            if session.released:
                break
        if not session.released:
            raise Timeout("trace ended before task completion")
    else:
        pilot = Autopilot(session)
        t = 0.0
        dt = 1.0 / SAMPLE_RATE_HZ
        while not session.released:
            t += dt
            session.feed(pilot.sample(round(t, 6)))
    return TrialResult(
        trial_id=f"manual-{seed}", intended="can", selected="can",
        plan_valid=True, executed_clean=session.success,
        activation_s=DWELL_COMPONENT_S + LOOP_LATENCY_S,
        activation_parts=(DWELL_COMPONENT_S, LOOP_LATENCY_S, 0.0),
        completion_s=session.completion_s), session


def replay_trace(path, seed: int = 0, noise: NoiseModel | None = None) -> EventLog:
    """Deterministic replay of a JSONL gaze trace through the manual session."""
    samples = read_trace(path)
    session = ManualSession(seed=seed, noise=noise)
    for s in samples:
        if session.released:
            break
        session.feed(s)
    return session.log

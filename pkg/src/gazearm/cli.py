"""`sim` command line: experiment runs, trace replay, calibration, service."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np


def _load_config(path):
    if path is None:
        return {}
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def _noise(name):
    from .scene import NoiseModel
    if name == "off":
        return NoiseModel.off()
    if name == "default":
        return NoiseModel.default()
    raise SystemExit(f"unknown noise model '{name}'")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise", choices=["default", "off"], default=None)
    p.add_argument("--log", metavar="FILE", help="write the event log as JSONL")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim",
                                description="gaze-controlled manipulation simulator")
    p.add_argument("--config", metavar="FILE",
                   help="JSON or TOML file with default option values")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("run-auto", help="automatic-mode trial sets")
    pa.add_argument("--sets", type=int, default=3)
    pa.add_argument("--subjects", type=int, default=1)
    pa.add_argument("--paper-mode", action="store_true",
                    help="plan without object obstacles (no obstacle detection)")
    _add_common(pa)

    pm = sub.add_parser("run-manual", help="manual-mode pick-and-place")
    src = pm.add_mutually_exclusive_group()
    src.add_argument("--trace", metavar="FILE", help="JSONL gaze trace to drive the task")
    src.add_argument("--serve", metavar="HOST:PORT",
                     help="serve a live session for the teleop console")
    pm.add_argument("--timeout", type=float, default=300.0)
    _add_common(pm)

    pr = sub.add_parser("replay", help="replay a gaze trace into an event log")
    pr.add_argument("trace", metavar="FILE")
    _add_common(pr)

    pc = sub.add_parser("calibrate", help="simulated checkerboard touch calibration")
    pc.add_argument("--corner-noise-mm", type=float, default=1.0)
    pc.add_argument("--out", metavar="FILE", help="write the calibration result JSON")
    _add_common(pc)
    return p


def _resolved(args, config, key, fallback):
    v = getattr(args, key, None)
    if v is not None:
        return v
    return config.get(key, fallback)


def cmd_run_auto(args, config):
    from .harness import run_automatic_trials
    seed = int(_resolved(args, config, "seed", 0))
    noise = _noise(_resolved(args, config, "noise", "default"))
    report = run_automatic_trials(args.sets, noise, seed, subjects=args.subjects,
                                  paper_mode=args.paper_mode)
    log = report.pop("log")
    report.pop("results")
    print(f"trials:              {report['n_trials']}")
    print(f"selection success:   {report['selection_rate'] * 100:.2f}%")
    print(f"plan success:        {report['plan_rate'] * 100:.2f}%")
    print(f"execution success:   {report['execution_rate'] * 100:.2f}%")
    print(f"distractor triggers: {report['distractor_false_triggers']}"
          f"/{report['distractor_trials']}")
    print(f"activation time:     {report['activation_mean_s']:.2f} "
          f"+/- {report['activation_sd_s']:.2f} s")
    print(f"compute p95:         {report['compute_p95_s']:.3f} s")
    if args.log:
        log.write(args.log)
    return 0


def cmd_run_manual(args, config):
    seed = int(_resolved(args, config, "seed", 0))
    noise = _noise(_resolved(args, config, "noise", "default"))
    if args.serve:
        from .server import serve
        print(f"serving on {args.serve} (seed {seed}); connect the console to /ws")
        serve(args.serve, seed=seed, noise=noise, timeout_s=args.timeout)
        return 0
    from .harness import Timeout, run_manual_task
    try:
        result, session = run_manual_task(seed=seed, trace=args.trace, noise=noise,
                                          timeout_s=args.timeout)
    except Timeout as e:
        print(f"timeout: {e}", file=sys.stderr)
        return 1
    print(f"success:         {result.executed_clean}")
    print(f"completion time: {result.completion_s:.2f} s")
    steps = session.log.of_kind("step")
    moved = [e for e in steps if "direction" in e.payload]
    print(f"steps executed:  {len(moved)} (2 cm each)")
    base = session.can_base_point()
    cont = session.container_center()
    d_cm = 100 * math.hypot(base[0] - cont[0], base[1] - cont[1])
    print(f"final can base:  {d_cm:.1f} cm from container center")
    if args.log:
        session.log.write(args.log)
    return 0 if result.executed_clean else 1


def cmd_replay(args, config):
    from .gazefilter import ParseError
    from .harness import replay_trace
    seed = int(_resolved(args, config, "seed", 0))
    noise = _noise(_resolved(args, config, "noise", "default"))
    try:
        log = replay_trace(args.trace, seed=seed, noise=noise)
    except ParseError as e:
        print(f"trace parse error: {e}", file=sys.stderr)
        return 1
    if args.log:
        log.write(args.log)
    else:
        sys.stdout.write(log.to_jsonl())
    return 0


def cmd_calibrate(args, config):
    from .registration import calibrate_robot_camera, checkerboard_corners
    from .scene import TABLE_Z, build_scene
    from .geometry import invert, rotation_angle_between
    seed = int(_resolved(args, config, "seed", 0))
    scene = build_scene("table5", seed=seed)
    rng = np.random.default_rng(seed + 1)
    sigma = args.corner_noise_mm / 1000.0
    board = checkerboard_corners() + np.array([0.35, -0.2, TABLE_Z + 0.001])
    seen = invert(scene.kinect_pose).apply(board)
    calib = calibrate_robot_camera(board + rng.normal(0, sigma, board.shape),
                                   seen + rng.normal(0, sigma, seen.shape))
    t_err = np.linalg.norm(calib.transform.translation - scene.kinect_pose.translation)
    r_err = rotation_angle_between(calib.transform, scene.kinect_pose)
    print(f"residual rms:      {calib.residual_rms_m * 100:.3f} cm")
    print(f"translation error: {t_err * 100:.3f} cm")
    print(f"rotation error:    {math.degrees(r_err):.4f} deg")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(calib.to_json())
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = _load_config(args.config)
    handler = {"run-auto": cmd_run_auto, "run-manual": cmd_run_manual,
               "replay": cmd_replay, "calibrate": cmd_calibrate}[args.command]
    return handler(args, config)


if __name__ == "__main__":
    sys.exit(main())

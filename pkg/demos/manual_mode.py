"""Watch the scripted autopilot steer the can into the container.

The session injects a 3-5 cm recognition error on the can, so the approach
lands off-target and the rest of the task is pure gaze steering: 2 cm steps,
winks for depth, a long both-eyes-closed hold to drop.

Usage: python3 demos/manual_mode.py [seed]
"""

import sys

import numpy as np

from gazearm.harness import run_manual_task

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
result, session = run_manual_task(seed=seed)

steps = [e for e in session.log.of_kind("step") if "direction" in e.payload]
print(f"seed {seed}: {'success' if result.executed_clean else 'failure'} "
      f"in {result.completion_s:.1f} s, {len(steps)} manual steps\n")

directions = [e.payload["direction"] for e in steps]
for d in ("left", "right", "up", "down", "in", "out"):
    if directions.count(d):
        print(f"  {d:5s} x {directions.count(d)}")

base = session.can_base_point()
cont = session.container_center()
print(f"\ncan base landed {100 * np.linalg.norm((base - cont)[:2]):.1f} cm "
      f"from the container center")
print(f"recorded {len(session.samples_fed)} gaze samples; save them with "
      f"gazearm.gazefilter.write_trace and feed to `sim replay`")

"""Run one automatic-mode trial set and print what happened, step by step.

Usage: python3 demos/automatic_mode.py [seed]
"""

import sys

from gazearm.harness import run_automatic_trials
from gazearm.scene import NoiseModel

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
report = run_automatic_trials(1, NoiseModel.default(), seed=seed, paper_mode=True)

print(f"seed {seed}: one set, five objects (three tasks + two distractors)\n")
for r in report["results"]:
    if r.success:
        verdict = "ok"
    elif r.selected is None:
        verdict = "no action"
    elif not r.selection_ok:
        verdict = "wrong object"
    elif not r.plan_valid:
        verdict = "plan failed"
    else:
        verdict = "execution failed"
    print(f"  looked at {r.intended:9s} -> selected {str(r.selected):9s} "
          f"activation {r.activation_s:.2f} s  [{verdict}]")

print(f"\nselection rate: {report['selection_rate'] * 100:.1f}%")
print(f"plan rate:      {report['plan_rate'] * 100:.1f}%")
print(f"false triggers: {report['distractor_false_triggers']}"
      f"/{report['distractor_trials']}")
print(f"\nevent log has {len(report['log'].events)} events; first five:")
for e in report["log"].events[:5]:
    print(" ", e.to_json())

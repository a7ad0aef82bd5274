"""3D point-of-regard accuracy, clean vs. calibrated noise.

Reproduces the 10-target x 6-head-position protocol and prints the mean
error in centimeters for both noise settings.

Usage: python3 demos/por_accuracy.py
"""

from gazearm.harness import run_por_eval
from gazearm.scene import NoiseModel

for name, noise in (("noise off", NoiseModel.off()),
                    ("default  ", NoiseModel.default())):
    r = run_por_eval(noise, seed=0)
    print(f"{name}: mean {100 * r['mean_m']:.3f} cm  "
          f"sd {100 * r['sd_m']:.3f} cm  max {100 * r['max_m']:.3f} cm  "
          f"({r['n']} sightlines)")

"""One crank revolution of the 2.0:1 preset at 33 rpm.

The slider drops quickly (power stroke, arms closing) and rises slowly
(recovery, arms opening).  Prints a coarse table of the motion.
"""
import numpy as np

from octoswim import PRESETS, slider_position, slider_velocity, stroke_timing
from octoswim.mechanism import crank_angle, is_power_stroke

geom = PRESETS["2.0:1"]
rpm = 33.0
recovery, power, period = stroke_timing(geom, rpm)
print(f"period {period:.3f} s: power {power:.3f} s, recovery {recovery:.3f} s, ratio {recovery / power:.4f}")

revs = np.linspace(0, 1, 13)
phi = crank_angle(geom, revs)
s = slider_position(geom, phi)
v = slider_velocity(geom, phi, 2 * np.pi * rpm / 60)
print(f"\n{'t (s)':>7} {'slider (mm)':>12} {'velocity (mm/s)':>16}  phase")
for r, si, vi, p in zip(revs, s, v, is_power_stroke(geom, revs)):
    print(f"{r * period:7.3f} {si:12.3f} {vi:16.2f}  {'power' if p else 'recovery'}")

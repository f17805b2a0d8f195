"""Bench test of one arm: how the incision depth changes its bending.

Cuts on one side of the arm make it soft when opening and stiff when
closing.  At 48 rpm a deeply cut arm curls its tip back early in the
recovery stroke; an uncut arm does not.
"""
from dataclasses import replace

import numpy as np

from octoswim import ScenarioConfig, build_arm, max_curvature_trace, recurve_statistics, simulate_single_arm, stroke_characteristics
from octoswim.arm import midlines

cfg = ScenarioConfig()
geom = cfg.mechanism_left
stroke = stroke_characteristics(geom)
rpm = 48.0

for depth in (0.0, 0.2, 0.4, 0.7):
    model = build_arm(replace(cfg.arm, incision_depth_fraction=depth), cfg.material)
    s = simulate_single_arm(model, geom, rpm, 4 * 60 / rpm, sample_interval=cfg.sample_interval)
    frames, hits = recurve_statistics(model, s, stroke, cfg.recurve)
    print(f"d={depth:.1f}: stiffness open/close {model.stiffness_opening[0] / model.stiffness_closing[0]:.3f}, "
          f"recurve in {hits}/{frames} early-recovery frames")

# Where the bend sits during one power stroke of the deeply cut arm.
model = build_arm(cfg.arm, cfg.material)
s = simulate_single_arm(model, geom, rpm, 3 * 60 / rpm, sample_interval=0.02)
sel = (s.crank_revolutions[:, 0] >= 2) & s.power_phase[:, 0]
trace = max_curvature_trace(midlines(model, s.root_angle[sel, 0], s.joint_angles[sel, 0]))
print("\nmax-curvature position along the arm during a power stroke (mm):")
print(np.round(trace.arc_position).astype(int))

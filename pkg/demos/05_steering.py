"""Steering by running the two motor groups at different speeds.

Planar mode: x is lateral (+x on the right-group side), z is up, heading is
counter-clockwise.  Driving only the left group turns the body clockwise
and pushes it toward +x.
"""
from dataclasses import replace

from octoswim import MotorProfile, ScenarioConfig, simulate_steering

base = ScenarioConfig().robot(mode="planar")
cases = {
    "equal 33/33": (33.0, 33.0),
    "left only": (33.0, 0.0),
    "right only": (0.0, 33.0),
}
for name, (left, right) in cases.items():
    cfg = replace(base, motor_profile_left=MotorProfile.constant(left),
                  motor_profile_right=MotorProfile.constant(right))
    s = simulate_steering(cfg, 6.0)
    x, z, h = s.position[-1, 0], s.position[-1, 2], s.heading[-1]
    print(f"{name:>12}: x={x:8.2f} mm  z={z:8.2f} mm  heading={h:+.3f} rad")

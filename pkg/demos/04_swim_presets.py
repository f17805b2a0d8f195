"""Free swimming with the three linkage presets at 33 rpm.

A larger stroke-time ratio makes the power stroke quicker than the
recovery, which gives more net thrust per cycle.
"""
from dataclasses import replace

from octoswim import PRESETS, ScenarioConfig, stroke_characteristics
from octoswim.cli import simulate_scenario

base = ScenarioConfig()
print(f"{'preset':>7} {'K':>6} {'mm/cycle':>9} {'mm/s':>7} {'peak mm/s':>10} {'peak torque N*mm':>17}")
for label, geom in PRESETS.items():
    res = simulate_scenario(replace(base, mechanism_left=geom, mechanism_right=geom))
    k = stroke_characteristics(geom).travel_ratio_K
    st = res.steady
    print(f"{label:>7} {k:6.3f} {st.mean_displacement:9.1f} {st.mean_speed:7.1f} {st.peak_speed:10.1f} "
          f"{res.torque.peak[0]:17.1f}")

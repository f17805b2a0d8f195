"""Designing a quick-return linkage for a chosen stroke-time ratio.

The ratio K is how much longer the slow (recovery) stroke lasts than the
quick (power) stroke.  Fix the rail offset and crank length, and the coupler
length is the one remaining knob.
"""
from octoswim import PRESETS, stroke_characteristics, synthesize_linkage
from octoswim.errors import NoSolution

for target in (1.2, 1.6, 2.0):
    g = synthesize_linkage(target, offset_e=40.0, crank_a=25.0)
    st = stroke_characteristics(g)
    print(f"target K={target:.1f}: coupler b={g.coupler_b:.4f} mm, achieved K={st.travel_ratio_K:.9f}, "
          f"stroke {g.stroke:.2f} mm")

# The three reference geometries do not all reach the ratio in their label.
print()
for label, g in PRESETS.items():
    k = stroke_characteristics(g).travel_ratio_K
    print(f"{label}: ({g.crank_a:g}, {g.coupler_b:g}, {g.offset_e:g}) gives K={k:.4f}")

# Too high a ratio for this crank and offset has no rotatable linkage.
try:
    synthesize_linkage(4.0, offset_e=40.0, crank_a=25.0)
except NoSolution as exc:
    print(f"\nK=4 with e=40, a=25: {exc}")

"""A small preset x incision-depth grid, run in parallel.

Each cell swims the robot and runs a bench recurve test at the cell's rpm.
Rows come back in a fixed order however many workers run them.
"""
from dataclasses import replace

from octoswim import ScenarioConfig
from octoswim.cli import SWEEP_COLUMNS, run_sweep

cfg = ScenarioConfig()
cfg = replace(cfg, sweep=replace(cfg.sweep, presets=("2.0:1", "1.2:1"), depths=(0.0, 0.7)))
rows = run_sweep(cfg, jobs=2)
show = ("preset", "incision_depth", "mean_speed_mm_s", "peak_torque_nmm", "recurve_fraction")
idx = [SWEEP_COLUMNS.index(c) for c in show]
print("  ".join(f"{c:>16}" for c in show))
for r in rows:
    print("  ".join(f"{r[i]:>16.4g}" if isinstance(r[i], float) else f"{r[i]!s:>16}" for i in idx))

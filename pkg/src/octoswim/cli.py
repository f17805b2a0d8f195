"""Command-line front end: ``octoswim {design,mech,arm,swim,steer,sweep}``.

Every run writes its CSV/text artifacts plus ``effective_config.ini`` into
the output directory.  Exit codes: 0 success, 1 runtime failure, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import mechanism as mech
from .analysis import (
    cycle_metrics,
    max_curvature_trace,
    recurve_statistics,
    steady_state,
    detect_recurve,
    early_recovery_mask,
)
from .arm import build_arm, midlines
from .config import ScenarioConfig, dump_config, load_config
from .errors import ConfigError, InvalidTarget, NoSolution, OctoswimError, SeriesTooShort, Unstable
from .vehicle import MotorProfile, motor_torque_estimate, simulate, simulate_single_arm

SWIM_COLUMNS = ("time_s", "pos_x_mm", "pos_y_mm", "pos_z_mm", "vel_mm_s", "heading_rad", "phase_left", "phase_right")
NOMINAL_TOLERANCE = 0.01  # relative K deviation that gets flagged against a preset's label


class UsageError(Exception):
    """Bad command-line input (exit code 2)."""


# --------------------------------------------------------------------------- output helpers

def fmt(value) -> str:
    """Locale-free text for a CSV cell; floats carry 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v == 0.0:
            v = 0.0  # drop negative zero
        return format(v, ".17g")
    return str(value)


def csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_text(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


# --------------------------------------------------------------------------- design

DESIGN_COLUMNS = ("label", "crank_a_mm", "coupler_b_mm", "offset_e_mm", "theta_deg", "K", "nominal_K",
                  "K_deviation", "off_nominal", "s_min_mm", "s_max_mm", "stroke_mm", "rotatability_margin_mm")


def design_row(label, geom, nominal):
    st = mech.stroke_characteristics(geom)
    dev = (st.travel_ratio_K - nominal) / nominal
    return (label, geom.crank_a, geom.coupler_b, geom.offset_e, st.theta, st.travel_ratio_K, nominal, dev,
            abs(dev) > NOMINAL_TOLERANCE, geom.s_min, geom.s_max, geom.stroke, geom.rotatability_margin)


def run_design(target_K, offset_e, crank_a, presets=False):
    """Synthesise a linkage for ``target_K`` (or list the reference presets).

    Returns the table rows; raises InvalidTarget / NoSolution.
    """
    if presets:
        return [design_row(label, g, mech.NOMINAL_K[label]) for label, g in mech.PRESETS.items()]
    geom = mech.synthesize_linkage(target_K, offset_e, crank_a)
    return [design_row("synthesized", geom, target_K)]


def design_report(rows) -> str:
    out = []
    for r in rows:
        label, a, b, e, theta, k, nominal, dev, flag = r[:9]
        s_min, s_max, stroke, margin = r[9:]
        out.append(f"{label}: a={a:.6g} mm  b={b:.10g} mm  e={e:.6g} mm")
        out.append(f"  polar angle {theta:.6f} deg  K={k:.9f}  (nominal {nominal:g}, deviation {dev:+.2%})"
                   + ("  ** differs from nominal label **" if flag else ""))
        out.append(f"  slider s_min={s_min:.6f} mm  s_max={s_max:.6f} mm  stroke={stroke:.6f} mm"
                   f"  rotatability margin={margin:.6f} mm")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- mech

MECH_COLUMNS = ("group", "time_s", "crank_revolutions", "crank_angle_rad", "slider_mm", "slider_velocity_mm_s",
                "phase")


def run_mech(cfg: ScenarioConfig, samples: int = 720):
    """One crank revolution of each group at its initial motor speed."""
    rows = []
    report = []
    for g, name in enumerate(("left", "right")):
        geom = (cfg.mechanism_left, cfg.mechanism_right)[g]
        rpm = (cfg.motor_left, cfg.motor_right)[g].rpms[0]
        st = mech.stroke_characteristics(geom)
        revs = np.arange(samples + 1) / samples
        phi = mech.crank_angle(geom, revs)
        s = mech.slider_position(geom, phi)
        omega = 2 * math.pi * rpm / 60.0
        v = mech.slider_velocity(geom, phi, omega)
        power = mech.is_power_stroke(geom, revs)
        period = 60.0 / rpm if rpm > 0 else math.inf
        for i in range(samples + 1):
            rows.append((name, revs[i] * period if rpm > 0 else 0.0, revs[i], phi[i], s[i], v[i],
                         "power" if power[i] else "recovery"))
        report.append(f"{name}: a={geom.crank_a:g} b={geom.coupler_b:g} e={geom.offset_e:g} mm  "
                      f"K={st.travel_ratio_K:.9f}  theta={st.theta:.6f} deg")
        report.append(f"  recovery arc {st.phi_push:.6f} deg, power arc {st.phi_return:.6f} deg")
        if rpm > 0:
            t_rec, t_pow, per = mech.stroke_timing(geom, rpm)
            report.append(f"  at {rpm:g} rpm: period {per:.6f} s, recovery {t_rec:.6f} s, power {t_pow:.6f} s")
        report.append(f"  slider {geom.s_min:.6f} .. {geom.s_max:.6f} mm (stroke {geom.stroke:.6f} mm)")
    return rows, "\n".join(report) + "\n"


# --------------------------------------------------------------------------- arm bench

def run_arm(cfg: ScenarioConfig):
    """Clamped single-arm run at the bench speed; midlines, curvature trace, recurve counts."""
    geom = cfg.mechanism_left
    st = mech.stroke_characteristics(geom)
    model = build_arm(cfg.arm, cfg.material)
    rpm = cfg.bench.rpm
    if not rpm > 0:
        raise ConfigError("bench rpm must be positive")
    duration = cfg.bench.cycles * 60.0 / rpm
    series = simulate_single_arm(model, geom, rpm, duration, cfg.dt, cfg.sample_interval, cfg.fluid)
    frames = midlines(model, series.root_angle[:, 0], series.joint_angles[:, 0])
    trace = max_curvature_trace(frames)
    early = early_recovery_mask(series, st, cfg.recurve)
    labels = series.phase_labels(0)

    mid_rows, curv_rows = [], []
    for i, t in enumerate(series.time):
        flag = bool(early[i]) and detect_recurve(frames[i], "recovery", cfg.recurve).recurve
        curv_rows.append((t, series.crank_revolutions[i, 0], labels[i], int(early[i]),
                          trace.arc_position[i], trace.value[i], int(trace.sign[i]), int(flag)))
        for j, (r, z) in enumerate(frames[i]):
            mid_rows.append((t, j, r, z))
    n_frames, hits = recurve_statistics(model, series, st, cfg.recurve)
    report = (f"bench: d={cfg.arm.incision_depth_fraction:g} at {rpm:g} rpm for {cfg.bench.cycles} cycles\n"
              f"early-recovery frames after the first cycle: {n_frames}\n"
              f"recurve-positive frames: {hits}\n"
              f"recurve fraction: {hits / n_frames if n_frames else 0.0:.6f}\n")
    return mid_rows, curv_rows, report


# --------------------------------------------------------------------------- swim / steer

METRIC_COLUMNS = ("cycle", "start_time_s", "displacement_mm", "average_speed_mm_s", "peak_speed_mm_s", "period_s",
                  "recovery_s", "power_s", "startup")


@dataclass
class SwimResult:
    series: object
    metrics: list
    steady: object
    torque: object


def simulate_scenario(cfg: ScenarioConfig, mode=None) -> SwimResult:
    robot = cfg.robot(mode=mode) if mode else cfg.robot()
    series = simulate(robot, cfg.duration, cfg.dt, cfg.sample_interval)
    stroke = mech.stroke_characteristics(cfg.mechanism_left)
    try:
        metrics = cycle_metrics(series, stroke)
    except SeriesTooShort:
        metrics = []
    return SwimResult(series, metrics, steady_state(metrics), motor_torque_estimate(robot, series))


def swim_rows(series):
    left = series.phase_labels(0)
    right = series.phase_labels(1)
    for i, t in enumerate(series.time):
        x, y, z = series.position[i]
        yield (t, x, y, z, series.velocity[i], series.heading[i], left[i], right[i])


def metric_rows(metrics):
    return [(m.index, m.start_time, m.displacement, m.average_speed, m.peak_speed, m.period,
             m.recovery_duration, m.power_duration, m.startup) for m in metrics]


def swim_report(cfg, result: SwimResult) -> str:
    st = result.steady
    lines = [f"mode: {result.series.mode}",
             f"duration: {fmt(cfg.duration)} s, dt: {fmt(cfg.dt)} s",
             f"cycles (left-group crank): {len(result.metrics)}"]
    for m in result.metrics:
        lines.append(f"  cycle {m.index}{' (startup)' if m.startup else ''}: start {m.start_time:.4f} s, "
                     f"displacement {m.displacement:.4f} mm, average {m.average_speed:.4f} mm/s, "
                     f"peak {m.peak_speed:.4f} mm/s")
    lines.append(f"steady-state cycles: {st.cycles}")
    lines.append(f"steady-state mean displacement: {fmt(st.mean_displacement)} mm")
    lines.append(f"steady-state mean speed: {fmt(st.mean_speed)} mm/s")
    lines.append(f"steady-state peak speed: {fmt(st.peak_speed)} mm/s")
    tq = result.torque
    for g, name in enumerate(("left", "right")):
        lines.append(f"peak motor torque {name}: {tq.peak[g]:.4f} N*mm (limit {tq.limit:g})"
                     + ("  ** OVER LIMIT **" if tq.over_limit[g] else ""))
    return "\n".join(lines) + "\n"


def write_swim(cfg, result: SwimResult, out_dir, prefix=""):
    write_text(out_dir, "timeseries.csv", csv_text(SWIM_COLUMNS, swim_rows(result.series)))
    write_text(out_dir, "metrics.csv", csv_text(METRIC_COLUMNS, metric_rows(result.metrics)))
    tq = result.torque
    write_text(out_dir, "torque.csv", csv_text(("time_s", "torque_left_nmm", "torque_right_nmm"),
                                               ((t, *tq.torque[i]) for i, t in enumerate(tq.time))))
    write_text(out_dir, "metrics.txt", prefix + swim_report(cfg, result))


def steer_report(result: SwimResult) -> str:
    s = result.series
    return (f"final lateral position x: {fmt(s.position[-1, 0])} mm (+x = right-group side)\n"
            f"final height z: {fmt(s.position[-1, 2])} mm\n"
            f"final heading: {fmt(s.heading[-1])} rad (counter-clockwise, x right, z up)\n")


# --------------------------------------------------------------------------- sweep

SWEEP_COLUMNS = ("preset", "K", "incision_depth", "rpm", "steady_cycles", "mean_displacement_mm", "mean_speed_mm_s",
                 "peak_speed_mm_s", "peak_torque_nmm", "recurve_frames", "recurve_hits", "recurve_fraction", "error")


def sweep_cells(cfg: ScenarioConfig):
    grid = cfg.sweep
    if not (grid.presets and grid.depths and grid.rpms):
        raise UsageError("sweep grid is empty")
    return sorted((p, float(d), float(r)) for p in grid.presets for d in grid.depths for r in grid.rpms)


def cell_config(cfg: ScenarioConfig, preset, depth, rpm) -> ScenarioConfig:
    geom = mech.PRESETS[preset]
    prof = MotorProfile.constant(rpm)
    return replace(cfg, mechanism_left=geom, mechanism_right=geom,
                   arm=replace(cfg.arm, incision_depth_fraction=depth),
                   motor_left=prof, motor_right=prof, bench=replace(cfg.bench, rpm=rpm))


def run_cell(args):
    cfg, preset, depth, rpm = args
    k = mech.stroke_characteristics(mech.PRESETS[preset]).travel_ratio_K
    head = (preset, k, depth, rpm)
    try:
        cell = cell_config(cfg, preset, depth, rpm)
        res = simulate_scenario(cell)
        st = res.steady
        frames = hits = 0
        if rpm > 0:
            model = build_arm(cell.arm, cell.material)
            stroke = mech.stroke_characteristics(cell.mechanism_left)
            bench = simulate_single_arm(model, cell.mechanism_left, rpm, cell.bench.cycles * 60.0 / rpm,
                                        cell.dt, cell.sample_interval, cell.fluid)
            frames, hits = recurve_statistics(model, bench, stroke, cell.recurve)
        return head + (st.cycles, st.mean_displacement, st.mean_speed, st.peak_speed, float(res.torque.peak[0]),
                       frames, hits, hits / frames if frames else 0.0, "")
    except (OctoswimError, ValueError) as exc:
        return head + ("",) * 8 + (f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " "),)


def run_sweep(cfg: ScenarioConfig, jobs: int = 1):
    cells = [(cfg, *c) for c in sweep_cells(cfg)]
    if jobs <= 1 or len(cells) == 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_cell, cells))


# --------------------------------------------------------------------------- entry point

def build_parser():
    parser = argparse.ArgumentParser(prog="octoswim", description="Quick-return swimming robot simulator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI scenario file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: config out_dir)")
    common.add_argument("--jobs", metavar="N", type=int, default=1, help="parallel sweep cells")
    sub = parser.add_subparsers(dest="command", required=True)
    d = sub.add_parser("design", parents=[common], help="synthesise a linkage for a travel ratio")
    d.add_argument("--paper-presets", action="store_true", help="tabulate the three reference geometries")
    d.add_argument("--target-k", type=float)
    d.add_argument("--offset-e", type=float)
    d.add_argument("--crank-a", type=float)
    for name, text in (("mech", "crank-slider kinematics over one revolution"),
                       ("arm", "clamped single-arm bench run"),
                       ("swim", "free-swimming run"),
                       ("steer", "planar run with left/right motor profiles"),
                       ("sweep", "preset x depth x rpm grid")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _main(args) -> int:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    cfg = replace(cfg, kind=args.command)
    out_dir = args.out or cfg.out_dir
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")

    if args.command == "design":
        dp = cfg.design
        target = args.target_k if args.target_k is not None else dp.target_K
        e = args.offset_e if args.offset_e is not None else dp.offset_e
        a = args.crank_a if args.crank_a is not None else dp.crank_a
        try:
            rows = run_design(target, e, a, args.paper_presets)
        except InvalidTarget as exc:
            raise UsageError(str(exc)) from exc
        cfg = replace(cfg, design=replace(dp, target_K=target, offset_e=e, crank_a=a))
        sys.stdout.write(design_report(rows))
        write_text(out_dir, "design.csv", csv_text(DESIGN_COLUMNS, rows))
    elif args.command == "mech":
        rows, report = run_mech(cfg)
        sys.stdout.write(report)
        write_text(out_dir, "mech.csv", csv_text(MECH_COLUMNS, rows))
        write_text(out_dir, "mech.txt", report)
    elif args.command == "arm":
        mid_rows, curv_rows, report = run_arm(cfg)
        sys.stdout.write(report)
        write_text(out_dir, "arm_midlines.csv", csv_text(("time_s", "node", "r_mm", "z_mm"), mid_rows))
        write_text(out_dir, "arm_curvature.csv",
                   csv_text(("time_s", "crank_revolutions", "phase", "early_recovery", "max_kappa_arc_mm",
                             "max_kappa_per_mm", "max_kappa_sign", "recurve"), curv_rows))
        write_text(out_dir, "arm.txt", report)
    elif args.command in ("swim", "steer"):
        result = simulate_scenario(cfg, mode="planar" if args.command == "steer" else None)
        extra = steer_report(result) if args.command == "steer" else ""
        write_swim(cfg, result, out_dir, prefix=extra)
        sys.stdout.write(extra + swim_report(cfg, result))
    elif args.command == "sweep":
        rows = run_sweep(cfg, args.jobs)
        write_text(out_dir, "sweep.csv", csv_text(SWEEP_COLUMNS, rows))
        failed = sum(1 for r in rows if r[-1])
        sys.stdout.write(f"{len(rows)} cells, {failed} failed\n")
    write_text(out_dir, "effective_config.ini", dump_config(cfg))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _main(args)
    except (UsageError, ConfigError) as exc:
        print(f"octoswim: error: {exc}", file=sys.stderr)
        return 2
    except NoSolution as exc:
        print(f"octoswim: no solution: {exc}", file=sys.stderr)
        return 1
    except Unstable as exc:
        print(f"octoswim: simulation unstable: {exc}", file=sys.stderr)
        return 1
    except (OctoswimError, ValueError, OSError) as exc:
        print(f"octoswim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

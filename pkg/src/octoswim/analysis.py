"""Curvature analytics on arm midlines and per-cycle swimming metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, SeriesTooShort
from .mechanism import StrokeCharacteristics


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    arc_position: np.ndarray  # mm, at interior vertices
    curvature: np.ndarray  # 1/mm, signed (+ = counter-clockwise turn)


def curvature_profile(midline) -> CurvatureProfile:
    """Signed Menger curvature at each interior vertex of a planar polyline."""
    p = np.asarray(midline, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 3:
        raise ValueError("midline must be an (n >= 3, 2) array")
    edges = np.diff(p, axis=0)
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    if np.any(lengths == 0):
        raise DegenerateGeometry("polyline has repeated consecutive points")
    a, b = edges[:-1], edges[1:]
    chord = p[2:] - p[:-2]
    chord_len = np.hypot(chord[:, 0], chord[:, 1])
    if np.any(chord_len == 0):
        raise DegenerateGeometry("polyline folds back onto itself")
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    kappa = 2.0 * cross / (lengths[:-1] * lengths[1:] * chord_len)
    arc = np.concatenate([[0.0], np.cumsum(lengths)])[1:-1]
    return CurvatureProfile(arc, kappa)


@dataclass(frozen=True, eq=False)
class MaxCurvatureTrace:
    arc_position: np.ndarray
    value: np.ndarray  # |kappa| at the maximum
    sign: np.ndarray  # -1, 0 or +1


def max_curvature_trace(midlines) -> MaxCurvatureTrace:
    """Location and size of the largest |curvature| in every frame.

    Ties go to the vertex nearest the tip.
    """
    frames = list(midlines)
    if not frames:
        raise ValueError("need at least one frame")
    pos, val, sgn = [], [], []
    for frame in frames:
        prof = curvature_profile(frame)
        mag = np.abs(prof.curvature)
        i = len(mag) - 1 - int(np.argmax(mag[::-1]))
        pos.append(prof.arc_position[i])
        val.append(mag[i])
        sgn.append(np.sign(prof.curvature[i]))
    return MaxCurvatureTrace(np.array(pos), np.array(val), np.array(sgn))


@dataclass(frozen=True)
class RecurveWindow:
    """Thresholds that define a recurve; all exposed for configuration."""

    distal_fraction: float = 0.2
    proximal_fraction: float = 0.4
    early_recovery_fraction: float = 0.25
    kappa_min: float = 1e-3  # 1/mm


@dataclass(frozen=True)
class RecurveResult:
    recurve: bool
    distal_mean: float
    proximal_mean: float

    def __bool__(self):
        return self.recurve


def detect_recurve(midline, phase: str = "recovery", window: RecurveWindow = RecurveWindow()) -> RecurveResult:
    """Tip curling back against the bend of the proximal arm.

    ``phase`` must be ``"recovery"``; the caller is responsible for passing
    only frames from the early part of that stroke.
    """
    if phase != "recovery":
        raise ValueError("recurve is only defined on recovery-stroke frames")
    prof = curvature_profile(midline)
    pts = np.asarray(midline, dtype=float)
    total = float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))
    s = prof.arc_position / total
    distal = prof.curvature[s >= 1.0 - window.distal_fraction - 1e-12]
    proximal = prof.curvature[s <= window.proximal_fraction + 1e-12]
    d_mean = float(np.mean(distal)) if distal.size else 0.0
    p_mean = float(np.mean(proximal)) if proximal.size else 0.0
    flag = bool(d_mean * p_mean < 0 and abs(d_mean) >= window.kappa_min)
    return RecurveResult(flag, d_mean, p_mean)


@dataclass(frozen=True)
class CycleMetrics:
    index: int
    start_time: float
    displacement: float  # mm
    average_speed: float  # mm/s
    peak_speed: float  # mm/s
    period: float  # s
    recovery_duration: float  # s
    power_duration: float  # s
    startup: bool


def _crossing_times(time, revolutions, levels):
    return np.interp(levels, revolutions, time)


def cycle_metrics(series, stroke: StrokeCharacteristics, rpm: float | None = None,
                  group: int = 0) -> list[CycleMetrics]:
    """Per-cycle displacement and speeds, cycles starting at power-stroke onset.

    ``series`` is a :class:`~octoswim.vehicle.TimeSeries`; displacement is
    measured along world z.  The first cycle is flagged ``startup``.  With
    ``rpm=None`` each period is measured between crank crossings, which
    stays correct under piecewise motor profiles.
    """
    if rpm is not None and not rpm > 0:
        raise ValueError("rpm must be positive")
    time = np.asarray(series.time)
    revs = np.asarray(series.crank_revolutions)[:, group]
    z = np.asarray(series.position)[:, 2]
    speed = np.abs(np.asarray(series.velocity))
    first = int(np.ceil(revs[0] - 1e-9))
    last = int(np.floor(revs[-1] + 1e-9))
    if last - first < 2:
        raise SeriesTooShort(f"series spans {revs[-1] - revs[0]:.3f} revolutions; need at least 2 full cycles")
    levels = np.arange(first, last + 1, dtype=float)
    t_edges = _crossing_times(time, revs, levels)
    z_edges = np.interp(t_edges, time, z)
    out = []
    for i in range(len(levels) - 1):
        t0, t1 = t_edges[i], t_edges[i + 1]
        period = 60.0 / rpm if rpm is not None else float(t1 - t0)
        inside = (time >= t0 - 1e-12) & (time <= t1 + 1e-12)
        disp = float(z_edges[i + 1] - z_edges[i])
        out.append(
            CycleMetrics(
                index=i,
                start_time=float(t0),
                displacement=disp,
                average_speed=disp / period,
                peak_speed=float(speed[inside].max()) if inside.any() else 0.0,
                period=period,
                recovery_duration=period * stroke.phi_push / 360.0,
                power_duration=period * stroke.phi_return / 360.0,
                startup=(i == 0 and first == 0),
            )
        )
    return out


@dataclass(frozen=True)
class SteadyState:
    cycles: int
    mean_displacement: float
    mean_speed: float
    peak_speed: float


def steady_state(metrics: list[CycleMetrics]) -> SteadyState:
    """Aggregate over non-startup cycles."""
    steady = [m for m in metrics if not m.startup]
    if not steady:
        return SteadyState(0, 0.0, 0.0, 0.0)
    return SteadyState(
        cycles=len(steady),
        mean_displacement=float(np.mean([m.displacement for m in steady])),
        mean_speed=float(np.mean([m.average_speed for m in steady])),
        peak_speed=float(max(m.peak_speed for m in steady)),
    )


def early_recovery_mask(series, stroke: StrokeCharacteristics, window: RecurveWindow = RecurveWindow(), group: int = 0):
    """Samples that fall in the first ``early_recovery_fraction`` of a recovery stroke."""
    frac = np.mod(np.asarray(series.crank_revolutions)[:, group], 1.0)
    start = stroke.power_fraction
    span = stroke.recovery_fraction * window.early_recovery_fraction
    return (frac >= start) & (frac < start + span)


def recurve_statistics(arm_model, series, stroke: StrokeCharacteristics, window: RecurveWindow = RecurveWindow(),
                       group: int = 0, skip_cycles: int = 1):
    """Recurve flags over every early-recovery frame after ``skip_cycles``.

    Returns (number of frames, number of recurve-positive frames).
    """
    from .arm import midlines

    mask = early_recovery_mask(series, stroke, window, group)
    mask &= np.asarray(series.crank_revolutions)[:, group] >= skip_cycles
    frames = midlines(arm_model, series.root_angle[mask, group], series.joint_angles[mask, group])
    hits = sum(detect_recurve(f, "recovery", window).recurve for f in frames)
    return len(frames), int(hits)

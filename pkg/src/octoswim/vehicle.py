"""Robot assembly and time simulation.

Two motor groups drive four arms each through one slider per group.  The
right group's arms sit at azimuths +-22.5 and +-67.5 degrees about the body
axis, the left group's at 180 degrees from those.  All arms of a group share
one slider and see the same water in their own bending plane, so each group
is simulated with one representative arm and its loads are replicated over
the group's azimuths.

Body frames and world frames:

* ``vertical`` mode: one degree of freedom, the height ``z`` along the
  body axis (up).
* ``planar`` mode: the body moves in the vertical x-z plane of the tank
  (x lateral, +x on the right-group side) and rotates by ``heading`` about
  the depth axis, counter-clockwise positive viewed with x right and z up.
  The body axis points along (-sin h, cos h).
* ``clamped``: the body is held fixed (single-arm bench tests).

Body rotation adds a flow that varies along each arm; it is averaged over a
group's azimuths the same way as the lateral flow.  The robot is neutrally
buoyant, so no weight term appears anywhere.  Arm
loads reach the body through the rods; arm inertial reactions are not fed
back into the body balance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import mechanism as mech
from .arm import MAX_DT, ArmModel, build_arm, chain_step
from .errors import Unassemblable, Unstable
from .hydro import FluidEnvironment, drag_coefficients
from .mechanism import MechanismGeometry

MM = 1e-3
ARMS_PER_GROUP = 4
RIGHT_AZIMUTHS_DEG = (22.5, 67.5, -22.5, -67.5)
LEFT_AZIMUTHS_DEG = tuple(180.0 + a for a in RIGHT_AZIMUTHS_DEG)
MODES = ("vertical", "planar", "clamped")


def _cos_sum(azimuths_deg):
    return float(sum(math.cos(math.radians(a)) for a in azimuths_deg))


# Sum of cos(azimuth) over one group; mirror images by construction.
GROUP_COS = _cos_sum(RIGHT_AZIMUTHS_DEG)


@dataclass(frozen=True)
class MotorProfile:
    """Piecewise-constant motor speed.

    ``times[i]`` is when speed ``rpms[i]`` starts; the first entry must be 0.
    """

    times: tuple = (0.0,)
    rpms: tuple = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "rpms", tuple(float(r) for r in self.rpms))
        if len(self.times) != len(self.rpms) or not self.times:
            raise ValueError("motor profile needs matching, non-empty times and rpms")
        if self.times[0] != 0.0 or any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("motor profile times must start at 0 and strictly increase")
        if any(not (r >= 0 and math.isfinite(r)) for r in self.rpms):
            raise ValueError("motor rpm must be finite and >= 0")

    @classmethod
    def constant(cls, rpm: float) -> "MotorProfile":
        return cls((0.0,), (rpm,))

    def rpm_at(self, t):
        idx = np.searchsorted(np.asarray(self.times), np.asarray(t, dtype=float), side="right") - 1
        return np.asarray(self.rpms)[np.clip(idx, 0, None)]

    def revolutions(self, t):
        """Crank revolutions completed by time ``t`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        times = np.asarray(self.times)
        rps = np.asarray(self.rpms) / 60.0
        starts = np.concatenate([[0.0], np.cumsum(np.diff(times) * rps[:-1])])
        idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, None)
        return starts[idx] + (t - times[idx]) * rps[idx]


@dataclass(frozen=True)
class RootAngleMap:
    """Slider position to arm root angle.

    ``linear`` maps [s_min, s_max] affinely onto [closed, open].  ``linkage``
    closes the support-rod triangle: the connecting rod hinges on the chassis
    at ``pivot_radius`` from the body axis, the support rod of length
    ``support_rod_length`` runs from the slider (on the axis, height
    ``s - slider_datum`` above the hinge) to a point ``attachment_radius``
    along the connecting rod.
    """

    mode: str = "linear"
    support_rod_length: float = 90.0
    attachment_radius: float = 50.0
    pivot_radius: float = 30.0
    slider_datum: float = 140.0

    def __post_init__(self):
        if self.mode not in ("linear", "linkage"):
            raise ValueError(f"unknown root-angle map mode {self.mode!r}")

    def _closure(self, alpha, height):
        ax = self.pivot_radius + self.attachment_radius * np.sin(alpha)
        az = -self.attachment_radius * np.cos(alpha)
        return np.hypot(ax, az - height) - self.support_rod_length

    def linkage_angle(self, slider_s, lo=1e-6, hi=math.pi - 1e-6):
        """Solve the closure by bisection to 1e-10 rad; vectorised over ``slider_s``."""
        h = np.asarray(slider_s, dtype=float) - self.slider_datum
        lo = np.full(h.shape, lo)
        hi = np.full(h.shape, hi)
        f_lo = self._closure(lo, h)
        f_hi = self._closure(hi, h)
        if np.any(np.sign(f_lo) == np.sign(f_hi)):
            raise Unassemblable("support-rod closure has no solution at some slider position")
        while np.max(hi - lo) > 1e-10:
            mid = 0.5 * (lo + hi)
            f_mid = self._closure(mid, h)
            same = np.sign(f_mid) == np.sign(f_lo)
            lo = np.where(same, mid, lo)
            f_lo = np.where(same, f_mid, f_lo)
            hi = np.where(same, hi, mid)
        return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class RobotConfig:
    mechanism_left: MechanismGeometry = mech.PRESETS["2.0:1"]
    mechanism_right: MechanismGeometry = mech.PRESETS["2.0:1"]
    arm_model: ArmModel = field(default_factory=build_arm)
    env: FluidEnvironment = FluidEnvironment()
    body_mass: float = 1.5
    root_angle_open: float = 75.0
    root_angle_closed: float = 15.0
    motor_profile_left: MotorProfile = MotorProfile.constant(33.0)
    motor_profile_right: MotorProfile = MotorProfile.constant(33.0)
    mode: str = "vertical"
    chassis_radius: float = 95.0
    body_inertia: float | None = None  # kg*m^2; solid-disc estimate when None
    root_map: RootAngleMap = RootAngleMap()
    torque_limit: float = 500.0  # N*mm, diagnostic flag only

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.root_angle_open > self.root_angle_closed:
            raise ValueError("root_angle_open must exceed root_angle_closed")
        if not self.body_mass > 0:
            raise ValueError("body_mass must be positive")
        if not self.chassis_radius > 0:
            raise ValueError("chassis_radius must be positive")

    @property
    def rotational_inertia(self) -> float:
        """Body inertia about the depth axis in kg*m^2 (disc about a diameter)."""
        if self.body_inertia is not None:
            return self.body_inertia
        return 0.25 * self.body_mass * (self.chassis_radius * MM) ** 2

    def mechanism(self, group: int) -> MechanismGeometry:
        return (self.mechanism_left, self.mechanism_right)[group]

    def motor_profile(self, group: int) -> MotorProfile:
        return (self.motor_profile_left, self.motor_profile_right)[group]


def root_angle_map(geom: MechanismGeometry, slider_s, config: RobotConfig | None = None):
    """Root angle (rad) for slider position ``slider_s`` (mm)."""
    cfg = config if config is not None else RobotConfig()
    s = np.asarray(slider_s, dtype=float)
    if cfg.root_map.mode == "linkage":
        out = cfg.root_map.linkage_angle(s)
    else:
        lo, hi = math.radians(cfg.root_angle_closed), math.radians(cfg.root_angle_open)
        out = lo + (hi - lo) * (s - geom.s_min) / geom.stroke
    return float(out) if out.ndim == 0 else out


def root_angle_slope(geom: MechanismGeometry, slider_s, config: RobotConfig | None = None):
    """d(root angle)/ds in rad/mm."""
    cfg = config if config is not None else RobotConfig()
    s = np.asarray(slider_s, dtype=float)
    if cfg.root_map.mode == "linkage":
        h = 1e-4
        out = (cfg.root_map.linkage_angle(s + h) - cfg.root_map.linkage_angle(s - h)) / (2 * h)
    else:
        out = np.full(s.shape, math.radians(cfg.root_angle_open - cfg.root_angle_closed) / geom.stroke)
    return float(out) if out.ndim == 0 else out


def root_drive(config: RobotConfig, group: int, t):
    """Root angle (rad), root rate (rad/s), crank revolutions and slider
    position for one group at times ``t``."""
    geom = config.mechanism(group)
    prof = config.motor_profile(group)
    rev = prof.revolutions(t)
    phi = mech.crank_angle(geom, rev)
    s = mech.slider_position(geom, phi)
    omega = 2.0 * np.pi * prof.rpm_at(t) / 60.0
    s_dot = mech.slider_velocity(geom, phi, omega)
    alpha = root_angle_map(geom, s, config)
    alpha_dot = root_angle_slope(geom, s, config) * s_dot
    return alpha, alpha_dot, rev, s


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled simulation output.  Group axis order is (left, right)."""

    time: np.ndarray  # s
    position: np.ndarray  # (n, 3) mm, world x, y, z
    velocity: np.ndarray  # mm/s along the body axis
    body_velocity: np.ndarray  # (n, 3) mm/s world
    heading: np.ndarray  # rad
    root_angle: np.ndarray  # (n, 2) rad
    crank_revolutions: np.ndarray  # (n, 2) since power-stroke start
    slider: np.ndarray  # (n, 2) mm
    power_phase: np.ndarray  # (n, 2) bool, True = power stroke
    joint_angles: np.ndarray  # (n, 2, n_joints)
    root_moment: np.ndarray  # (n, 2) N*mm supplied to each arm at its root
    sample_interval: float
    mode: str

    def phase_labels(self, group: int) -> list[str]:
        return ["power" if p else "recovery" for p in self.power_phase[:, group]]

    @property
    def swim_position(self) -> np.ndarray:
        """Displacement along the swim direction (world z) in mm."""
        return self.position[:, 2]


@njit(cache=True)
def _run(mode, n_steps, dt, sample_every, alpha, alphad,
         N, I, k_open, k_close, c, kn, kt, ell,
         group_cos, count, mount_r, mass, inertia, k_body, k_rot,
         q, qd,
         pos_out, vel_out, head_out, q_out, moment_out):
    n = q.shape[1]
    q_new = np.empty(n)
    qd_new = np.empty(n)
    forces = np.empty((n, 2))
    mids = np.empty((n, 2))
    moments = np.zeros(2)
    x = 0.0
    z = 0.0
    vx = 0.0
    vz = 0.0
    h = 0.0
    w = 0.0
    sample = 0
    for k in range(n_steps + 1):
        if k % sample_every == 0:
            pos_out[sample, 0] = x
            pos_out[sample, 1] = z
            vel_out[sample, 0] = vx
            vel_out[sample, 1] = vz
            head_out[sample] = h
            for g in range(2):
                moment_out[sample, g] = moments[g]
                for j in range(n):
                    q_out[sample, g, j] = q[g, j]
            sample += 1
        if k == n_steps:
            break

        sh = math.sin(h)
        ch = math.cos(h)
        v_ax = -vx * sh + vz * ch
        v_lat = vx * ch + vz * sh
        f_lat = 0.0
        f_ax = 0.0
        torque = 0.0
        for g in range(2):
            cg = group_cos[g] / count
            # water relative to the body: -(v + w x p), averaged over the group's azimuths
            moments[g] = chain_step(alpha[g, k], alphad[g, k], alphad[g, k + 1], q[g], qd[g],
                                    -v_lat * cg, -v_ax, w * cg, -w * cg, mount_r, dt,
                                    N, I, k_open, k_close, c, kn, kt, ell,
                                    q_new, qd_new, forces, mids)
            fr = 0.0
            fz = 0.0
            tg = 0.0
            for j in range(n):
                if not (abs(q_new[j]) < math.pi and math.isfinite(qd_new[j])):
                    return k + 1
                q[g, j] = q_new[j]
                qd[g, j] = qd_new[j]
                fr += forces[j, 0]
                fz += forces[j, 1]
                tg += (mount_r + mids[j, 0]) * forces[j, 1] - mids[j, 1] * forces[j, 0]
            f_lat += group_cos[g] * fr
            f_ax += count * fz
            torque += group_cos[g] * tg

        if mode == 1:
            vz += dt * (f_ax - k_body * abs(vz) * vz) / mass
            z += dt * vz
        elif mode == 2:
            speed = math.sqrt(vx * vx + vz * vz)
            fx = f_lat * ch - f_ax * sh - k_body * speed * vx
            fz_w = f_lat * sh + f_ax * ch - k_body * speed * vz
            vx += dt * fx / mass
            vz += dt * fz_w / mass
            w += dt * (torque - k_rot * abs(w) * w) / inertia
            x += dt * vx
            z += dt * vz
            h += dt * w
    return 0


def _step_count(duration, dt, sample_interval):
    if not (duration > 0 and dt > 0 and sample_interval > 0):
        raise ValueError("duration, dt and sample_interval must be positive")
    if dt > MAX_DT:
        raise ValueError(f"dt must not exceed {MAX_DT} s")
    n_steps = int(round(duration / dt))
    every = int(round(sample_interval / dt))
    if every < 1 or abs(every * dt - sample_interval) > 1e-9 * sample_interval:
        raise ValueError("sample_interval must be a whole multiple of dt")
    return n_steps, every


def simulate(config: RobotConfig, duration: float, dt: float = 1e-4, sample_interval: float = 0.01) -> TimeSeries:
    """Run the coupled robot model and return sampled rows every ``sample_interval``.

    Arms start straight and at rest at the open root angle of their group's
    starting crank position (power-stroke start, slider at s_max).
    """
    n_steps, every = _step_count(duration, dt, sample_interval)
    t = dt * np.arange(n_steps + 1)
    alpha = np.empty((2, n_steps + 1))
    alphad = np.empty((2, n_steps + 1))
    for g in range(2):
        alpha[g], alphad[g], _, _ = root_drive(config, g, t)

    model = config.arm_model
    env = config.env
    kn, kt = drag_coefficients(env, model.segment_diameter, model.segment_length)
    from .arm import ChainDynamics

    dyn = ChainDynamics(model, env)
    n = model.n_joints
    n_samples = n_steps // every + 1
    pos = np.zeros((n_samples, 2))
    vel = np.zeros((n_samples, 2))
    head = np.zeros(n_samples)
    q_s = np.zeros((n_samples, 2, n))
    mom = np.zeros((n_samples, 2))
    q = np.zeros((2, n))
    qd = np.zeros((2, n))
    k_body = 0.5 * env.density * env.cd_body * env.body_frontal_area
    k_rot = 0.5 * env.density * env.cd_body * 8.0 * (0.5 * env.body_frontal_diameter * MM) ** 5 / 15.0
    mode = MODES.index(config.mode) + 1 if config.mode != "clamped" else 0
    fail = _run(
        mode, n_steps, dt, every, alpha, alphad,
        dyn.N, dyn.I, dyn.k_open, dyn.k_close, dyn.c, kn, kt, dyn.ell,
        np.array([-GROUP_COS, GROUP_COS]), float(ARMS_PER_GROUP), config.chassis_radius * MM,
        config.body_mass, config.rotational_inertia, k_body, k_rot,
        q, qd, pos, vel, head, q_s, mom,
    )
    if fail:
        raise Unstable(f"arm integration diverged at t={fail * dt:.6g} s", time=fail * dt)

    ts = t[::every]
    root = np.empty((n_samples, 2))
    revs = np.empty((n_samples, 2))
    slider = np.empty((n_samples, 2))
    power = np.empty((n_samples, 2), dtype=bool)
    for g in range(2):
        root[:, g] = alpha[g, ::every]
        _, _, revs[:, g], slider[:, g] = root_drive(config, g, ts)
        power[:, g] = mech.is_power_stroke(config.mechanism(g), revs[:, g])

    position = np.zeros((n_samples, 3))
    body_velocity = np.zeros((n_samples, 3))
    position[:, 0] = pos[:, 0] / MM
    position[:, 2] = pos[:, 1] / MM
    body_velocity[:, 0] = vel[:, 0] / MM
    body_velocity[:, 2] = vel[:, 1] / MM
    axial = -body_velocity[:, 0] * np.sin(head) + body_velocity[:, 2] * np.cos(head)
    return TimeSeries(
        time=ts,
        position=position,
        velocity=axial,
        body_velocity=body_velocity,
        heading=head,
        root_angle=root,
        crank_revolutions=revs,
        slider=slider,
        power_phase=power,
        joint_angles=q_s,
        root_moment=mom / MM,
        sample_interval=every * dt,
        mode=config.mode,
    )


def simulate_steering(config: RobotConfig, duration: float, dt: float = 1e-4, sample_interval: float = 0.01) -> TimeSeries:
    """Planar run with independent left/right motor profiles.

    Sign convention of the result (documented, not imposed): x > 0 is the
    right-group side; see the README for which way a faster group turns.
    """
    if config.mode != "planar":
        raise ValueError("steering simulation requires planar mode")
    return simulate(config, duration, dt, sample_interval)


def simulate_single_arm(
    arm_model: ArmModel,
    mechanism: MechanismGeometry,
    rpm: float,
    duration: float,
    dt: float = 1e-4,
    sample_interval: float = 0.005,
    env: FluidEnvironment = FluidEnvironment(),
    **config_overrides,
) -> TimeSeries:
    """Bench test: one arm driven by one mechanism with the body held fixed."""
    cfg = RobotConfig(
        mechanism_left=mechanism,
        mechanism_right=mechanism,
        arm_model=arm_model,
        env=env,
        motor_profile_left=MotorProfile.constant(rpm),
        motor_profile_right=MotorProfile.constant(rpm),
        mode="clamped",
        **config_overrides,
    )
    return simulate(cfg, duration, dt, sample_interval)


@dataclass(frozen=True)
class TorqueEstimate:
    time: np.ndarray
    torque: np.ndarray  # (n, 2) N*mm, (left, right)
    limit: float

    @property
    def peak(self) -> np.ndarray:
        return np.max(np.abs(self.torque), axis=0)

    @property
    def over_limit(self) -> np.ndarray:
        return self.peak > self.limit


def motor_torque_estimate(config: RobotConfig, series: TimeSeries) -> TorqueEstimate:
    """Crank torque (N*mm) each motor must deliver to drive its group.

    Massless, frictionless linkage: the motor power balances the power the
    four connecting rods put into their arms, T = 4 M_root d(alpha)/d(phi)
    with phi advancing in the running direction.
    """
    torque = np.empty_like(series.root_moment)
    for g in range(2):
        geom = config.mechanism(g)
        phi = mech.crank_angle(geom, series.crank_revolutions[:, g])
        dalpha_dphi = root_angle_slope(geom, series.slider[:, g], config) * mech.slider_rate(geom, phi) * mech.CRANK_DIRECTION
        torque[:, g] = ARMS_PER_GROUP * series.root_moment[:, g] * dalpha_dphi
    return TorqueEstimate(series.time, torque, config.torque_limit)


def group_loads(config: RobotConfig, group_forces, group_midpoints):
    """Explicit eight-arm assembly of the body load.

    ``group_forces`` / ``group_midpoints`` hold, per group (left, right), the
    representative arm's water-on-segment forces (N) and midpoints (mm) in
    its (radial, axial) plane.  Returns body-frame (force N, torque N*mm)
    from :func:`hydro.net_thrust`, with 3D axes (lateral x, depth y, axial z).
    """
    from .hydro import net_thrust

    arm_on_water = []
    points = []
    for g, azimuths in ((0, LEFT_AZIMUTHS_DEG), (1, RIGHT_AZIMUTHS_DEG)):
        f = np.asarray(group_forces[g], dtype=float)
        m = np.asarray(group_midpoints[g], dtype=float)
        for a in azimuths:
            ca, sa = math.cos(math.radians(a)), math.sin(math.radians(a))
            radial = config.chassis_radius + m[:, 0]
            points.append(np.column_stack([radial * ca, radial * sa, m[:, 1]]))
            arm_on_water.append(-np.column_stack([f[:, 0] * ca, f[:, 0] * sa, f[:, 1]]))
    return net_thrust(np.concatenate(arm_on_water), np.concatenate(points))

"""Pseudo-rigid-body model of a tapered silicone arm with incision-controlled
asymmetric bending stiffness.

The arm is a chain of ``n_segments`` rigid frusta.  Joint ``i`` sits at arc
station ``i * L / n`` and couples segment ``i`` to its proximal neighbour;
joint 0 couples the first segment to the driven connecting rod.  Each arm
bends in its own plane, described by coordinates (radial, axial): radial
points away from the body axis and axial points up along the body axis.
Angles are measured from the downward axial direction, so a straight arm at
root angle 0 hangs to (0, -L).

Joint angles are relative.  A positive angle bends the arm toward its cut
side, pressing the silicone protrusions together; that direction carries the
full-section (closing) stiffness.  A negative angle opens the incisions and
sees the reduced (opening) stiffness.  Opening is the direction in which the
arm lags when the root swings outward during recovery.

Interface units are mm, N, N*mm and seconds; the integrator works in SI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from . import hydro
from .errors import GeometryError, Unstable
from .hydro import FluidEnvironment, drag_coefficients, quadratic_drag_2d

MM = 1e-3


@dataclass(frozen=True)
class ArmGeometry:
    length: float = 300.0
    base_diameter: float = 30.0
    tip_diameter: float = 10.0
    incision_depth_fraction: float = 0.0
    n_segments: int = 10

    def __post_init__(self):
        if not self.length > 0:
            raise GeometryError("arm length must be positive")
        if not self.base_diameter > self.tip_diameter > 0:
            raise GeometryError("arm must taper: base_diameter > tip_diameter > 0")
        if not 0.0 <= self.incision_depth_fraction < 1.0:
            raise GeometryError("incision_depth_fraction must lie in [0, 1)")
        if int(self.n_segments) != self.n_segments or self.n_segments < 2:
            raise GeometryError("n_segments must be an integer >= 2")

    def diameter_at(self, s):
        """Linear taper D(s) in mm for arc station ``s`` (mm from the root)."""
        return self.base_diameter + (self.tip_diameter - self.base_diameter) * np.asarray(s) / self.length


@dataclass(frozen=True)
class ArmMaterial:
    youngs_modulus: float = 0.6e6
    density: float = 1080.0
    joint_damping_ratio: float = 0.3

    def __post_init__(self):
        for name in ("youngs_modulus", "density", "joint_damping_ratio"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


def asymmetry_factor(incision_depth_fraction: float) -> float:
    """Opening/closing stiffness ratio left by a cut of the given relative depth."""
    return (1.0 - incision_depth_fraction) ** 3


@dataclass(frozen=True, eq=False)
class ArmModel:
    """Lumped parameters of one arm.  Immutable once built."""

    geometry: ArmGeometry
    material: ArmMaterial
    segment_length: float  # mm
    joint_stations: np.ndarray  # mm
    segment_mass: np.ndarray  # kg
    segment_diameter: np.ndarray  # mm, at segment midpoints
    segment_inertia: np.ndarray  # kg*mm^2 about the segment centroid
    stiffness_closing: np.ndarray  # N*mm/rad
    stiffness_opening: np.ndarray  # N*mm/rad
    damping: np.ndarray  # N*mm*s/rad

    @property
    def n_joints(self) -> int:
        return len(self.joint_stations)

    def with_incision(self, depth: float) -> "ArmModel":
        return build_arm(replace(self.geometry, incision_depth_fraction=depth), self.material)


def build_arm(geometry: ArmGeometry = ArmGeometry(), material: ArmMaterial = ArmMaterial()) -> ArmModel:
    n = int(geometry.n_segments)
    ell = geometry.length / n
    stations = ell * np.arange(n)
    d0 = geometry.diameter_at(stations)
    d1 = geometry.diameter_at(stations + ell)
    d_mid = 0.5 * (d0 + d1)

    # frustum volume, mm^3 -> m^3
    volume = math.pi * ell / 12.0 * (d0 * d0 + d0 * d1 + d1 * d1) * MM**3
    mass = material.density * volume
    # centroidal transverse inertia of a cylinder of the mean diameter
    inertia = mass * (ell * ell / 12.0 + d_mid * d_mid / 16.0)

    second_moment = math.pi * d0**4 / 64.0  # mm^4
    # E [N/m^2 = 1e-6 N/mm^2] * I [mm^4] / l [mm] -> N*mm/rad
    k_close = material.youngs_modulus * 1e-6 * second_moment / ell
    k_open = k_close * asymmetry_factor(geometry.incision_depth_fraction)

    # inertia of the distal segment about its own joint, kg*mm^2
    joint_inertia = inertia + mass * (0.5 * ell) ** 2
    # sqrt(N*mm * kg*mm^2) = sqrt(1e-3 N*m * 1e-6 kg*m^2) -> N*m*s, scale to N*mm*s
    damping = 2.0 * material.joint_damping_ratio * np.sqrt(k_close * 1e-3 * joint_inertia * 1e-6) * 1e3

    for arr in (mass, inertia, k_close, k_open, damping):
        arr.setflags(write=False)
    stations.setflags(write=False)
    d_mid.setflags(write=False)
    return ArmModel(
        geometry=geometry,
        material=material,
        segment_length=ell,
        joint_stations=stations,
        segment_mass=mass,
        segment_diameter=d_mid,
        segment_inertia=inertia,
        stiffness_closing=k_close,
        stiffness_opening=k_open,
        damping=damping,
    )


def joint_torque(model: ArmModel, joint: int, angle: float, rate: float) -> float:
    """Elastic plus viscous torque (N*mm) at ``joint``; angle in rad, rate in rad/s."""
    if not 0 <= joint < model.n_joints:
        raise IndexError(f"joint index {joint} out of range for {model.n_joints} joints")
    k = model.stiffness_opening[joint] if angle < 0 else model.stiffness_closing[joint]
    return float(-k * angle - model.damping[joint] * rate)


@dataclass(frozen=True, eq=False)
class ArmState:
    root_angle: float
    joint_angles: np.ndarray
    joint_rates: np.ndarray
    time: float = 0.0
    root_rate: float = 0.0

    @classmethod
    def rest(cls, model: ArmModel, root_angle: float = 0.0, time: float = 0.0) -> "ArmState":
        z = np.zeros(model.n_joints)
        return cls(root_angle, z, z.copy(), time, 0.0)


@dataclass
class StepOutput:
    """Per-step by-products of the chain integrator, batched over arms.

    ``forces`` are water-on-segment loads (N) at segment midpoints
    ``midpoints`` (m), both in the arm-plane (radial, axial) frame, and
    ``root_moment`` is the torque (N*m) the connecting rod must supply to
    the arm about the root pivot.
    """

    forces: np.ndarray
    midpoints: np.ndarray
    root_moment: np.ndarray


class ChainDynamics:
    """Batched semi-implicit integrator for a set of identical arms.

    Stiffness and joint damping are treated implicitly (linearly implicit
    Euler with the bilinear branch chosen from the end-of-step angle); mass
    matrix, gyroscopic terms, drag and root acceleration are explicit.
    """

    def __init__(self, model: ArmModel, env: FluidEnvironment | None = None):
        self.model = model
        self.env = env if env is not None else FluidEnvironment()
        n = model.n_joints
        self.n = n
        self.ell = model.segment_length * MM
        mass = np.array(model.segment_mass, dtype=float)
        if self.env.added_mass_coefficient > 0:
            d = model.segment_diameter * MM
            mass = mass + self.env.added_mass_coefficient * self.env.density * math.pi * d * d / 4 * self.ell
        self.mass = mass
        a = np.tril(np.full((n, n), self.ell), -1) + np.diag(np.full(n, 0.5 * self.ell))
        self.N = a.T @ (mass[:, None] * a)
        self.I = np.array(model.segment_inertia) * MM**2
        self.k_close = np.array(model.stiffness_closing) * MM
        self.k_open = np.array(model.stiffness_opening) * MM
        self.c = np.array(model.damping) * MM
        self.diam = np.array(model.segment_diameter)
        self.seg_len_mm = model.segment_length
        self.kn, self.kt = drag_coefficients(self.env, self.diam, self.seg_len_mm)
        self._eye = np.eye(n)

    # -- kinematics -------------------------------------------------------
    def kinematics(self, root_angle, root_rate, q, qd):
        """Absolute angles/rates, segment axes and midpoint positions/velocities (SI)."""
        beta = root_angle[:, None] + np.cumsum(q, axis=1)
        betad = root_rate[:, None] + np.cumsum(qd, axis=1)
        s, c = np.sin(beta), np.cos(beta)
        u = np.stack([s, -c], axis=-1)
        up = np.stack([c, s], axis=-1)
        step = self.ell * u
        joints = np.cumsum(step, axis=1) - step
        mids = joints + 0.5 * step
        dstep = self.ell * up * betad[..., None]
        jvel = np.cumsum(dstep, axis=1) - dstep
        mvel = jvel + 0.5 * dstep
        return beta, betad, s, c, u, up, mids, mvel

    def mass_matrix_beta(self, s, c):
        cc = c[:, :, None] * c[:, None, :] + s[:, :, None] * s[:, None, :]
        return self.N[None] * cc + self.I[None, :, None] * self._eye[None]

    @staticmethod
    def _revcumsum(x, axis):
        return np.flip(np.cumsum(np.flip(x, axis=axis), axis=axis), axis=axis)

    def reduced_mass_matrix(self, root_angle, q):
        beta = root_angle[:, None] + np.cumsum(q, axis=1)
        m_beta = self.mass_matrix_beta(np.sin(beta), np.cos(beta))
        return self._revcumsum(self._revcumsum(m_beta, 1), 2)

    # -- one step ---------------------------------------------------------
    def step(self, root_angle, root_rate, new_root_angle, new_root_rate, q, qd, flow, dt, rotation=None):
        """Advance ``B`` arms by ``dt``.

        Root quantities are arrays of shape (B,), joint arrays (B, n) and
        ``flow`` (B, 2) is the water velocity relative to the body in m/s.
        ``rotation`` (B, 3) optionally adds a flow that varies along the arm,
        (rot_r * z, rot_z * (mount + r)) at a point (r, z) from the root, as
        produced by body rotation.  Returns (q_new, qd_new, StepOutput).
        """
        nb = q.shape[0]
        rot = np.zeros((nb, 3)) if rotation is None else np.asarray(rotation, dtype=float)
        q_new = np.empty_like(q, dtype=float)
        qd_new = np.empty_like(q_new)
        forces = np.empty((nb, self.n, 2))
        mids = np.empty((nb, self.n, 2))
        moment = np.empty(nb)
        for b in range(nb):
            moment[b] = chain_step(
                root_angle[b], root_rate[b], new_root_rate[b], q[b], qd[b], flow[b, 0], flow[b, 1],
                rot[b, 0], rot[b, 1], rot[b, 2], dt, self.N, self.I, self.k_open, self.k_close, self.c, self.kn, self.kt, self.ell,
                q_new[b], qd_new[b], forces[b], mids[b],
            )
        return q_new, qd_new, StepOutput(forces, mids, moment)

    def step_reference(self, root_angle, root_rate, new_root_angle, new_root_rate, q, qd, flow, dt, rotation=None):
        """Pure-numpy twin of :meth:`step`, kept as a cross-check."""
        beta, betad, s, c, u, up, mids, mvel = self.kinematics(root_angle, root_rate, q, qd)
        local = np.broadcast_to(flow[:, None, :], mids.shape).copy()
        if rotation is not None:
            rot = np.asarray(rotation, dtype=float)
            local[..., 0] += rot[:, 0, None] * mids[..., 1]
            local[..., 1] += rot[:, 1, None] * (rot[:, 2, None] + mids[..., 0])
        rel = mvel - local
        forces = hydro.segment_drag(self.env, rel / MM, u, self.diam, self.seg_len_mm)

        # generalised drag forces on the absolute angles
        f_after = self._revcumsum(forces, 1) - forces
        q_beta = self.ell * np.sum(up * (f_after + 0.5 * forces), axis=-1)

        w = betad * betad
        h = s * ((c * w) @ self.N.T) - c * ((s * w) @ self.N.T)

        m_beta = self.mass_matrix_beta(s, c)
        root_acc = (new_root_rate - root_rate) / dt
        rhs_beta = q_beta - h - m_beta.sum(axis=2) * root_acc[:, None]

        f = self._revcumsum(rhs_beta, 1)
        m_q = self._revcumsum(self._revcumsum(m_beta, 1), 2)

        k = np.where(q < 0, self.k_open, self.k_close)
        for _ in range(3):
            a = m_q + (dt * self.c + dt * dt * k)[:, :, None] * self._eye[None]
            rhs = np.einsum("bij,bj->bi", m_q, qd) + dt * (f - k * q)
            qd_new = np.linalg.solve(a, rhs[..., None])[..., 0]
            q_new = q + dt * qd_new
            k_new = np.where(q_new < 0, self.k_open, self.k_close)
            if np.array_equal(k_new, k):
                break
            k = k_new

        root_moment = -k[:, 0] * q_new[:, 0] - self.c[0] * qd_new[:, 0]
        return q_new, qd_new, StepOutput(forces, mids, root_moment)


@njit(cache=True)
def chain_step(alpha, alphad, alphad_new, q, qd, flow_r, flow_z, rot_r, rot_z, mount, dt,
               N, I, k_open, k_close, c, kn, kt, ell,
               q_out, qd_out, force_out, mid_out):
    """One arm, one step; writes the new joint state, the water-on-segment
    forces and the segment midpoints into the ``*_out`` arrays and returns
    the root moment.  SI units throughout; see :class:`ChainDynamics`."""
    n = q.shape[0]
    s = np.empty(n)
    co = np.empty(n)
    bd = np.empty(n)
    acc_b = alpha
    acc_bd = alphad
    for j in range(n):
        acc_b += q[j]
        acc_bd += qd[j]
        s[j] = math.sin(acc_b)
        co[j] = math.cos(acc_b)
        bd[j] = acc_bd

    # midpoint positions/velocities and drag
    px = 0.0
    pz = 0.0
    vx = 0.0
    vz = 0.0
    for j in range(n):
        ux = s[j]
        uz = -co[j]
        dvx = ell * co[j] * bd[j]
        dvz = ell * s[j] * bd[j]
        mx = px + 0.5 * ell * ux
        mz = pz + 0.5 * ell * uz
        mid_out[j, 0] = mx
        mid_out[j, 1] = mz
        wr = flow_r + rot_r * mz
        wz = flow_z + rot_z * (mount + mx)
        fx, fz = quadratic_drag_2d(vx + 0.5 * dvx - wr, vz + 0.5 * dvz - wz, ux, uz, kn[j], kt[j])
        force_out[j, 0] = fx
        force_out[j, 1] = fz
        px += ell * ux
        pz += ell * uz
        vx += dvx
        vz += dvz

    # right-hand side in absolute-angle coordinates
    rhs_b = np.empty(n)
    after_x = 0.0
    after_z = 0.0
    root_acc = (alphad_new - alphad) / dt
    for k in range(n - 1, -1, -1):
        fx = force_out[k, 0]
        fz = force_out[k, 1]
        qb = ell * (co[k] * (after_x + 0.5 * fx) + s[k] * (after_z + 0.5 * fz))
        after_x += fx
        after_z += fz
        h = 0.0
        mrow = I[k]
        for l in range(n):
            cd = co[k] * co[l] + s[k] * s[l]
            sd = s[k] * co[l] - co[k] * s[l]
            h += N[k, l] * sd * bd[l] * bd[l]
            mrow += N[k, l] * cd
        rhs_b[k] = qb - h - mrow * root_acc

    # reduced mass matrix C^T M C via reverse cumulative sums
    mq = np.empty((n, n))
    for k in range(n):
        for l in range(n):
            mq[k, l] = N[k, l] * (co[k] * co[l] + s[k] * s[l])
        mq[k, k] += I[k]
    for k in range(n - 2, -1, -1):
        for l in range(n):
            mq[k, l] += mq[k + 1, l]
    for l in range(n - 2, -1, -1):
        for k in range(n):
            mq[k, l] += mq[k, l + 1]
    f = np.empty(n)
    acc = 0.0
    for k in range(n - 1, -1, -1):
        acc += rhs_b[k]
        f[k] = acc

    kk = np.empty(n)
    for j in range(n):
        kk[j] = k_open[j] if q[j] < 0.0 else k_close[j]
    a = np.empty((n, n))
    rhs = np.empty(n)
    for _ in range(3):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                a[i, j] = mq[i, j]
                acc += mq[i, j] * qd[j]
            a[i, i] += dt * c[i] + dt * dt * kk[i]
            rhs[i] = acc + dt * (f[i] - kk[i] * q[i])
        # Cholesky solve, a is symmetric positive definite
        for j in range(n):
            d = a[j, j]
            for p in range(j):
                d -= a[j, p] * a[j, p]
            d = math.sqrt(d)
            a[j, j] = d
            for i in range(j + 1, n):
                v = a[i, j]
                for p in range(j):
                    v -= a[i, p] * a[j, p]
                a[i, j] = v / d
        for i in range(n):
            v = rhs[i]
            for p in range(i):
                v -= a[i, p] * rhs[p]
            rhs[i] = v / a[i, i]
        for i in range(n - 1, -1, -1):
            v = rhs[i]
            for p in range(i + 1, n):
                v -= a[p, i] * rhs[p]
            rhs[i] = v / a[i, i]
        changed = False
        for j in range(n):
            qd_out[j] = rhs[j]
            q_out[j] = q[j] + dt * rhs[j]
            kn_j = k_open[j] if q_out[j] < 0.0 else k_close[j]
            if kn_j != kk[j]:
                changed = True
                kk[j] = kn_j
        if not changed:
            break
    return -kk[0] * q_out[0] - c[0] * qd_out[0]


MAX_DT = 1e-3


def _check_state(q, qd, t):
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
        raise Unstable(f"non-finite arm state at t={t:.6g} s", time=t)
    if np.any(np.abs(q) >= math.pi):
        raise Unstable(f"joint angle reached pi at t={t:.6g} s", time=t)


def step_arm(
    model: ArmModel,
    state: ArmState,
    root_drive: tuple[float, float],
    ambient_flow=(0.0, 0.0),
    dt: float = 1e-4,
    env: FluidEnvironment | None = None,
    dynamics: ChainDynamics | None = None,
) -> ArmState:
    """Advance one arm by ``dt`` seconds.

    ``root_drive`` is the (angle rad, rate rad/s) imposed on the root at the
    end of the step; ``ambient_flow`` is the water velocity relative to the
    body frame in mm/s (radial, axial), i.e. minus the body velocity.
    """
    if not 0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}] s")
    dyn = dynamics if dynamics is not None else ChainDynamics(model, env)
    q = np.asarray(state.joint_angles, dtype=float)[None]
    qd = np.asarray(state.joint_rates, dtype=float)[None]
    flow = np.asarray(ambient_flow, dtype=float)[None] * MM
    q_new, qd_new, _ = dyn.step(
        np.array([state.root_angle]),
        np.array([state.root_rate]),
        np.array([root_drive[0]]),
        np.array([root_drive[1]]),
        q,
        qd,
        flow,
        dt,
    )
    t = state.time + dt
    _check_state(q_new, qd_new, t)
    return ArmState(float(root_drive[0]), q_new[0], qd_new[0], t, float(root_drive[1]))


def midline(model: ArmModel, state: ArmState) -> np.ndarray:
    """Joint-station polyline, shape (n_segments + 1, 2), in mm.

    Points are (radial, axial) relative to the root mount.
    """
    beta = state.root_angle + np.cumsum(state.joint_angles)
    step = model.segment_length * np.column_stack([np.sin(beta), -np.cos(beta)])
    return np.vstack([np.zeros(2), np.cumsum(step, axis=0)])


def midlines(model: ArmModel, root_angles, joint_angles) -> np.ndarray:
    """Vectorised :func:`midline` over frames; returns (frames, n + 1, 2)."""
    root_angles = np.asarray(root_angles, dtype=float)
    beta = root_angles[:, None] + np.cumsum(joint_angles, axis=1)
    step = model.segment_length * np.stack([np.sin(beta), -np.cos(beta)], axis=-1)
    pts = np.cumsum(step, axis=1)
    return np.concatenate([np.zeros((len(root_angles), 1, 2)), pts], axis=1)


def elastic_energy(model: ArmModel, joint_angles) -> float:
    """Stored bending energy in J."""
    q = np.asarray(joint_angles, dtype=float)
    k = np.where(q < 0, model.stiffness_opening, model.stiffness_closing) * MM
    return float(0.5 * np.sum(k * q * q))


def kinetic_energy(model: ArmModel, state: ArmState, env: FluidEnvironment | None = None) -> float:
    """Kinetic energy in J of the chain (root rate included)."""
    dyn = ChainDynamics(model, env)
    beta = state.root_angle + np.cumsum(state.joint_angles)
    betad = state.root_rate + np.cumsum(state.joint_rates)
    m_beta = dyn.mass_matrix_beta(np.sin(beta)[None], np.cos(beta)[None])[0]
    return float(0.5 * betad @ m_beta @ betad)


def arm_energy(model: ArmModel, state: ArmState, env: FluidEnvironment | None = None) -> float:
    return kinetic_energy(model, state, env) + elastic_energy(model, state.joint_angles)


def static_deflection(model: ArmModel, tip_load: float, root_angle: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Quasi-static equilibrium under a tip force (N) perpendicular to the
    undeformed arm, positive in the direction of increasing angle.

    Returns (joint_angles, tip_displacement_mm); the load keeps its
    direction while the arm deflects.
    """
    from scipy.optimize import fsolve

    n = model.n_joints
    load = tip_load * np.array([math.cos(root_angle), math.sin(root_angle)])

    def residual(q):
        pts = midline(model, ArmState(root_angle, q, np.zeros(n)))
        lever = pts[-1] - pts[:-1]  # joint -> tip, mm
        moment = lever[:, 0] * load[1] - lever[:, 1] * load[0]  # N*mm about each joint
        k = np.where(q < 0, model.stiffness_opening, model.stiffness_closing)
        return moment - k * q

    # linear guess: moment of the undeformed lever
    k0 = model.stiffness_opening if tip_load < 0 else model.stiffness_closing
    guess = tip_load * (model.geometry.length - model.joint_stations) / k0
    q = fsolve(residual, guess, xtol=1e-13)
    tip0 = midline(model, ArmState.rest(model, root_angle))[-1]
    tip = midline(model, ArmState(root_angle, q, np.zeros(n)))[-1]
    return q, tip - tip0

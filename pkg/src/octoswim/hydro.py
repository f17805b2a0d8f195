"""Quasi-steady quadratic drag on arm segments and on the robot head.

Lengths are mm and velocities mm/s at the interface; forces come back in N
and torques in N*mm.  Every function broadcasts over leading array axes so
the arm integrator can evaluate all segments of all arms in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MM = 1e-3


@dataclass(frozen=True)
class FluidEnvironment:
    """Water properties and drag coefficients.

    ``added_mass_coefficient`` scales the displaced-water mass lumped onto
    each arm segment (0 disables added mass).
    """

    density: float = 1000.0
    cd_normal: float = 1.2
    ct_tangential: float = 0.01
    cd_body: float = 1.0
    body_frontal_diameter: float = 190.0
    added_mass_coefficient: float = 0.0

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError("fluid density must be positive")
        for name in ("cd_normal", "ct_tangential", "cd_body", "added_mass_coefficient"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.body_frontal_diameter > 0:
            raise ValueError("body_frontal_diameter must be positive")

    @property
    def body_frontal_area(self) -> float:
        """Frontal area of the head in m^2."""
        return math.pi * (0.5 * self.body_frontal_diameter * MM) ** 2


def segment_drag(env: FluidEnvironment, velocity, axis, diameter, length):
    """Drag force (N) on cylindrical segments moving at ``velocity`` (mm/s).

    ``axis`` must be unit vectors along the segment.  The normal part uses
    the projected area D*l and the tangential part the wetted area pi*D*l.
    """
    v = np.asarray(velocity, dtype=float) * MM
    t = np.asarray(axis, dtype=float)
    d = np.asarray(diameter, dtype=float) * MM
    ell = np.asarray(length, dtype=float) * MM

    vt_mag = np.sum(v * t, axis=-1)
    vt = vt_mag[..., None] * t
    vn = v - vt
    vn_mag = np.sqrt(np.sum(vn * vn, axis=-1))

    kn = 0.5 * env.density * env.cd_normal * d * ell
    kt = 0.5 * env.density * env.ct_tangential * math.pi * d * ell
    return -(kn * vn_mag)[..., None] * vn - (kt * np.abs(vt_mag))[..., None] * vt


def body_drag(env: FluidEnvironment, body_velocity):
    """Bluff-body drag (N) on the head moving at ``body_velocity`` (mm/s)."""
    v = np.asarray(body_velocity, dtype=float) * MM
    k = 0.5 * env.density * env.cd_body * env.body_frontal_area
    if v.ndim == 0:
        return -k * abs(v) * v
    speed = np.sqrt(np.sum(v * v, axis=-1))
    return -(k * speed)[..., None] * v


def body_rotational_drag(env: FluidEnvironment, yaw_rate):
    """Drag torque (N*mm) on the head disc rotating about a diameter.

    Integrates the quadratic pressure drag of each disc element moving at
    ``yaw_rate * |x|``: torque = -1/2 rho Cd (8 R^5 / 15) |w| w.
    """
    r = 0.5 * env.body_frontal_diameter * MM
    k = 0.5 * env.density * env.cd_body * 8.0 * r**5 / 15.0
    return -k * abs(yaw_rate) * yaw_rate / MM


def net_thrust(arm_forces, positions=None):
    """Force (N) and torque (N*mm) on the body from arm-on-water forces.

    ``arm_forces`` are the forces the arm segments exert on the water, shape
    (..., dim) with dim 2 or 3, expressed in the body frame; ``positions``
    (mm, same shape) are their application points relative to the body
    centre.  The body receives the reaction, so thrust = -sum(F) and torque
    = -sum(r x F).  In 2D the torque is the scalar out-of-plane component.
    """
    f = np.asarray(arm_forces, dtype=float)
    if f.size == 0:
        dim = f.shape[-1] if f.ndim >= 1 and f.shape[-1] in (2, 3) else 3
        return np.zeros(dim), (0.0 if dim == 2 else np.zeros(3))
    f = f.reshape(-1, f.shape[-1])
    thrust = -f.sum(axis=0)
    if positions is None:
        torque = 0.0 if f.shape[-1] == 2 else np.zeros(3)
        return thrust, torque
    r = np.asarray(positions, dtype=float).reshape(f.shape)
    if f.shape[-1] == 2:
        torque = -float(np.sum(r[:, 0] * f[:, 1] - r[:, 1] * f[:, 0]))
    else:
        torque = -np.cross(r, f).sum(axis=0)
    return thrust, torque


@njit(cache=True)
def quadratic_drag_2d(vx, vy, tx, ty, kn, kt):
    """Scalar kernel of :func:`segment_drag` in SI for one planar segment.

    ``kn`` and ``kt`` are the lumped normal and tangential coefficients
    1/2 rho Cd D l and 1/2 rho Ct pi D l.
    """
    vt = vx * tx + vy * ty
    nx = vx - vt * tx
    ny = vy - vt * ty
    vn = math.sqrt(nx * nx + ny * ny)
    avt = abs(vt)
    return -kn * vn * nx - kt * avt * vt * tx, -kn * vn * ny - kt * avt * vt * ty


def drag_coefficients(env: FluidEnvironment, diameter, length):
    """Lumped (normal, tangential) coefficients in kg/m for segments of
    ``diameter`` and ``length`` in mm."""
    d = np.asarray(diameter, dtype=float) * MM
    ell = np.asarray(length, dtype=float) * MM
    kn = 0.5 * env.density * env.cd_normal * d * ell
    kt = 0.5 * env.density * env.ct_tangential * math.pi * d * ell
    return kn * np.ones_like(d), kt * np.ones_like(d)

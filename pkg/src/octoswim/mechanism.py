"""Offset crank-slider quick-return mechanism.

Coordinates: the crank pivot O sits at the origin and the slider rail runs
parallel to the x-axis at perpendicular distance ``e``.  The slider
coordinate ``s`` is measured along the rail from the foot of the
perpendicular through O.  Crank angles are radians measured from the rail
direction; the angles carried by :class:`StrokeCharacteristics` are degrees.

The motor turns the crank clockwise (decreasing crank angle).  With this
sense of rotation the slow crank arc, 180 + theta degrees, drives the slider
from ``s_min`` to ``s_max`` (arms opening, the recovery stroke) and the quick
arc, 180 - theta degrees, drives it back (arms closing, the power stroke).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InvalidTarget, NoSolution

#: Sign of dphi/dt for a running motor.
CRANK_DIRECTION = -1.0

_BRACKET_EPS = 1e-9
_BRACKET_SCALE = 100.0


@dataclass(frozen=True)
class MechanismGeometry:
    """Crank length ``crank_a``, coupler length ``coupler_b`` and rail offset
    ``offset_e``, all in mm."""

    crank_a: float
    coupler_b: float
    offset_e: float

    def __post_init__(self):
        a, b, e = self.crank_a, self.coupler_b, self.offset_e
        if not all(math.isfinite(v) for v in (a, b, e)):
            raise GeometryError(f"non-finite linkage dimensions {(a, b, e)}")
        if a <= 0 or b <= 0:
            raise GeometryError("crank and coupler lengths must be positive")
        if e < 0:
            raise GeometryError("offset must be non-negative")
        if b < a + e:
            raise GeometryError(
                f"linkage is not fully rotatable: coupler_b={b} < crank_a + offset_e={a + e}"
            )

    @property
    def s_max(self) -> float:
        a, b, e = self.crank_a, self.coupler_b, self.offset_e
        return math.sqrt((a + b) ** 2 - e**2)

    @property
    def s_min(self) -> float:
        a, b, e = self.crank_a, self.coupler_b, self.offset_e
        return math.sqrt((b - a) ** 2 - e**2)

    @property
    def stroke(self) -> float:
        return self.s_max - self.s_min

    @property
    def rotatability_margin(self) -> float:
        """``b - (a + e)`` in mm; zero at the edge of full rotatability."""
        return self.coupler_b - self.crank_a - self.offset_e

    @property
    def phi_extended(self) -> float:
        """Crank angle (rad) with crank and coupler extended-collinear (s = s_max)."""
        return math.asin(self.offset_e / (self.crank_a + self.coupler_b))

    @property
    def phi_folded(self) -> float:
        """Crank angle (rad) with crank and coupler folded-collinear (s = s_min)."""
        return math.pi + math.asin(self.offset_e / (self.coupler_b - self.crank_a))


@dataclass(frozen=True)
class StrokeCharacteristics:
    """Polar angle, extreme-position angles, travel ratio and crank arcs.

    Angles in degrees.  ``phi_push`` is the slow (recovery) arc and
    ``phi_return`` the quick (power) arc.
    """

    theta: float
    theta1: float
    theta2: float
    travel_ratio_K: float
    phi_push: float
    phi_return: float

    @property
    def recovery_fraction(self) -> float:
        """Fraction of one crank revolution spent in the recovery stroke."""
        return self.phi_push / 360.0

    @property
    def power_fraction(self) -> float:
        return self.phi_return / 360.0


@dataclass(frozen=True)
class CrankState:
    angle_phi: float
    angular_speed: float

    def advanced(self, dt: float) -> "CrankState":
        phi = (self.angle_phi + CRANK_DIRECTION * self.angular_speed * dt) % (2 * math.pi)
        return CrankState(phi, self.angular_speed)


def slider_position(geom: MechanismGeometry, phi):
    """Slider coordinate s(phi) in mm; ``phi`` in radians (scalar or array)."""
    a, b, e = geom.crank_a, geom.coupler_b, geom.offset_e
    h = a * np.sin(phi) - e
    # clip guards the tangent case b - a == e where the radicand touches 0
    return a * np.cos(phi) + np.sqrt(np.maximum(b * b - h * h, 0.0))


def slider_rate(geom: MechanismGeometry, phi):
    """ds/dphi in mm/rad."""
    a, b, e = geom.crank_a, geom.coupler_b, geom.offset_e
    sphi = np.sin(phi)
    cphi = np.cos(phi)
    h = a * sphi - e
    root = np.sqrt(np.maximum(b * b - h * h, 0.0))
    return -a * sphi - h * a * cphi / root


def slider_velocity(geom: MechanismGeometry, phi, angular_speed):
    """Slider velocity ds/dt in mm/s.

    ``angular_speed`` is the motor speed in rad/s (positive for a running
    motor); the crank turns in the mechanism's running direction, so the
    result is negative during the power stroke and positive during recovery.
    """
    return slider_rate(geom, phi) * (CRANK_DIRECTION * angular_speed)


def stroke_characteristics(geom: MechanismGeometry) -> StrokeCharacteristics:
    a, b, e = geom.crank_a, geom.coupler_b, geom.offset_e
    theta1 = math.degrees(math.asin(e / (a + b)))
    theta2 = math.degrees(math.asin(min(e / (b - a), 1.0)))
    theta = abs(theta2 - theta1)
    return StrokeCharacteristics(
        theta=theta,
        theta1=theta1,
        theta2=theta2,
        travel_ratio_K=(180.0 + theta) / (180.0 - theta),
        phi_push=180.0 + theta,
        phi_return=180.0 - theta,
    )


def travel_ratio_from_polar_angle(theta: float) -> float:
    """K for a polar angle ``theta`` in degrees."""
    return (180.0 + theta) / (180.0 - theta)


def polar_angle_from_K(K: float) -> float:
    """Polar angle (degrees) that yields travel ratio ``K``."""
    if not K >= 1.0:
        raise InvalidTarget(f"travel ratio must be >= 1 (slow:fast), got {K}")
    return 180.0 * (K - 1.0) / (K + 1.0)


def _polar_angle_deg(a: float, b: float, e: float) -> float:
    return math.degrees(math.asin(min(e / (b - a), 1.0)) - math.asin(e / (a + b)))


def synthesize_linkage(target_K: float, offset_e: float, crank_a: float) -> MechanismGeometry:
    """Coupler length that realises ``target_K`` for a given crank and offset.

    The polar angle falls strictly as the coupler lengthens, so the coupler
    is found by bisection on ``[a + e + 1e-9, 100 (a + e)]``.
    """
    if not target_K > 1.0:
        raise InvalidTarget(f"target travel ratio must exceed 1, got {target_K}")
    if not offset_e > 0.0:
        raise InvalidTarget("an offset e > 0 is required for a quick-return linkage")
    if not crank_a > 0.0:
        raise InvalidTarget("crank length must be positive")

    a, e = crank_a, offset_e
    lo = a + e + _BRACKET_EPS
    hi = _BRACKET_SCALE * (a + e)
    target = polar_angle_from_K(target_K)

    grid = np.linspace(lo, hi, 65)
    thetas = np.array([_polar_angle_deg(a, b, e) for b in grid])
    if not np.all(np.diff(thetas) < 0):
        raise RuntimeError("polar angle is not monotone over the synthesis bracket")

    k_range = (travel_ratio_from_polar_angle(thetas[-1]), travel_ratio_from_polar_angle(thetas[0]))
    if not thetas[-1] <= target <= thetas[0]:
        raise NoSolution(
            f"K={target_K} is unreachable with a={a}, e={e}; "
            f"achievable K range is [{k_range[0]:.6g}, {k_range[1]:.6g}]",
            k_range=k_range,
        )

    # run to float resolution; the 1e-10 mm tolerance alone does not pin K
    # near the lower bracket end where dtheta/db is unbounded
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _polar_angle_deg(a, mid, e) > target:
            lo = mid
        else:
            hi = mid
    b = lo if abs(_polar_angle_deg(a, lo, e) - target) <= abs(_polar_angle_deg(a, hi, e) - target) else hi
    return MechanismGeometry(a, b, e)


def stroke_timing(geom: MechanismGeometry, rpm: float) -> tuple[float, float, float]:
    """(t_recovery, t_power, period) in seconds at constant motor speed."""
    if not rpm > 0:
        raise ValueError("rpm must be positive")
    sc = stroke_characteristics(geom)
    period = 60.0 / rpm
    return period * sc.phi_push / 360.0, period * sc.phi_return / 360.0, period


def crank_angle(geom: MechanismGeometry, revolutions):
    """Crank angle (rad, wrapped to [0, 2pi)) after ``revolutions`` turns
    counted from the start of a power stroke (slider at ``s_max``)."""
    return np.mod(geom.phi_extended + CRANK_DIRECTION * 2.0 * np.pi * np.asarray(revolutions), 2.0 * np.pi)


def is_power_stroke(geom: MechanismGeometry, revolutions):
    """True where the crank, ``revolutions`` turns past power start, is on the quick arc."""
    frac = np.mod(revolutions, 1.0)
    return frac < stroke_characteristics(geom).power_fraction


#: Dimensions reported for the three built mechanisms (a, b, e) in mm, keyed
#: by their nominal recovery:power label.
PRESETS = {
    "2.0:1": MechanismGeometry(25.0, 66.0, 40.0),
    "1.6:1": MechanismGeometry(25.0, 69.4, 40.0),
    "1.2:1": MechanismGeometry(19.5, 83.0, 40.0),
}

NOMINAL_K = {"2.0:1": 2.0, "1.6:1": 1.6, "1.2:1": 1.2}

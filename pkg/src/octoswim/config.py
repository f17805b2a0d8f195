"""Scenario configuration: INI files with a fixed schema.

Every section and key is optional; omitted values take the defaults below.
Unknown sections or keys are rejected.  :func:`dump_config` writes the full
effective configuration, which :func:`load_config` reads back to an equal
:class:`ScenarioConfig`.

Schema (section: keys)::

    scenario:      kind, duration, dt, sample_interval, out_dir
    mechanism_left / mechanism_right:  crank_a, coupler_b, offset_e
    arm:           length, base_diameter, tip_diameter,
                   incision_depth_fraction, n_segments
    material:      youngs_modulus, density, joint_damping_ratio
    fluid:         density, cd_normal, ct_tangential, cd_body,
                   body_frontal_diameter, added_mass_coefficient
    body:          mass, root_angle_open, root_angle_closed, mode,
                   chassis_radius, inertia, torque_limit
    root_map:      mode, support_rod_length, attachment_radius,
                   pivot_radius, slider_datum
    motor_left / motor_right:  times, rpms   (comma-separated lists)
    design:        target_K, offset_e, crank_a
    bench:         rpm, cycles
    recurve:       distal_fraction, proximal_fraction,
                   early_recovery_fraction, kappa_min
    sweep:         presets, depths, rpms   (comma-separated lists)
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .analysis import RecurveWindow
from .arm import ArmGeometry, ArmMaterial, build_arm
from .errors import ConfigError
from .hydro import FluidEnvironment
from .mechanism import PRESETS, MechanismGeometry
from .vehicle import MODES, MotorProfile, RobotConfig, RootAngleMap

KINDS = ("design", "mech", "arm", "swim", "steer", "sweep")


@dataclass(frozen=True)
class BodyParams:
    mass: float = 1.5
    root_angle_open: float = 75.0
    root_angle_closed: float = 15.0
    mode: str = "vertical"
    chassis_radius: float = 95.0
    inertia: float | None = None
    torque_limit: float = 500.0


@dataclass(frozen=True)
class DesignParams:
    target_K: float = 2.0
    offset_e: float = 40.0
    crank_a: float = 25.0


@dataclass(frozen=True)
class BenchParams:
    """Single-arm bench test (body clamped)."""

    rpm: float = 48.0
    cycles: int = 4


@dataclass(frozen=True)
class SweepParams:
    presets: tuple = ("2.0:1", "1.6:1", "1.2:1")
    depths: tuple = (0.0, 0.2, 0.4, 0.7)
    rpms: tuple = (33.0,)


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "swim"
    duration: float = 11.0
    dt: float = 1e-4
    sample_interval: float = 0.01
    out_dir: str = "out"
    mechanism_left: MechanismGeometry = PRESETS["2.0:1"]
    mechanism_right: MechanismGeometry = PRESETS["2.0:1"]
    arm: ArmGeometry = ArmGeometry(incision_depth_fraction=0.7)
    material: ArmMaterial = ArmMaterial()
    fluid: FluidEnvironment = FluidEnvironment()
    body: BodyParams = BodyParams()
    root_map: RootAngleMap = RootAngleMap()
    motor_left: MotorProfile = MotorProfile.constant(33.0)
    motor_right: MotorProfile = MotorProfile.constant(33.0)
    design: DesignParams = DesignParams()
    bench: BenchParams = BenchParams()
    recurve: RecurveWindow = RecurveWindow()
    sweep: SweepParams = SweepParams()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"scenario kind must be one of {KINDS}, got {self.kind!r}")
        if self.body.mode not in MODES[:2]:
            raise ConfigError(f"body mode must be 'vertical' or 'planar', got {self.body.mode!r}")
        for name in ("duration", "dt", "sample_interval"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def robot(self, **overrides) -> RobotConfig:
        b = self.body
        cfg = RobotConfig(
            mechanism_left=self.mechanism_left,
            mechanism_right=self.mechanism_right,
            arm_model=build_arm(self.arm, self.material),
            env=self.fluid,
            body_mass=b.mass,
            root_angle_open=b.root_angle_open,
            root_angle_closed=b.root_angle_closed,
            motor_profile_left=self.motor_left,
            motor_profile_right=self.motor_right,
            mode=b.mode,
            chassis_radius=b.chassis_radius,
            body_inertia=b.inertia,
            root_map=self.root_map,
            torque_limit=b.torque_limit,
        )
        return replace(cfg, **overrides) if overrides else cfg


_SECTIONS = {
    "mechanism_left": MechanismGeometry,
    "mechanism_right": MechanismGeometry,
    "arm": ArmGeometry,
    "material": ArmMaterial,
    "fluid": FluidEnvironment,
    "body": BodyParams,
    "root_map": RootAngleMap,
    "motor_left": MotorProfile,
    "motor_right": MotorProfile,
    "design": DesignParams,
    "bench": BenchParams,
    "recurve": RecurveWindow,
    "sweep": SweepParams,
}
_SCENARIO_KEYS = ("kind", "duration", "dt", "sample_interval", "out_dir")
_LIST_FIELDS = {("motor_left", "times"), ("motor_left", "rpms"), ("motor_right", "times"), ("motor_right", "rpms"),
                ("sweep", "presets"), ("sweep", "depths"), ("sweep", "rpms")}
_STR_FIELDS = {"kind", "out_dir", "mode", "presets"}
_INT_FIELDS = {"n_segments", "cycles"}


def _parse_value(section, key, text):
    text = text.strip()
    try:
        if (section, key) in _LIST_FIELDS:
            items = [t.strip() for t in text.split(",") if t.strip()]
            if key == "presets":
                for p in items:
                    if p not in PRESETS:
                        raise ConfigError(f"unknown preset {p!r}; choose from {list(PRESETS)}")
                return tuple(items)
            return tuple(float(t) for t in items)
        if key in _STR_FIELDS:
            return text
        if key in _INT_FIELDS:
            return int(text)
        if key == "inertia" and text.lower() == "none":
            return None
        return float(text)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r}") from exc


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str  # keys are case-sensitive (target_K)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    base = ScenarioConfig()
    top = {}
    parts = {}
    for section in parser.sections():
        if section == "scenario":
            for key, raw in parser.items(section):
                if key not in _SCENARIO_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [scenario]")
                top[key] = _parse_value(section, key, raw)
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        cls = _SECTIONS[section]
        allowed = {f.name for f in fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _parse_value(section, key, raw)
        try:
            parts[section] = replace(getattr(base, section), **values)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc
    try:
        return replace(base, **top, **parts)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: ScenarioConfig) -> str:
    """Full effective configuration as INI text (LF line endings)."""
    out = io.StringIO()
    out.write("[scenario]\n")
    for key in _SCENARIO_KEYS:
        out.write(f"{key} = {_format_value(getattr(cfg, key))}\n")
    for section in _SECTIONS:
        out.write(f"\n[{section}]\n")
        obj = getattr(cfg, section)
        for f in fields(obj):
            out.write(f"{f.name} = {_format_value(getattr(obj, f.name))}\n")
    return out.getvalue()

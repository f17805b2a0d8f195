"""Simulator for a soft-armed swimming robot driven by quick-return crank-slider linkages."""
from .analysis import (
    CurvatureProfile,
    CycleMetrics,
    RecurveWindow,
    curvature_profile,
    cycle_metrics,
    detect_recurve,
    max_curvature_trace,
    recurve_statistics,
    steady_state,
)
from .arm import ArmGeometry, ArmMaterial, ArmModel, ArmState, build_arm, joint_torque, midline, step_arm
from .config import ScenarioConfig, dump_config, load_config, parse_config
from .errors import (
    ConfigError,
    DegenerateGeometry,
    GeometryError,
    InvalidTarget,
    NoSolution,
    OctoswimError,
    SeriesTooShort,
    Unassemblable,
    Unstable,
)
from .hydro import FluidEnvironment, body_drag, net_thrust, segment_drag
from .mechanism import (
    PRESETS,
    MechanismGeometry,
    StrokeCharacteristics,
    polar_angle_from_K,
    slider_position,
    slider_velocity,
    stroke_characteristics,
    stroke_timing,
    synthesize_linkage,
    travel_ratio_from_polar_angle,
)
from .vehicle import (
    MotorProfile,
    RobotConfig,
    RootAngleMap,
    TimeSeries,
    motor_torque_estimate,
    root_angle_map,
    simulate,
    simulate_single_arm,
    simulate_steering,
)

__version__ = "0.1.0"

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from octoswim import mechanism as mech
from octoswim.arm import ChainDynamics, build_arm, ArmGeometry
from octoswim.errors import Unassemblable
from octoswim.hydro import FluidEnvironment
from octoswim.vehicle import (
    ARMS_PER_GROUP,
    GROUP_COS,
    MotorProfile,
    RobotConfig,
    RootAngleMap,
    group_loads,
    motor_torque_estimate,
    root_angle_map,
    root_angle_slope,
    simulate,
    simulate_steering,
)

K18 = mech.PRESETS["2.0:1"]
DEEP_ARM = build_arm(ArmGeometry(incision_depth_fraction=0.7))
PERIOD = 60.0 / 33.0


@pytest.fixture(scope="module")
def swim():
    cfg = RobotConfig(arm_model=DEEP_ARM)
    return cfg, simulate(cfg, 6 * PERIOD, sample_interval=0.002)


# -- slider to root angle -------------------------------------------------

def test_linear_map_endpoints_and_midpoint():
    g = K18
    assert math.degrees(root_angle_map(g, g.s_min)) == pytest.approx(15.0, abs=1e-12)
    assert math.degrees(root_angle_map(g, g.s_max)) == pytest.approx(75.0, abs=1e-12)
    assert math.degrees(root_angle_map(g, 0.5 * (g.s_min + g.s_max))) == pytest.approx(45.0, abs=1e-12)


@pytest.mark.parametrize("label", list(mech.PRESETS))
def test_linkage_map_assembles_and_is_monotone(label):
    g = mech.PRESETS[label]
    cfg = RobotConfig(root_map=RootAngleMap(mode="linkage"))
    s = np.linspace(g.s_min, g.s_max, 500)
    a = root_angle_map(g, s, cfg)
    assert np.all(np.diff(a) > 0)
    assert np.all((a > 0) & (a < math.pi / 2))


def test_linkage_closure_holds():
    rm = RootAngleMap(mode="linkage")
    s = np.linspace(10, 90, 17)
    a = rm.linkage_angle(s)
    h = s - rm.slider_datum
    attach = np.column_stack([rm.pivot_radius + rm.attachment_radius * np.sin(a), -rm.attachment_radius * np.cos(a)])
    slider = np.column_stack([np.zeros_like(h), h])
    np.testing.assert_allclose(np.linalg.norm(attach - slider, axis=1), rm.support_rod_length, atol=1e-8)


def test_linkage_slope_matches_secant():
    cfg = RobotConfig(root_map=RootAngleMap(mode="linkage"))
    s = np.linspace(20, 80, 7)
    h = 1e-2
    secant = (root_angle_map(K18, s + h, cfg) - root_angle_map(K18, s - h, cfg)) / (2 * h)
    np.testing.assert_allclose(root_angle_slope(K18, s, cfg), secant, rtol=1e-4)


def test_unassemblable_linkage():
    rm = RootAngleMap(mode="linkage", support_rod_length=5.0)
    with pytest.raises(Unassemblable):
        rm.linkage_angle(np.array([40.0]))
    with pytest.raises(Unassemblable):
        simulate(RobotConfig(root_map=rm), 0.01)


def test_unknown_map_mode():
    with pytest.raises(ValueError):
        RootAngleMap(mode="cam")


# -- motor profiles -------------------------------------------------------

def test_piecewise_revolutions():
    p = MotorProfile((0.0, 1.0), (60.0, 120.0))
    assert p.revolutions(0.5) == pytest.approx(0.5)
    assert p.revolutions(2.0) == pytest.approx(3.0)
    np.testing.assert_allclose(p.rpm_at([0.0, 0.99, 1.0, 5.0]), [60, 60, 120, 120])


@pytest.mark.parametrize("times,rpms", [((0.0, 1.0), (10.0,)), ((1.0,), (10.0,)), ((0.0, 0.0), (1.0, 2.0)),
                                        ((0.0,), (-1.0,)), ((0.0,), (math.inf,)), ((), ())])
def test_profile_validation(times, rpms):
    with pytest.raises(ValueError):
        MotorProfile(times, rpms)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 120), min_size=1, max_size=5), st.floats(0, 20))
def test_revolutions_match_quadrature(rpms, t_end):
    times = tuple(float(i) for i in range(len(rpms)))
    p = MotorProfile(times, tuple(rpms))
    grid = np.linspace(0, t_end, 20001)
    expected = np.trapezoid(p.rpm_at(grid) / 60.0, grid)
    # piecewise-constant integrand: trapezoid error bounded by one jump per breakpoint
    assert p.revolutions(t_end) == pytest.approx(expected, abs=len(rpms) * 2.0 * t_end / 20000 + 1e-12)


# -- simulation -----------------------------------------------------------

def test_time_step_limits():
    with pytest.raises(ValueError):
        simulate(RobotConfig(), 0.1, dt=2e-3)
    with pytest.raises(ValueError):
        simulate(RobotConfig(), 0.1, dt=1e-4, sample_interval=0.00015)
    with pytest.raises(ValueError):
        simulate(RobotConfig(), -1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        RobotConfig(mode="orbit")
    with pytest.raises(ValueError):
        RobotConfig(root_angle_open=10, root_angle_closed=20)
    with pytest.raises(ValueError):
        RobotConfig(body_mass=0)
    with pytest.raises(ValueError):
        simulate_steering(RobotConfig(), 0.1)


def test_zero_rpm_stays_put():
    still = MotorProfile.constant(0.0)
    cfg = RobotConfig(motor_profile_left=still, motor_profile_right=still, mode="planar")
    s = simulate(cfg, 1.0)
    assert np.all(s.position == 0)
    assert np.all(s.joint_angles == 0)
    assert np.all(motor_torque_estimate(cfg, s).torque == 0)


def test_dry_water_no_displacement():
    dry = FluidEnvironment(cd_normal=0.0, ct_tangential=0.0, cd_body=0.0)
    cfg = RobotConfig(env=dry, arm_model=DEEP_ARM)
    s = simulate(cfg, 2 * PERIOD)
    assert np.max(np.abs(s.position)) <= 1e-6


def test_deterministic():
    cfg = RobotConfig(mode="planar", motor_profile_right=MotorProfile.constant(25.0))
    a = simulate(cfg, 1.0)
    b = simulate(cfg, 1.0)
    for name in ("position", "velocity", "heading", "joint_angles", "root_moment"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_forward_progress_and_periodicity(swim):
    _, s = swim
    z = s.swim_position
    assert z[-1] > 0
    # per-cycle displacement settles after the first cycle
    ends = np.interp(PERIOD * np.arange(1, 7), s.time, z)
    per_cycle = np.diff(ends)
    assert np.all(per_cycle > 0)
    assert np.ptp(per_cycle[1:]) <= 0.02 * np.mean(per_cycle[1:])
    # the velocity trace repeats with the crank period
    t = s.time[(s.time >= 2 * PERIOD) & (s.time <= 4 * PERIOD)]
    v1 = np.interp(t, s.time, s.velocity)
    v2 = np.interp(t + PERIOD, s.time, s.velocity)
    assert np.max(np.abs(v2 - v1)) <= 0.02 * np.max(np.abs(v1))


def test_phase_labels_follow_slider_direction(swim):
    _, s = swim
    ds = np.diff(s.slider[:, 0])
    labels = np.array(s.phase_labels(0))
    # label of the interval start: power means the slider falls (arms close)
    same = s.power_phase[:-1, 0] == s.power_phase[1:, 0]
    assert np.all((ds[same & s.power_phase[:-1, 0]] < 0))
    assert np.all((ds[same & ~s.power_phase[:-1, 0]] > 0))
    assert set(labels) == {"power", "recovery"}


def test_peak_speed_follows_power_stroke(swim):
    cfg, s = swim
    power = mech.stroke_characteristics(cfg.mechanism_left).power_fraction
    for c in range(1, 6):
        sel = (s.time >= c * PERIOD) & (s.time < (c + 1) * PERIOD)
        frac = s.crank_revolutions[sel, 0] % 1.0
        v = s.velocity[sel]
        # bent arms keep pushing briefly while they spring back after the stroke
        assert frac[np.argmax(v)] < power + 0.05
        assert v[np.argmax(frac >= power)] > v[0]


def test_vertical_groups_identical(swim):
    _, s = swim
    assert np.array_equal(s.joint_angles[:, 0], s.joint_angles[:, 1])
    assert np.all(s.position[:, :2] == 0)
    assert np.all(s.heading == 0)


# -- planar and steering --------------------------------------------------

def test_planar_equal_profiles_straight():
    cfg = RobotConfig(mode="planar", arm_model=DEEP_ARM)
    s = simulate(cfg, 5.0)
    assert np.max(np.abs(s.position[:, 0])) <= 1e-6
    assert np.max(np.abs(s.heading)) <= 1e-6
    vertical = simulate(replace(cfg, mode="vertical"), 5.0)
    np.testing.assert_allclose(s.swim_position, vertical.swim_position, atol=1e-9)


def test_mirror_swap():
    fast, slow = MotorProfile.constant(33.0), MotorProfile.constant(20.0)
    a = simulate(RobotConfig(mode="planar", motor_profile_left=fast, motor_profile_right=slow,
                             mechanism_left=mech.PRESETS["1.2:1"]), 4.0)
    b = simulate(RobotConfig(mode="planar", motor_profile_left=slow, motor_profile_right=fast,
                             mechanism_right=mech.PRESETS["1.2:1"]), 4.0)
    np.testing.assert_allclose(b.position[:, 0], -a.position[:, 0], atol=1e-9)
    np.testing.assert_allclose(b.position[:, 2], a.position[:, 2], atol=1e-9)
    np.testing.assert_allclose(b.heading, -a.heading, atol=1e-12)


def test_one_sided_drive_turns_away_from_driven_side():
    cfg = RobotConfig(mode="planar", motor_profile_right=MotorProfile.constant(0.0))
    s = simulate_steering(cfg, 4.0)
    assert s.heading[-1] < 0
    assert s.position[-1, 0] > 0
    assert s.swim_position[-1] > 0


# -- loads and torque -----------------------------------------------------

def _stepped_forces(seed):
    rng = np.random.default_rng(seed)
    dyn = ChainDynamics(DEEP_ARM)
    n = dyn.n
    q = rng.normal(scale=0.2, size=(2, n))
    qd = rng.normal(scale=1.0, size=(2, n))
    root = rng.uniform(0.3, 1.2, 2)
    rate = rng.normal(scale=2.0, size=2)
    flow = rng.normal(scale=0.1, size=(2, 2))
    _, _, out = dyn.step(root, rate, root, rate, q, qd, flow, 1e-4)
    return out


@pytest.mark.parametrize("seed", range(5))
def test_group_loads_match_reduced_totals(seed):
    out = _stepped_forces(seed)
    cfg = RobotConfig()
    mids_mm = out.midpoints * 1e3
    force, torque = group_loads(cfg, out.forces, mids_mm)
    cos = (-GROUP_COS, GROUP_COS)
    f_lat = sum(cos[g] * out.forces[g, :, 0].sum() for g in range(2))
    f_ax = ARMS_PER_GROUP * out.forces[:, :, 1].sum()
    tq = sum(cos[g] * np.sum((cfg.chassis_radius + mids_mm[g, :, 0]) * out.forces[g, :, 1]
                             - mids_mm[g, :, 1] * out.forces[g, :, 0]) for g in range(2))
    np.testing.assert_allclose(force, [f_lat, 0.0, f_ax], atol=1e-12)
    assert torque[1] == pytest.approx(-tq, abs=1e-9)


def test_torque_matches_static_force_analysis(swim):
    cfg, s = swim
    est = motor_torque_estimate(cfg, s)
    g = cfg.mechanism_left
    a, b, e = g.crank_a, g.coupler_b, g.offset_e
    phi = math.asin(e / (a + b)) - 2 * math.pi * s.crank_revolutions[:, 0]
    pin = np.column_stack([a * np.cos(phi), a * np.sin(phi)])
    block = np.column_stack([s.slider[:, 0], np.full(len(phi), e)])
    np.testing.assert_allclose(np.linalg.norm(block - pin, axis=1), b, rtol=1e-12)
    u = (block - pin) / b
    # slider force that powers four arms through a linear map, carried by the coupler
    slider_force = ARMS_PER_GROUP * s.root_moment[:, 0] * math.radians(75 - 15) / g.stroke
    rod = slider_force / u[:, 0]
    crank_moment = rod * (pin[:, 0] * u[:, 1] - pin[:, 1] * u[:, 0])
    np.testing.assert_allclose(est.torque[:, 0], mech.CRANK_DIRECTION * crank_moment,
                               rtol=1e-9, atol=1e-9 * np.max(np.abs(crank_moment)))
    assert np.max(np.abs(crank_moment)) > 1.0


def test_torque_limit_flag(swim):
    cfg, s = swim
    est = motor_torque_estimate(replace(cfg, torque_limit=1.0), s)
    assert np.all(est.over_limit)
    assert not np.any(motor_torque_estimate(cfg, s).over_limit)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pitchtrack.aero import AeroTables, default_aero_tables
from pitchtrack.dynamics import (ControlCommand, FlightModel, ForcesMoments, NumericalDivergence,
                                 RigidBodyState, aero_forces, eom_derivative, rotation_matrix,
                                 step_rk4)
from pitchtrack.environment import EnvSample, WindModel, sample_atmosphere
from pitchtrack.vehicle import VehicleModel, initial_mass_state, mass_flow_rate, mass_properties

VM = VehicleModel()
MS = initial_mass_state(VM)
G = 9.80665
angles = st.floats(-10.0, 10.0)


def no_aero():
    return ForcesMoments((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_rotation_matrix_examples():
    np.testing.assert_array_equal(rotation_matrix(0.0), np.eye(2))
    np.testing.assert_allclose(rotation_matrix(math.pi / 2), [[0, 1], [-1, 0]], atol=1e-16)


@given(angles, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_rotation_orthogonal_and_round_trip(theta, a, b):
    R = rotation_matrix(theta)
    np.testing.assert_allclose(R.T @ R, np.eye(2), atol=1e-14)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-14)
    v = np.array([a, b])
    np.testing.assert_allclose(R.T @ (R @ v), v, atol=1e-13 * max(1.0, abs(a), abs(b)))


def _env(rho=1.225, wind=(0.0, 0.0)):
    return EnvSample(G, 101325.0, rho, 340.3, wind)


def test_vacuum_has_no_aero_loads():
    fm = aero_forces(RigidBodyState(xdot_mps=300.0, zdot_mps=20.0), _env(rho=0.0), default_aero_tables(),
                     VM, MS)
    assert fm.f_a_b == (0.0, 0.0) and fm.f_a_i == (0.0, 0.0) and fm.tau_a_Nm == 0.0


def test_zero_relative_velocity_pins_alpha_to_zero():
    fm = aero_forces(RigidBodyState(zdot_mps=5.0), _env(wind=(0.0, 5.0)), default_aero_tables(), VM, MS)
    assert fm.alpha_rad == 0.0 and fm.qbar_Pa == 0.0 and fm.f_a_b == (0.0, 0.0)


def test_axial_flow_drag_only():
    fm = aero_forces(RigidBodyState(xdot_mps=100.0), _env(), default_aero_tables(), VM, MS)
    assert fm.alpha_rad == 0.0
    assert fm.f_a_b[1] == pytest.approx(0.0, abs=1e-12)
    assert fm.tau_a_Nm == pytest.approx(0.0, abs=1e-12)
    assert fm.f_a_b[0] < 0


def test_axial_force_hand_value():
    at = AeroTables.from_arrays([0.0], [0.0], [[0.0]], [[0.3]], [[2.0]])
    fm = aero_forces(RigidBodyState(xdot_mps=100.0), _env(), at, VM, MS)
    assert fm.qbar_Pa == pytest.approx(6125.0)
    assert fm.f_a_b[0] == pytest.approx(-360.9, rel=1e-3)


@given(angles, st.floats(-400, 400), st.floats(-400, 400), st.floats(-30, 30), st.floats(-30, 30))
def test_aero_force_geometry(theta, vx, vz, wx, wz):
    at = default_aero_tables()
    state = RigidBodyState(xdot_mps=vx, zdot_mps=vz, theta_rad=theta)
    fm = aero_forces(state, _env(wind=(wx, wz)), at, VM, MS)
    R = rotation_matrix(theta)
    np.testing.assert_allclose(fm.f_a_i, R @ np.array(fm.f_a_b), atol=1e-9 * (1 + abs(fm.qbar_Pa)))
    v_rel_b = R.T @ np.array([vx - wx, vz - wz])
    if np.hypot(*v_rel_b) > 1e-6:
        assert fm.alpha_rad == pytest.approx(math.atan2(v_rel_b[1], v_rel_b[0]), abs=1e-12)
        assert fm.qbar_Pa == pytest.approx(0.5 * 1.225 * (v_rel_b @ v_rel_b), rel=1e-12)
        assert fm.tau_a_Nm == pytest.approx(fm.f_a_b[1] * (fm.x_cp_m - MS.x_cm_m), rel=1e-12, abs=1e-9)
        assert fm.SM == pytest.approx((fm.x_cp_m - MS.x_cm_m) / VM.max_diameter_m)
        assert fm.qbar_Pa >= 0


def test_ballistic_derivative():
    for th in (0.0, 0.3, -1.2):
        d = eom_derivative(RigidBodyState(theta_rad=th, q_radps=0.1), MS, (0.0, 0.0), no_aero(), G)
        assert d[1] == -G and d[3] == 0.0 and d[5] == 0.0 and d[4] == 0.1


def test_hover_derivative():
    d = eom_derivative(RigidBodyState(), MS, ControlCommand(MS.m_kg * G, 0.0), no_aero(), G)
    assert d[1] == pytest.approx(0.0, abs=1e-12)


def test_lateral_and_torque_channel():
    u2 = 250.0
    d = eom_derivative(RigidBodyState(), MS, (0.0, u2), no_aero(), G)
    assert d[3] == pytest.approx(u2 / MS.m_kg)
    assert d[5] == pytest.approx(u2 * MS.l_m / MS.j_y_kgm2)


@given(angles, st.floats(0, 3e4), st.floats(-3e3, 3e3))
def test_derivative_is_affine_in_input(theta, u1, u2):
    state = RigidBodyState(theta_rad=theta, xdot_mps=10.0)
    fm = no_aero()
    d0 = np.array(eom_derivative(state, MS, (0.0, 0.0), fm, G))
    c, s = math.cos(theta), math.sin(theta)
    m, j, l = MS.m_kg, MS.j_y_kgm2, MS.l_m
    B = np.array([[0, 0], [c / m, s / m], [0, 0], [-s / m, c / m], [0, 0], [0, l / j]])
    for col, du in enumerate(((1.0, 0.0), (0.0, 1.0))):
        d1 = np.array(eom_derivative(state, MS, du, fm, G))
        np.testing.assert_allclose(d1 - d0, B[:, col], atol=1e-10)
    d = np.array(eom_derivative(state, MS, (u1, u2), fm, G))
    np.testing.assert_allclose(d, d0 + B @ [u1, u2], atol=1e-10 * (1 + abs(u1) + abs(u2)))


def test_non_finite_input_is_rejected():
    with pytest.raises(NumericalDivergence):
        eom_derivative(RigidBodyState(x_m=float("nan")), MS, (0.0, 0.0), no_aero(), G)


def _integrate(model, y, u, ms, dt, t_end):
    n = int(round(t_end / dt))
    for k in range(n):
        y = model.rk4(k * dt, y, u[0], u[1], ms, dt)
    return y


def test_free_fall_velocity_exact():
    model = FlightModel(VM, default_aero_tables(), aero_enabled=False, r_earth=1e15)
    y = _integrate(model, (1000.0, 0.0, 0.0, 0.0, 0.0, 0.0), (0.0, 0.0), MS, 1e-3, 1.0)
    assert y[1] == pytest.approx(-G * 1.0, rel=1e-9)
    assert y[0] == pytest.approx(1000.0 - 0.5 * G, rel=1e-9)


def test_torque_free_rotation_is_linear_in_time():
    model = FlightModel(VM, default_aero_tables(), aero_enabled=False)
    y = _integrate(model, (1000.0, 0.0, 0.0, 0.0, 0.1, 0.37), (0.0, 0.0), MS, 1e-3, 2.0)
    assert y[4] == pytest.approx(0.1 + 0.37 * 2.0, abs=1e-12)
    assert y[5] == 0.37


def test_rk4_fourth_order_convergence():
    # powered ascent with a small gimbal so pitch and the thrust direction evolve nonlinearly
    model = FlightModel(VM, default_aero_tables(), aero_enabled=False)
    ms = MS
    u = ControlCommand(20000.0, 0.0005).u_in
    y0 = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    ref = np.array(_integrate(model, y0, u, ms, 1e-4, 10.0))
    e1 = np.abs(np.array(_integrate(model, y0, u, ms, 0.1, 10.0)) - ref).max()
    e2 = np.abs(np.array(_integrate(model, y0, u, ms, 0.05, 10.0)) - ref).max()
    assert 12.0 < e1 / e2 < 20.0


def test_energy_conserved_without_aero_and_thrust():
    model = FlightModel(VM, default_aero_tables(), aero_enabled=False)
    R = model.r_earth

    def energy(y):
        return 0.5 * (y[1] ** 2 + y[3] ** 2) - G * R**2 / (R + y[0])

    y = (1000.0, 500.0, 0.0, 100.0, 0.2, 0.0)
    e0 = energy(y)
    for dt, tol in ((0.02, 1e-6), (0.01, 1e-7)):
        y1 = _integrate(model, y, (0.0, 0.0), MS, dt, 60.0)
        assert abs(energy(y1) - e0) / abs(e0) < tol


def test_step_rk4_contract():
    wind = WindModel(seed=4)
    model = FlightModel(VM, default_aero_tables(), wind)
    state = RigidBodyState(0.0, 10.0, 20.0, 0.0, 0.0, 0.01, 0.0)
    cmd = ControlCommand(20000.0, 0.01)
    s1, m1, fm1 = step_rk4(state, MS, cmd, model, 1e-3)
    wind.reset()
    s2, m2, fm2 = step_rk4(state, MS, cmd, model, 1e-3)
    assert (s1, m1, fm1) == (s2, m2, fm2)
    assert s1.t_s == pytest.approx(1e-3)
    mdot = mass_flow_rate(cmd.T_N, sample_atmosphere(state.x_m)[0], VM)
    assert m1.propellant_kg == pytest.approx(MS.propellant_kg + mdot * 1e-3, rel=1e-14)
    assert fm1.f_p_b == cmd.u_in and fm1.tau_p_Nm == pytest.approx(cmd.u_in[1] * MS.l_m)
    s3, m3, _ = step_rk4(state, MS, cmd, FlightModel(VM, default_aero_tables(), WindModel(seed=4)),
                         1e-3, freeze_mass=True)
    assert m3 == MS and s3 == s1
    with pytest.raises(ValueError):
        step_rk4(state, MS, cmd, model, 0.0)


def test_divergence_aborts_with_snapshot():
    model = FlightModel(VM, default_aero_tables(), aero_enabled=False)
    with pytest.raises(NumericalDivergence) as info:
        model.rk4(0.0, (1000.0, 0.0, 0.0, 0.0, 0.0, 0.0), 1e308, 1e308, mass_properties(0.0, VM), 1.0)
    assert info.value.snapshot is not None


def test_command_body_force():
    cmd = ControlCommand(1000.0, 0.1)
    assert cmd.u_in == (1000.0 * math.cos(0.1), 1000.0 * math.sin(0.1))

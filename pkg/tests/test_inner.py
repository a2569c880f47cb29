import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pitchtrack.dynamics import ControlCommand, FlightModel, RigidBodyState
from pitchtrack.aero import default_aero_tables
from pitchtrack.inner import (ActuatorEnvelope, AdaptiveState, InnerGains, InnerReference,
                              SingularityError, ThrustEnvelopeError, adapt_update, adaptation_rate,
                              decoupling_matrix, extract_thrust_gimbal, inner_drift,
                              inner_feedback_linearize, inner_step, inner_virtual_input)
from pitchtrack.vehicle import VehicleModel, initial_mass_state, mass_properties

VM = VehicleModel()
G = 9.80665
GAINS = InnerGains()
ZERO_REF = InnerReference(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_virtual_input_examples():
    assert inner_virtual_input(0, 0, 0, 0, GAINS) == (0.0, 0.0)
    assert inner_virtual_input(1.0, 0.0, 0.0, 0.0, GAINS)[0] == pytest.approx(-12.25)
    assert inner_virtual_input(0.0, 0.0, 0.0, 1.0, GAINS)[1] == pytest.approx(-22.0)


def test_adaptation_examples():
    ad = AdaptiveState(3.0, -2.0)
    assert adapt_update(ad, 0, 0, 0, 0, 1000.0, 3100.0, GAINS, 0.002) == ad
    new = adapt_update(AdaptiveState(), 0.01, 0.0, 0.0, 0.0, 1000.0, 3100.0, GAINS, 0.002)
    assert new.fax_hat_N == pytest.approx(0.25, rel=1e-12)
    frozen = InnerGains(gamma_x=0.0, gamma_theta=0.0)
    assert adapt_update(ad, 1.0, 2.0, 3.0, 4.0, 1000.0, 3100.0, frozen, 0.002) == ad
    with pytest.raises(ValueError):
        adapt_update(ad, 0, 0, 0, 0, 1.0, 1.0, GAINS, 0.0)


def test_gravity_compensation_at_rest():
    ms = initial_mass_state(VM)
    u = inner_feedback_linearize(RigidBodyState(), ms, AdaptiveState(), ZERO_REF, (0.0, 0.0), G)
    assert u == pytest.approx((ms.m_kg * G, 0.0), abs=1e-9)


def test_torque_channel_hand_value():
    ms = mass_properties(0.0, VM)
    ref = InnerReference(0, 0, 0, 0, 0, 1.0)  # v2 - b2 = 1 rad/s^2
    u = inner_feedback_linearize(RigidBodyState(), ms, AdaptiveState(), ref, (0.0, 0.0), G)
    assert u[1] == pytest.approx(811.5, abs=0.05)


finite = st.floats(-50.0, 50.0)


@given(st.floats(-1.4, 1.4), finite, finite, st.floats(-2e3, 2e3), st.floats(-2e3, 2e3),
       st.floats(0.0, 650.0))
def test_inverse_round_trip(theta, v1, v2, fax, tau, prop):
    ms = mass_properties(prop, VM)
    ad = AdaptiveState(fax, tau)
    ref = InnerReference(0, 0, 3.0, 0, 0, 0.5)
    u = inner_feedback_linearize(RigidBodyState(theta_rad=theta), ms, ad, ref, (v1, v2), G)
    lam = decoupling_matrix(theta, ms.m_kg, ms.j_y_kgm2, ms.l_m)
    recon = lam @ np.array(u) + np.array(inner_drift(ms, ad, ref, G))
    np.testing.assert_allclose(recon, (v1, v2), atol=1e-10)


def test_singularity_guard():
    ms = initial_mass_state(VM)
    margin = math.radians(5.0)
    ok = RigidBodyState(theta_rad=math.pi / 2 - margin - 1e-6)
    inner_feedback_linearize(ok, ms, AdaptiveState(), ZERO_REF, (0.0, 0.0), G, margin)
    for th in (math.pi / 2 - margin, -(math.pi / 2 - margin), 2.0):
        with pytest.raises(SingularityError):
            inner_feedback_linearize(RigidBodyState(theta_rad=th), ms, AdaptiveState(), ZERO_REF,
                                     (0.0, 0.0), G, margin)


def test_decoupling_matrix_conditioning_near_horizontal():
    ms = initial_mass_state(VM)
    for th in (math.pi / 2 - 1e-6, math.pi / 2 - 1e-7, -(math.pi / 2 - 1e-6)):
        assert np.linalg.cond(decoupling_matrix(th, ms.m_kg, ms.j_y_kgm2, ms.l_m)) > 1e6
    det = np.linalg.det(decoupling_matrix(0.3, ms.m_kg, ms.j_y_kgm2, ms.l_m))
    assert det == pytest.approx(math.cos(0.3) * ms.l_m / (ms.m_kg * ms.j_y_kgm2))


def test_thrust_gimbal_examples():
    T, mu = extract_thrust_gimbal((1250.0 * G, 0.0))
    assert (T, mu) == (1250.0 * G, 0.0)
    T, mu = extract_thrust_gimbal((10000.0, 100.0))
    assert math.degrees(mu) == pytest.approx(0.573, abs=5e-4)
    assert T == pytest.approx(10000.5, abs=0.01)
    T2, mu2 = extract_thrust_gimbal((10000.0, -100.0))
    assert mu2 == -mu and T2 == T
    for u1 in (0.0, -5.0):
        with pytest.raises(ThrustEnvelopeError):
            extract_thrust_gimbal((u1, 10.0))


@given(st.floats(1e-3, 1e6), st.floats(-1.5, 1.5))
def test_thrust_gimbal_identity(T, mu):
    T2, mu2 = extract_thrust_gimbal(ControlCommand(T, mu).u_in)
    assert T2 == pytest.approx(T, rel=1e-12)
    assert mu2 == pytest.approx(mu, abs=1e-12)


@given(st.floats(1e-3, 100.0), st.floats(1e-3, 100.0))
def test_error_dynamics_hurwitz(k1, k2):
    A = np.array([[0.0, 1.0], [-(1 + k1 * k2), -(k1 + k2)]])
    assert np.all(np.linalg.eigvals(A).real < 0)


def test_characteristic_polynomials():
    assert GAINS.char_poly("x") == (1.0, 7.0, 12.25)
    assert GAINS.char_poly("theta") == (1.0, 22.0, 121.0)
    np.testing.assert_allclose(GAINS.poles("x"), [-3.5, -3.5], atol=1e-6)
    np.testing.assert_allclose(GAINS.poles("theta"), [-11.0, -11.0], atol=1e-6)
    with pytest.raises(ValueError):
        InnerGains(k1x=-1.0)


def test_zero_reference_zero_state_command_is_vertical_gravity_compensation():
    ms = initial_mass_state(VM)
    cmd, _, diag = inner_step(RigidBodyState(), ms, AdaptiveState(), ZERO_REF, GAINS, G, 0.002)
    assert cmd.T_N == pytest.approx(ms.m_kg * G) and cmd.mu_rad == 0.0
    assert diag.v_in == (0.0, 0.0)


def _closed_loop(gains, ref_fn, y0, t_end, ms, dt=1e-3, nsub=2):
    """Inner loop alone on the aero-free plant with frozen mass; returns the pitch error history."""
    model = FlightModel(VM, default_aero_tables(), aero_enabled=False, r_earth=1e15)
    ad = AdaptiveState()
    y = y0
    cmd = None
    hist = []
    for k in range(int(round(t_end / dt))):
        t = k * dt
        if k % nsub == 0:
            ref = ref_fn(t)
            state = RigidBodyState(t, *y)
            cmd, ad, diag = inner_step(state, ms, ad, ref, gains, G, nsub * dt)
            hist.append((t, diag.e_x, diag.e_theta))
        y = model.rk4(t, y, *cmd.u_in, ms, dt)
    return np.array(hist), cmd


def test_on_reference_start_stays_on_reference():
    ms = initial_mass_state(VM)

    def ref(t):
        return InnerReference(1000.0 + 5.0 * t * t, 10.0 * t, 10.0,
                              0.05 * math.sin(t), 0.05 * math.cos(t), -0.05 * math.sin(t))

    r0 = ref(0.0)
    y0 = (r0.x_d, r0.xdot_d, 0.0, 0.0, r0.theta_d, r0.thetadot_d)
    hist, _ = _closed_loop(GAINS, ref, y0, 1.0, ms)
    assert np.max(np.abs(hist[:, 2])) < 1e-6
    # zero-order hold of the thrust direction while pitch moves: a micrometre-level altitude drift
    assert np.max(np.abs(hist[:, 1])) < 1e-5
    cmd, _, _ = inner_step(RigidBodyState(0.0, *y0), ms, AdaptiveState(), r0, GAINS, G, 0.002)
    u_ff = ((ms.m_kg * (G + r0.xddot_d)), 0.0)
    assert cmd.u_in == pytest.approx(u_ff, abs=1e-9)


def test_pitch_error_decay_from_two_degrees():
    ms = initial_mass_state(VM)
    no_adapt = InnerGains(gamma_x=0.0, gamma_theta=0.0)

    def ref(t):
        return InnerReference(1000.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    y0 = (1000.0, 0.0, 0.0, 0.0, math.radians(2.0), 0.0)
    hist, _ = _closed_loop(no_adapt, ref, y0, 2.0 + 1e-9, ms)
    e = np.degrees(hist[:, 2])
    assert abs(e[-1]) < 0.02
    sign_changes = np.count_nonzero(np.diff(np.sign(e[np.abs(e) > 1e-12])))
    assert sign_changes <= 1


def test_actuator_envelope_limits():
    env = ActuatorEnvelope(enabled=True, T_min_N=1000.0, T_max_N=20000.0, mu_max_rad=0.1,
                           T_rate_max_Nps=1e4, mu_rate_max_radps=1.0)
    assert env.apply(50000.0, 0.5, None, 0.01) == (20000.0, 0.1)
    prev = ControlCommand(10000.0, 0.0)
    assert env.apply(50000.0, 0.5, prev, 0.01) == pytest.approx((10100.0, 0.01))
    assert ActuatorEnvelope().apply(1.0, 2.0, prev, 0.01) == (1.0, 2.0)


def test_adaptation_rate_form():
    assert adaptation_rate(0.2, 0.1, 2.5, 5.0, 1000.0) == pytest.approx(5.0 * 1000.0 * (0.5 + 0.1))

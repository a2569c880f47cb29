"""
Pitch-plane rigid-body equations of motion and their fixed-step integration.

Inertial frame {i}: x up (altitude), z downrange. Body frame {b}: x along the
longitudinal axis towards the nose. ``R(theta)`` maps body to inertial
coordinates. MCI time derivatives are neglected in the equations of motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aero import AeroTables, aero_coefficients
from .environment import R_EARTH, EnvSample, WindModel, gravity, sample_atmosphere
from .vehicle import G0, MassState, VehicleModel, mass_flow_rate, update_mass_state


class NumericalDivergence(RuntimeError):
    """Raised when the integrated state stops being finite."""

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot


@dataclass(frozen=True)
class RigidBodyState:
    t_s: float = 0.0
    x_m: float = 0.0
    xdot_mps: float = 0.0
    z_m: float = 0.0
    zdot_mps: float = 0.0
    theta_rad: float = 0.0
    q_radps: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return (self.x_m, self.xdot_mps, self.z_m, self.zdot_mps, self.theta_rad, self.q_radps)


@dataclass(frozen=True)
class ControlCommand:
    T_N: float
    mu_rad: float

    @property
    def u_in(self) -> tuple[float, float]:
        return self.T_N * math.cos(self.mu_rad), self.T_N * math.sin(self.mu_rad)


@dataclass(frozen=True)
class ForcesMoments:
    f_g_i: tuple[float, float]
    f_a_b: tuple[float, float]
    f_a_i: tuple[float, float]
    f_p_b: tuple[float, float]
    tau_p_Nm: float
    tau_a_Nm: float
    alpha_rad: float
    mach: float
    qbar_Pa: float
    SM: float
    x_cp_m: float = float("nan")


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def _aero(theta, vx, vz, rho, a_sound, x_cm, at: AeroTables, vm: VehicleModel):
    """Body/inertial aero forces and moment; returns a flat tuple for the hot loop."""
    c, s = math.cos(theta), math.sin(theta)
    u = c * vx - s * vz
    w = s * vx + c * vz
    v2 = u * u + w * w
    if v2 == 0.0 or rho <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, float("nan")
    alpha = math.atan2(w, u)
    mach = math.sqrt(v2) / a_sound
    cl, cd, xcp = aero_coefficients(alpha, mach, at)
    ca, sa = math.cos(alpha), math.sin(alpha)
    qbar = 0.5 * rho * v2
    qs = qbar * vm.ref_area_m2
    fbx = -qs * (cd * ca - cl * sa)
    fbz = -qs * (cl * ca + cd * sa)
    sm = (xcp - x_cm) / vm.max_diameter_m
    tau = fbz * sm * vm.max_diameter_m
    return fbx, fbz, c * fbx + s * fbz, -s * fbx + c * fbz, tau, alpha, mach, qbar, xcp


def aero_forces(state: RigidBodyState, env: EnvSample, at: AeroTables, vm: VehicleModel,
                ms: MassState, cmd: ControlCommand | None = None) -> ForcesMoments:
    """Forces and moments at ``state``; propulsive terms are filled in when ``cmd`` is given."""
    wx, wz = env.wind_i_mps
    fbx, fbz, fix, fiz, tau, alpha, mach, qbar, xcp = _aero(
        state.theta_rad, state.xdot_mps - wx, state.zdot_mps - wz,
        env.density_kgpm3, env.speed_of_sound_mps, ms.x_cm_m, at, vm)
    sm = 0.0 if math.isnan(xcp) else (xcp - ms.x_cm_m) / vm.max_diameter_m
    u1, u2 = cmd.u_in if cmd is not None else (0.0, 0.0)
    return ForcesMoments(
        f_g_i=(-ms.m_kg * env.g_mps2, 0.0),
        f_a_b=(fbx, fbz),
        f_a_i=(fix, fiz),
        f_p_b=(u1, u2),
        tau_p_Nm=u2 * ms.l_m,
        tau_a_Nm=tau,
        alpha_rad=alpha,
        mach=mach,
        qbar_Pa=qbar,
        SM=sm,
        x_cp_m=xcp,
    )


def eom_derivative(state: RigidBodyState, ms: MassState, cmd: ControlCommand | tuple[float, float],
                   fm: ForcesMoments, g: float) -> tuple[float, ...]:
    """Time derivative of ``(x, xdot, z, zdot, theta, q)``.

    ``cmd`` may be a :class:`ControlCommand` or the body-frame force pair
    ``u_in`` directly.
    """
    u1, u2 = cmd.u_in if isinstance(cmd, ControlCommand) else cmd
    vals = (*state.as_tuple(), u1, u2, fm.f_a_i[0], fm.f_a_i[1], fm.tau_a_Nm, g, ms.m_kg, ms.j_y_kgm2)
    if not all(math.isfinite(v) for v in vals):
        raise NumericalDivergence("non-finite input to the equations of motion", snapshot=state)
    if ms.m_kg <= 0 or ms.j_y_kgm2 <= 0:
        raise ValueError("mass and inertia must be positive")
    c, s = math.cos(state.theta_rad), math.sin(state.theta_rad)
    m = ms.m_kg
    return (
        state.xdot_mps,
        -g + (fm.f_a_i[0] + c * u1 + s * u2) / m,
        state.zdot_mps,
        (fm.f_a_i[1] - s * u1 + c * u2) / m,
        state.q_radps,
        (u2 * ms.l_m + fm.tau_a_Nm) / ms.j_y_kgm2,
    )


class FlightModel:
    """World and airframe seen by the integrator (the environment provider).

    Holds the true aerodynamic tables, the wind model and the physical
    constants. ``aero_enabled=False`` removes all aerodynamic loads.
    """

    def __init__(self, vm: VehicleModel, aero: AeroTables, wind: WindModel | None = None,
                 aero_enabled: bool = True, g0: float = G0, r_earth: float = R_EARTH):
        self.vm = vm
        self.aero = aero
        self.wind = wind
        self.aero_enabled = aero_enabled
        self.g0 = g0
        self.r_earth = r_earth

    def env(self, altitude: float, t: float) -> EnvSample:
        p, rho, a = sample_atmosphere(altitude)
        w = self.wind(altitude, t) if self.wind is not None else (0.0, 0.0)
        return EnvSample(gravity(altitude, self.g0, self.r_earth), p, rho, a, w)

    __call__ = env

    def forces(self, state: RigidBodyState, ms: MassState, cmd: ControlCommand | None = None):
        env = self.env(state.x_m, state.t_s)
        if not self.aero_enabled:
            env = EnvSample(env.g_mps2, env.pressure_Pa, 0.0, env.speed_of_sound_mps, env.wind_i_mps)
        return aero_forces(state, env, self.aero, self.vm, ms, cmd), env

    def _accel(self, t, x, vx, vz, th, q, u1, u2, m, jy, l, x_cm):
        p, rho, a = sample_atmosphere(x)
        g = self.g0 * self.r_earth**2 / (self.r_earth + x) ** 2
        if self.aero_enabled:
            wx, wz = self.wind(x, t) if self.wind is not None else (0.0, 0.0)
            _, _, fix, fiz, tau, *_ = _aero(th, vx - wx, vz - wz, rho, a, x_cm, self.aero, self.vm)
        else:
            fix = fiz = tau = 0.0
        c, s = math.cos(th), math.sin(th)
        return (-g + (fix + c * u1 + s * u2) / m, (fiz - s * u1 + c * u2) / m, (u2 * l + tau) / jy)

    def rk4(self, t, y, u1, u2, ms: MassState, dt: float):
        """One classical RK4 step of the 6-state at fixed mass; ``y`` is a tuple."""
        try:
            return self._rk4(t, y, u1, u2, ms, dt)
        except (OverflowError, ZeroDivisionError) as exc:
            raise NumericalDivergence(f"arithmetic failure at t={t:.4f} s: {exc}",
                                      snapshot=(t, y, u1, u2, ms)) from exc

    def _rk4(self, t, y, u1, u2, ms, dt):
        m, jy, l, xc = ms.m_kg, ms.j_y_kgm2, ms.l_m, ms.x_cm_m
        acc = self._accel
        x, vx, z, vz, th, q = y
        a1 = acc(t, x, vx, vz, th, q, u1, u2, m, jy, l, xc)
        h = 0.5 * dt
        x2, vx2, vz2, th2, q2 = x + h * vx, vx + h * a1[0], vz + h * a1[1], th + h * q, q + h * a1[2]
        a2 = acc(t + h, x2, vx2, vz2, th2, q2, u1, u2, m, jy, l, xc)
        x3, vx3, vz3, th3, q3 = x + h * vx2, vx + h * a2[0], vz + h * a2[1], th + h * q2, q + h * a2[2]
        a3 = acc(t + h, x3, vx3, vz3, th3, q3, u1, u2, m, jy, l, xc)
        x4, vx4, vz4, th4, q4 = x + dt * vx3, vx + dt * a3[0], vz + dt * a3[1], th + dt * q3, q + dt * a3[2]
        a4 = acc(t + dt, x4, vx4, vz4, th4, q4, u1, u2, m, jy, l, xc)
        k = dt / 6.0
        out = (
            x + k * (vx + 2 * vx2 + 2 * vx3 + vx4),
            vx + k * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0]),
            z + k * (vz + 2 * vz2 + 2 * vz3 + vz4),
            vz + k * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1]),
            th + k * (q + 2 * q2 + 2 * q3 + q4),
            q + k * (a1[2] + 2 * a2[2] + 2 * a3[2] + a4[2]),
        )
        if not all(math.isfinite(v) for v in out):
            raise NumericalDivergence(f"state became non-finite at t={t + dt:.4f} s",
                                      snapshot=(t, y, u1, u2, ms))
        return out


def step_rk4(state: RigidBodyState, ms: MassState, cmd: ControlCommand, env_provider: FlightModel,
             dt: float, freeze_mass: bool = False):
    """Advance one step with the command held constant.

    The mass state is advanced once per step with the step-start mass flow.
    Returns ``(new_state, new_mass_state, forces_at_step_start)``.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    fm, env = env_provider.forces(state, ms, cmd)
    u1, u2 = cmd.u_in
    y = env_provider.rk4(state.t_s, state.as_tuple(), u1, u2, ms, dt)
    new_state = RigidBodyState(state.t_s + dt, *y)
    if freeze_mass:
        return new_state, ms, fm
    mdot = mass_flow_rate(cmd.T_N, env.pressure_Pa, env_provider.vm)
    return new_state, update_mass_state(ms, mdot, dt, env_provider.vm), fm

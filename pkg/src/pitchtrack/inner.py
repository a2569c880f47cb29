"""
Inner loop: altitude and pitch tracking by adaptive feedback linearization.

The vertical aerodynamic force (inertial frame) and the aerodynamic pitching
moment are not modelled by the controller; they are estimated online by the
adaptive-backstepping update laws and substituted into the linearizing law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ControlCommand, RigidBodyState
from .vehicle import MassState

DEFAULT_SINGULARITY_MARGIN = math.radians(5.0)


class SingularityError(RuntimeError):
    """Pitch angle too close to horizontal for the decoupling matrix to be inverted."""


class ThrustEnvelopeError(RuntimeError):
    """Commanded axial thrust is zero or negative."""


@dataclass(frozen=True)
class InnerGains:
    k1x: float = 2.5
    k2x: float = 4.5
    k1theta: float = 12.0
    k2theta: float = 10.0
    gamma_x: float = 5.0
    gamma_theta: float = 5.0

    def __post_init__(self):
        # zero is tolerated for feedforward-only experiments; stability needs > 0
        for name, v in vars(self).items():
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"inner gain {name} must be finite and >= 0, got {v}")

    def char_poly(self, axis: str) -> tuple[float, float, float]:
        """Closed-loop error polynomial ``s^2 + (k1+k2) s + (1 + k1 k2)``."""
        k1, k2 = (self.k1x, self.k2x) if axis == "x" else (self.k1theta, self.k2theta)
        return 1.0, k1 + k2, 1.0 + k1 * k2

    def poles(self, axis: str) -> np.ndarray:
        return np.roots(self.char_poly(axis))


@dataclass(frozen=True)
class AdaptiveState:
    fax_hat_N: float = 0.0
    tau_a_hat_Nm: float = 0.0


@dataclass(frozen=True)
class InnerReference:
    x_d: float
    xdot_d: float
    xddot_d: float
    theta_d: float
    thetadot_d: float
    thetaddot_d: float


@dataclass(frozen=True)
class InnerDiagnostics:
    e_x: float
    edot_x: float
    e_theta: float
    edot_theta: float
    v_in: tuple[float, float]
    u_in: tuple[float, float]
    fax_hat_N: float
    tau_a_hat_Nm: float


@dataclass(frozen=True)
class ActuatorEnvelope:
    """Optional thrust/gimbal saturation and rate limits (off by default)."""

    enabled: bool = False
    T_min_N: float = 0.0
    T_max_N: float = math.inf
    mu_max_rad: float = math.pi / 2
    T_rate_max_Nps: float = math.inf
    mu_rate_max_radps: float = math.inf

    def apply(self, T, mu, prev: ControlCommand | None, dt):
        if not self.enabled:
            return T, mu
        T = min(max(T, self.T_min_N), self.T_max_N)
        mu = min(max(mu, -self.mu_max_rad), self.mu_max_rad)
        if prev is not None:
            dT = self.T_rate_max_Nps * dt
            dmu = self.mu_rate_max_radps * dt
            T = min(max(T, prev.T_N - dT), prev.T_N + dT)
            mu = min(max(mu, prev.mu_rad - dmu), prev.mu_rad + dmu)
        return T, mu


def inner_virtual_input(e_x, edot_x, e_theta, edot_theta, g: InnerGains) -> tuple[float, float]:
    return (
        -(1.0 + g.k1x * g.k2x) * e_x - (g.k1x + g.k2x) * edot_x,
        -(1.0 + g.k1theta * g.k2theta) * e_theta - (g.k1theta + g.k2theta) * edot_theta,
    )


def adaptation_rate(e, edot, k1, gamma, scale) -> float:
    """Time derivative of an estimate: ``gamma * scale * (k1 e + edot)``."""
    return gamma * scale * (k1 * e + edot)


def adapt_update(ad: AdaptiveState, e_x, edot_x, e_theta, edot_theta, m, j_y,
                 g: InnerGains, dt) -> AdaptiveState:
    """Explicit-Euler step of the force and moment adaptation laws."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    return AdaptiveState(
        ad.fax_hat_N + adaptation_rate(e_x, edot_x, g.k1x, g.gamma_x, m) * dt,
        ad.tau_a_hat_Nm + adaptation_rate(e_theta, edot_theta, g.k1theta, g.gamma_theta, j_y) * dt,
    )


def decoupling_matrix(theta, m, j_y, l) -> np.ndarray:
    return np.array([[math.cos(theta) / m, math.sin(theta) / m], [0.0, l / j_y]])


def inner_drift(ms: MassState, ad: AdaptiveState, ref: InnerReference, g_now) -> tuple[float, float]:
    """Estimate-substituted drift vector ``b_in``."""
    return (-g_now + ad.fax_hat_N / ms.m_kg - ref.xddot_d,
            ad.tau_a_hat_Nm / ms.j_y_kgm2 - ref.thetaddot_d)


def inner_feedback_linearize(state: RigidBodyState, ms: MassState, ad: AdaptiveState,
                             ref: InnerReference, v_in, g_now,
                             margin: float = DEFAULT_SINGULARITY_MARGIN) -> tuple[float, float]:
    """Body-frame propulsive force ``u_in`` that makes the outputs double integrators of ``v_in``."""
    theta = state.theta_rad
    if abs(theta) >= math.pi / 2 - margin:
        raise SingularityError(
            f"|theta|={math.degrees(abs(theta)):.2f} deg within {math.degrees(margin):.1f} deg "
            "of horizontal; decoupling matrix near singular")
    if ms.m_kg <= 0 or ms.j_y_kgm2 <= 0 or ms.l_m <= 0:
        raise ValueError("m, j_y and l must be positive")
    b1, b2 = inner_drift(ms, ad, ref, g_now)
    u2 = (v_in[1] - b2) * ms.j_y_kgm2 / ms.l_m
    u1 = (ms.m_kg * (v_in[0] - b1) - math.sin(theta) * u2) / math.cos(theta)
    return u1, u2


def extract_thrust_gimbal(u_in) -> tuple[float, float]:
    u1, u2 = u_in
    if not u1 > 0:
        raise ThrustEnvelopeError(f"commanded retro/zero axial thrust (u1={u1:.3f} N)")
    mu = math.atan2(u2, u1)
    return u1 / math.cos(mu), mu


def inner_step(state: RigidBodyState, ms: MassState, ad: AdaptiveState, ref: InnerReference,
               g: InnerGains, g_now, dt, margin: float = DEFAULT_SINGULARITY_MARGIN,
               envelope: ActuatorEnvelope | None = None, prev_cmd: ControlCommand | None = None):
    """One controller tick: errors, virtual input, inversion, command extraction, adaptation.

    Returns ``(ControlCommand, AdaptiveState, InnerDiagnostics)``; the returned
    adaptive state is the one to use at the next tick.
    """
    e_x = state.x_m - ref.x_d
    edot_x = state.xdot_mps - ref.xdot_d
    e_th = state.theta_rad - ref.theta_d
    edot_th = state.q_radps - ref.thetadot_d
    v_in = inner_virtual_input(e_x, edot_x, e_th, edot_th, g)
    u_in = inner_feedback_linearize(state, ms, ad, ref, v_in, g_now, margin)
    T, mu = extract_thrust_gimbal(u_in)
    if envelope is not None:
        T, mu = envelope.apply(T, mu, prev_cmd, dt)
    new_ad = adapt_update(ad, e_x, edot_x, e_th, edot_th, ms.m_kg, ms.j_y_kgm2, g, dt)
    diag = InnerDiagnostics(e_x, edot_x, e_th, edot_th, v_in, u_in, ad.fax_hat_N, ad.tau_a_hat_Nm)
    return ControlCommand(T, mu), new_ad, diag

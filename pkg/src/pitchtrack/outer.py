"""
Outer loop: downrange tracking through the zero dynamics of the inner loop.

The downrange error is feedback-linearized with an indirect estimate of the
horizontal aerodynamic force, regulated by LQR with integral action, and the
resulting outer input is inverted into the pitch reference handed to the inner
loop after low-pass filtering, together with its filtered backward-difference
rate and acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import RigidBodyState
from .inner import DEFAULT_SINGULARITY_MARGIN, AdaptiveState, SingularityError
from .mission import ReferenceSample
from .vehicle import MassState

# Integrator-augmented double integrator, state (e_z, edot_z, zeta_z)
PLANT_A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
PLANT_B = np.array([[0.0], [1.0], [0.0]])


class RiccatiError(ValueError):
    """The weights admit no stabilizing Riccati solution, or the iteration failed."""


@dataclass(frozen=True)
class OuterGains:
    k_z: float
    k_zdot: float
    k_i: float
    Q: tuple[tuple[float, ...], ...] | None = None
    R: float | None = None

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.k_z, self.k_zdot, self.k_i]])

    def closed_loop(self) -> np.ndarray:
        return np.array([[0.0, 1.0, 0.0], [-self.k_z, -self.k_zdot, -self.k_i], [1.0, 0.0, 0.0]])


def _lyap(Acl: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve ``Acl^T P + P Acl + W = 0`` by vectorization."""
    n = Acl.shape[0]
    eye = np.eye(n)
    M = np.kron(eye, Acl.T) + np.kron(Acl.T, eye)
    P = np.linalg.solve(M, -W.reshape(-1, order="F")).reshape((n, n), order="F")
    return 0.5 * (P + P.T)


def _check_weights(A, Q, R):
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise RiccatiError("Q must be symmetric")
    if np.min(np.linalg.eigvalsh(Q)) < -1e-12:
        raise RiccatiError("Q must be positive semi-definite")
    if not R > 0:
        raise RiccatiError("R must be > 0")
    # PBH detectability of (A, Q^1/2) on the closed right half-plane
    w, V = np.linalg.eigh(Q)
    Qh = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if lam.real >= -1e-12:
            pbh = np.vstack([A - lam * np.eye(n), Qh])
            if np.linalg.matrix_rank(pbh, tol=1e-9) < n:
                raise RiccatiError("(A, Q) is not detectable: no stabilizing LQR solution")


def solve_care(A, B, Q, R, K0=None, max_iter: int = 100, tol: float = 1e-13):
    """Continuous-time algebraic Riccati equation by Newton-Kleinman iteration.

    ``K0`` must stabilize ``A - B K0``. Returns ``(P, K)``.
    """
    A, B, Q = (np.asarray(M, dtype=float) for M in (A, B, Q))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    Rinv = np.linalg.inv(R)
    K = np.asarray(K0, dtype=float).reshape(B.shape[1], A.shape[0])
    if np.max(np.linalg.eigvals(A - B @ K).real) >= 0:
        raise RiccatiError("initial gain does not stabilize the plant")
    P_prev = None
    for _ in range(max_iter):
        Acl = A - B @ K
        P = _lyap(Acl, Q + K.T @ R @ K)
        K = Rinv @ B.T @ P
        if P_prev is not None and np.max(np.abs(P - P_prev)) <= tol * max(1.0, np.max(np.abs(P))):
            return P, K
        P_prev = P
    raise RiccatiError(f"Newton-Kleinman iteration did not converge in {max_iter} steps")


def lqr_design(Q, R: float) -> OuterGains:
    """LQR gains for the integrator-augmented downrange error dynamics."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (3, 3):
        raise RiccatiError("Q must be 3x3")
    _check_weights(PLANT_A, Q, float(R))
    # (s+1)^3 pole placement: closed-loop polynomial is s^3 + k_zdot s^2 + k_z s + k_i
    _, K = solve_care(PLANT_A, PLANT_B, Q, R, K0=[[3.0, 3.0, 1.0]])
    k = K.ravel()
    gains = OuterGains(float(k[0]), float(k[1]), float(k[2]),
                       tuple(tuple(float(v) for v in row) for row in Q), float(R))
    if np.max(np.linalg.eigvals(gains.closed_loop()).real) >= 0:
        raise RiccatiError("LQR closed loop is not Hurwitz")
    return gains


def indirect_faz_estimate(theta, fax_hat, tau_a_hat, SM, d_ref, previous: float = 0.0,
                          sm_min: float = 1e-3) -> float:
    """Horizontal aero force from the inner-loop estimates and the static margin.

    When ``|SM| < sm_min`` the moment arm is unusable and ``previous`` is returned.
    """
    if abs(SM) < sm_min:
        return previous
    fbz = tau_a_hat / (SM * d_ref)
    c, s = math.cos(theta), math.sin(theta)
    return c * fbz - (s / c) * (fax_hat - s * fbz)


def outer_linearize(zddot_d, faz_hat, m, v_out) -> float:
    if m <= 0:
        raise ValueError("mass must be positive")
    return zddot_d - faz_hat / m + v_out


def outer_virtual_input(e_z, edot_z, zeta_z, g: OuterGains) -> float:
    return -g.k_z * e_z - g.k_zdot * edot_z - g.k_i * zeta_z


def outer_input_from_pitch(theta, a, b) -> float:
    """Zero-dynamics input ``a tan(theta) + b / cos(theta)``."""
    return a * math.tan(theta) + b / math.cos(theta)


def _wrap(angle):
    return math.atan2(math.sin(angle), math.cos(angle))


def extract_pitch_reference(u_out, a_hat, b_hat,
                            margin: float = DEFAULT_SINGULARITY_MARGIN) -> tuple[float, bool]:
    """Pitch angle that realizes ``u_out``; returns ``(theta_d, saturated)``.

    Solves ``u_out cos(theta) - a sin(theta) = b`` and keeps the root with the
    smallest ``|theta|``. An out-of-range arccos argument is clamped and
    reported as saturation.
    """
    r = math.hypot(a_hat, u_out)
    if r == 0.0:
        return 0.0, True
    arg = -b_hat / r
    saturated = abs(arg) > 1.0
    arg = min(1.0, max(-1.0, arg))
    base = math.atan2(a_hat, -u_out)
    spread = math.acos(arg)
    theta = min((_wrap(base + spread), _wrap(base - spread)), key=abs)
    if abs(theta) >= math.pi / 2 - margin:
        raise SingularityError(
            f"pitch reference {math.degrees(theta):.2f} deg outside the admissible region")
    return theta, saturated


class PitchDerivativeFilter:
    """Two cascaded first-order low-pass stages on the pitch reference.

    The filtered reference and its backward-difference rate and acceleration
    come out of the same chain, so the feedforward handed to the inner loop is
    consistent with the angle it is asked to track. Since the stages are linear
    and time invariant, the rate equals the twice-filtered backward difference
    of the raw reference and the acceleration the twice-filtered second
    difference. Each stage has unit DC gain and is discretized exactly for a
    zero-order-held input.
    """

    def __init__(self, cutoff1_hz: float = 0.5, cutoff2_hz: float = 0.5):
        if not (cutoff1_hz > 0 and cutoff2_hz > 0):
            raise ValueError("filter cutoffs must be > 0")
        self.cutoff1_hz = cutoff1_hz
        self.cutoff2_hz = cutoff2_hz
        self.reset()

    def reset(self):
        self.stage1 = None
        self.stage2 = None
        self.rate = 0.0
        self.accel = 0.0

    @staticmethod
    def _beta(cutoff_hz, dt):
        return 1.0 - math.exp(-2.0 * math.pi * cutoff_hz * dt)

    def update(self, theta_d: float, dt: float) -> tuple[float, float, float]:
        """Feed one raw sample; returns ``(theta_f, thetadot_f, thetaddot_f)``."""
        if dt <= 0:
            raise ValueError("dt must be > 0")
        if self.stage1 is None:
            self.stage1 = self.stage2 = theta_d
        self.stage1 += self._beta(self.cutoff1_hz, dt) * (theta_d - self.stage1)
        prev = self.stage2
        self.stage2 += self._beta(self.cutoff2_hz, dt) * (self.stage1 - self.stage2)
        rate = (self.stage2 - prev) / dt
        self.accel = (rate - self.rate) / dt
        self.rate = rate
        return self.stage2, self.rate, self.accel


def pitch_derivative_filters(theta_d, dt, cutoff1_hz: float = 0.5,
                             cutoff2_hz: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Rate and acceleration of a sampled ``theta_d`` sequence via :class:`PitchDerivativeFilter`."""
    f = PitchDerivativeFilter(cutoff1_hz, cutoff2_hz)
    out = np.array([f.update(float(th), dt) for th in theta_d])
    return out[:, 1], out[:, 2]


@dataclass(frozen=True)
class PitchCommand:
    """Filtered pitch reference handed to the inner loop, plus the raw extraction."""

    theta_d: float
    thetadot_d: float
    thetaddot_d: float
    theta_raw: float


@dataclass
class OuterState:
    zeta_z: float = 0.0
    faz_hat_N: float = 0.0
    thetaddot_prev: float = 0.0
    filt: PitchDerivativeFilter = field(default_factory=PitchDerivativeFilter)


@dataclass(frozen=True)
class OuterDiagnostics:
    e_z: float
    edot_z: float
    zeta_z: float
    v_out: float
    u_out: float
    a_hat: float
    b_hat: float
    faz_hat_N: float
    saturated: bool


def outer_step(state: RigidBodyState, ms: MassState, ad: AdaptiveState, ref: ReferenceSample,
               os: OuterState, g: OuterGains, g_now: float, SM: float, d_ref: float, dt: float,
               sm_min: float = 1e-3, margin: float = DEFAULT_SINGULARITY_MARGIN):
    """One controller tick of the outer loop.

    ``ms`` is the controller's (nominal) mass state and ``SM`` its static-margin
    estimate. ``os`` is updated in place and also returned.
    """
    e_z = state.z_m - ref.z_d
    edot_z = state.zdot_mps - ref.zdot_d
    v_out = outer_virtual_input(e_z, edot_z, os.zeta_z, g)
    zeta_used = os.zeta_z
    os.zeta_z += e_z * dt
    faz = indirect_faz_estimate(state.theta_rad, ad.fax_hat_N, ad.tau_a_hat_Nm, SM, d_ref,
                                previous=os.faz_hat_N, sm_min=sm_min)
    os.faz_hat_N = faz
    u_out = outer_linearize(ref.zddot_d, faz, ms.m_kg, v_out)
    a_hat = -g_now + ad.fax_hat_N / ms.m_kg - ref.xddot_d
    b_hat = (ms.j_y_kgm2 * os.thetaddot_prev - ad.tau_a_hat_Nm) / (ms.m_kg * ms.l_m)
    theta_d, saturated = extract_pitch_reference(u_out, a_hat, b_hat, margin)
    theta_f, rate, accel = os.filt.update(theta_d, dt)
    os.thetaddot_prev = accel
    diag = OuterDiagnostics(e_z, edot_z, zeta_used, v_out, u_out, a_hat, b_hat, faz, saturated)
    return PitchCommand(theta_f, rate, accel, theta_d), os, diag

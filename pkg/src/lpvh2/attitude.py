"""Rigid-body attitude dynamics and Euler-angle kinematics.

Euler convention
----------------
Angles follow the ZYX (yaw-pitch-roll) convention throughout: lambda =
(phi, theta, psi) in radians, body rates omega = (p, q, r) in rad/s, and

    lambda_dot = Q(lambda) @ omega

with

    Q = [[1, sin(phi)*tan(theta),  cos(phi)*tan(theta)],
         [0, cos(phi),            -sin(phi)           ],
         [0, sin(phi)/cos(theta),  cos(phi)/cos(theta)]]

so that Q(0) = I.  Q is singular at theta = +/-pi/2 (gimbal lock); every
operation that needs Q or its inverse rejects states whose pitch is within
DELTA_SING of the singularity.

Body dynamics:  omega_dot = J^-1 (-omega x (J omega) + n_ext).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteState, NonSpdInertia, SingularAttitude

# Width of the excluded band around |theta| = pi/2. Keeps cond(Q) below ~1e3.
DELTA_SING = 1e-3
THETA_MAX = math.pi / 2.0 - DELTA_SING


def _vec3(v, name: str) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise DimensionMismatch(f"{name} must be a 3-vector, got shape {np.shape(v)}")
    return arr


def _check_pitch(theta: float) -> None:
    if not math.isfinite(theta):
        raise NonFiniteState("pitch angle is not finite")
    if abs(theta) >= THETA_MAX:
        raise SingularAttitude(
            f"pitch {theta:.6f} rad is within {DELTA_SING} of the gimbal-lock singularity"
        )


@dataclass(frozen=True)
class AttitudeState:
    """Euler angles lam = (phi, theta, psi) and body rates omega = (p, q, r)."""

    lam: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        lam = _vec3(self.lam, "lam")
        omega = _vec3(self.omega, "omega")
        if not (np.isfinite(lam).all() and np.isfinite(omega).all()):
            raise NonFiniteState("attitude state contains non-finite entries")
        lam.flags.writeable = False
        omega.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "omega", omega)


@dataclass(frozen=True)
class RigidBodyParams:
    """Rigid-body inertia J (3x3, symmetric positive definite, kg m^2)."""

    inertia: np.ndarray
    inertia_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        J = np.array(self.inertia, dtype=float)
        if J.shape != (3, 3):
            raise DimensionMismatch(f"inertia must be 3x3, got shape {J.shape}")
        if not np.isfinite(J).all():
            raise NonSpdInertia("inertia contains non-finite entries")
        if np.linalg.norm(J - J.T) > 1e-9 * max(1.0, np.linalg.norm(J)):
            raise NonSpdInertia("inertia is not symmetric")
        try:
            np.linalg.cholesky(J)
        except np.linalg.LinAlgError as exc:
            raise NonSpdInertia("inertia is not positive definite") from exc
        J_inv = np.linalg.inv(J)
        J.flags.writeable = False
        J_inv.flags.writeable = False
        object.__setattr__(self, "inertia", J)
        object.__setattr__(self, "inertia_inv", J_inv)


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == cross(v, u), exactly antisymmetric."""
    v = _vec3(v, "v")
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def euler_rate_matrix(lam) -> np.ndarray:
    """Body-rate-to-Euler-rate map Q(lambda) for the ZYX convention.

    Raises SingularAttitude when |theta| >= pi/2 - DELTA_SING.
    """
    lam = _vec3(lam, "lam")
    phi, theta = lam[0], lam[1]
    _check_pitch(theta)
    sphi, cphi = math.sin(phi), math.cos(phi)
    cth = math.cos(theta)
    tth = math.tan(theta)
    return np.array(
        [
            [1.0, sphi * tth, cphi * tth],
            [0.0, cphi, -sphi],
            [0.0, sphi / cth, cphi / cth],
        ]
    )


def euler_rate_matrix_inv(lam) -> np.ndarray:
    """Closed-form inverse of Q(lambda): maps Euler rates back to body rates."""
    lam = _vec3(lam, "lam")
    phi, theta = lam[0], lam[1]
    _check_pitch(theta)
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    return np.array(
        [
            [1.0, 0.0, -sth],
            [0.0, cphi, sphi * cth],
            [0.0, -sphi, cphi * cth],
        ]
    )


def euler_rate_matrix_dot(lam, lam_dot) -> np.ndarray:
    """Element-wise time derivative of Q(lambda) along the given lambda_dot."""
    lam = _vec3(lam, "lam")
    ld = _vec3(lam_dot, "lam_dot")
    if not np.isfinite(ld).all():
        raise NonFiniteState("lam_dot contains non-finite entries")
    phi, theta = lam[0], lam[1]
    _check_pitch(theta)
    dphi, dth = ld[0], ld[1]
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    tth = sth / cth
    sec2 = 1.0 / (cth * cth)
    return np.array(
        [
            [0.0, cphi * dphi * tth + sphi * dth * sec2, -sphi * dphi * tth + cphi * dth * sec2],
            [0.0, -sphi * dphi, -cphi * dphi],
            [
                0.0,
                cphi * dphi / cth + sphi * sth * dth * sec2,
                -sphi * dphi / cth + cphi * sth * dth * sec2,
            ],
        ]
    )


def angular_dynamics(state: AttitudeState, torque, params: RigidBodyParams):
    """Continuous-time derivatives (lambda_dot, omega_dot) of the rigid body.

    omega_dot = J^-1 (-omega x (J omega) + n_ext), lambda_dot = Q(lambda) omega.
    """
    tau = _vec3(torque, "torque")
    omega = state.omega
    lam_dot = euler_rate_matrix(state.lam) @ omega
    J_omega = params.inertia @ omega
    omega_dot = params.inertia_inv @ (tau - np.cross(omega, J_omega))
    return lam_dot, omega_dot


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed attitude trajectory (one row per RK4 step, including t=0)."""

    t: np.ndarray
    lam: np.ndarray
    omega: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]

    def state(self, k: int) -> AttitudeState:
        return AttitudeState(self.lam[k], self.omega[k])

    def save_csv(self, path) -> None:
        """Write `t,phi,theta,psi,p,q,r` rows at 15 significant digits."""
        with open(path, "w") as fh:
            fh.write("t,phi,theta,psi,p,q,r\n")
            for k in range(len(self)):
                row = (self.t[k], *self.lam[k], *self.omega[k])
                fh.write(",".join(f"{x:.15g}" for x in row) + "\n")


def integrate(
    state0: AttitudeState,
    torque_law,
    params: RigidBodyParams,
    dt: float = 1e-3,
    horizon: float = 1.0,
) -> Trajectory:
    """Fixed-step classical RK4 integration of the rigid-body dynamics.

    `torque_law(t, state) -> 3-vector` is evaluated at every RK4 stage. The
    integration aborts with SingularAttitude if any stage leaves the
    admissible pitch band and with NonFiniteState if the state blows up.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError("dt must be positive and finite")
    if horizon < dt:
        raise ValueError("horizon must be at least one step long")
    n_steps = int(round(horizon / dt))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        st = AttitudeState(y[:3], y[3:])
        tau = torque_law(t, st)
        lam_dot, omega_dot = angular_dynamics(st, tau, params)
        out = np.empty(6)
        out[:3] = lam_dot
        out[3:] = omega_dot
        return out

    times = np.empty(n_steps + 1)
    lam_hist = np.empty((n_steps + 1, 3))
    omega_hist = np.empty((n_steps + 1, 3))
    y = np.concatenate([state0.lam, state0.omega])
    times[0] = 0.0
    lam_hist[0] = y[:3]
    omega_hist[0] = y[3:]

    half = 0.5 * dt
    sixth = dt / 6.0
    t = 0.0
    for k in range(1, n_steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + half, y + half * k1)
        k3 = rhs(t + half, y + half * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.isfinite(y).all():
            raise NonFiniteState(f"state became non-finite at t = {t + dt:.6g} s")
        t = k * dt
        times[k] = t
        lam_hist[k] = y[:3]
        omega_hist[k] = y[3:]

    for arr in (times, lam_hist, omega_hist):
        arr.flags.writeable = False
    return Trajectory(times, lam_hist, omega_hist)

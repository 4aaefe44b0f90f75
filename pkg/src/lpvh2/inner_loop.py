"""Feedback-linearizing attitude inner loop and its closed-loop LTI model.

The control law cancels the rigid-body nonlinearities so the Euler-angle
dynamics become exactly linear:

    lam_ddot = -K2 (lam_dot - e3 e3' u) - P' K1 P (lam - u),   P = [I2 0]

with command u = (u_phi, u_theta, u_psi_dot). Roll and pitch track their
angle commands, yaw tracks a rate command, and the closed loop is LTI in
x_il = (phi, theta, dphi, dtheta, dpsi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .attitude import (
    THETA_MAX,
    AttitudeState,
    RigidBodyParams,
    Trajectory,
    euler_rate_matrix,
    euler_rate_matrix_dot,
    euler_rate_matrix_inv,
)
from .errors import DimensionMismatch, NonFiniteState, SingularAttitude

# Projector onto the (phi, theta) subspace and the yaw-rate selector.
PI_E3 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
E3 = np.array([0.0, 0.0, 1.0])


def _diag_positive(mat, size: int, name: str) -> np.ndarray:
    arr = np.array(mat, dtype=float)
    if arr.shape == (size,):
        arr = np.diag(arr)
    if arr.shape != (size, size):
        raise DimensionMismatch(f"{name} must be {size}x{size} diagonal, got {arr.shape}")
    if np.any(arr != np.diag(np.diag(arr))):
        raise ValueError(f"{name} must be diagonal")
    if np.any(np.diag(arr) <= 0.0) or not np.isfinite(arr).all():
        raise ValueError(f"{name} diagonal entries must be strictly positive and finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class InnerLoopGains:
    """Diagonal gains K1 = diag(k_phi, k_theta), K2 = diag(k_dphi, k_dtheta, k_dpsi)."""

    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k1", _diag_positive(self.k1, 2, "k1"))
        object.__setattr__(self, "k2", _diag_positive(self.k2, 3, "k2"))

    @classmethod
    def from_values(cls, k_phi, k_theta, k_dphi, k_dtheta, k_dpsi) -> "InnerLoopGains":
        return cls(np.diag([k_phi, k_theta]), np.diag([k_dphi, k_dtheta, k_dpsi]))


# Critically damped demonstration gains (configuration, not a tuned result):
# double poles at -2 on roll/pitch, pole at -2 on yaw rate.
DEFAULT_GAINS = InnerLoopGains.from_values(4.0, 4.0, 4.0, 4.0, 2.0)


@dataclass(frozen=True)
class InnerLoopCommand:
    """Constant command (u_phi [rad], u_theta [rad], u_psi_dot [rad/s])."""

    u_phi: float
    u_theta: float
    u_psi_dot: float

    def __post_init__(self):
        vals = (self.u_phi, self.u_theta, self.u_psi_dot)
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteState("command contains non-finite entries")
        if abs(self.u_theta) >= THETA_MAX:
            raise SingularAttitude(
                f"pitch command {self.u_theta:.6f} rad is outside the admissible band"
            )

    def as_vector(self) -> np.ndarray:
        return np.array([self.u_phi, self.u_theta, self.u_psi_dot])


def feedback_linearizing_torque(
    state: AttitudeState,
    cmd: InnerLoopCommand,
    gains: InnerLoopGains,
    params: RigidBodyParams,
) -> np.ndarray:
    """External torque n_ext realizing the linearizing law.

    n_ext = omega x (J omega)
            + J Q^-1 [ -Qdot omega - K2 (lam_dot - e3 e3' u) - P' K1 P (lam - u) ]

    The Qdot term must enter with a minus sign: lam_ddot = Qdot omega + Q omega_dot,
    so omega_dot = Q^-1 (lam_ddot_desired - Qdot omega). With a plus sign the
    composition with the rigid-body dynamics would leave a spurious 2 Qdot omega
    in the closed loop instead of the intended linear dynamics.
    """
    lam, omega = state.lam, state.omega
    u = cmd.as_vector()
    lam_dot = euler_rate_matrix(lam) @ omega
    v = (
        -(euler_rate_matrix_dot(lam, lam_dot) @ omega)
        - gains.k2 @ (lam_dot - E3 * cmd.u_psi_dot)
        - PI_E3.T @ (gains.k1 @ (PI_E3 @ (lam - u)))
    )
    J_omega = params.inertia @ omega
    return np.cross(omega, J_omega) + params.inertia @ (euler_rate_matrix_inv(lam) @ v)


def closed_loop_accel(
    state: AttitudeState, cmd: InnerLoopCommand, gains: InnerLoopGains
) -> np.ndarray:
    """Euler-angle acceleration of the linearized closed loop."""
    lam_dot = euler_rate_matrix(state.lam) @ state.omega
    u = cmd.as_vector()
    return -(gains.k2 @ (lam_dot - E3 * cmd.u_psi_dot)) - PI_E3.T @ (
        gains.k1 @ (PI_E3 @ (state.lam - u))
    )


def build_inner_loop_lti(gains: InnerLoopGains):
    """State-space form (A_il, B_il) of the closed loop on x_il = (phi, theta, dphi, dtheta, dpsi)."""
    A = np.zeros((5, 5))
    A[:2, 2:] = PI_E3
    A[2:, :2] = -PI_E3.T @ gains.k1
    A[2:, 2:] = -gains.k2
    B = np.zeros((5, 3))
    B[2:, :] = PI_E3.T @ gains.k1 @ PI_E3 + gains.k2 @ np.outer(E3, E3)
    return A, B


def is_hurwitz(A, margin: float = 0.0) -> bool:
    """True iff every eigenvalue of A has real part < -margin."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise NonFiniteState("A contains non-finite entries")
    if margin < 0.0:
        raise ValueError("margin must be nonnegative")
    return bool(np.max(np.linalg.eigvals(A).real) < -margin)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Trajectory of the LTI reference state x_il = (phi, theta, dphi, dtheta, dpsi)."""

    t: np.ndarray
    x: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]

    def save_csv(self, path) -> None:
        """Write `t,phi,theta,dphi,dtheta,dpsi` rows at 15 significant digits."""
        with open(path, "w") as fh:
            fh.write("t,phi,theta,dphi,dtheta,dpsi\n")
            for k in range(len(self)):
                row = (self.t[k], *self.x[k])
                fh.write(",".join(f"{x:.15g}" for x in row) + "\n")


def simulate_reference_model(
    cmd: InnerLoopCommand,
    gains: InnerLoopGains,
    x0,
    dt: float = 1e-3,
    horizon: float = 1.0,
) -> ReferenceTrajectory:
    """Exact discrete propagation of x_il_dot = A_il x_il + B_il u.

    Each step applies the matrix exponential of the augmented system, so the
    samples are exact (to roundoff) for the constant command; this is the
    oracle the nonlinear simulation is compared against.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError("dt must be positive and finite")
    if horizon < dt:
        raise ValueError("horizon must be at least one step long")
    x0 = np.array(x0, dtype=float).reshape(-1)
    if x0.shape != (5,):
        raise DimensionMismatch(f"x0 must be a 5-vector, got shape {x0.shape}")
    A, B = build_inner_loop_lti(gains)
    u = cmd.as_vector()
    aug = np.zeros((8, 8))
    aug[:5, :5] = A
    aug[:5, 5:] = B
    phi_aug = expm(aug * dt)
    Ed = phi_aug[:5, :5]
    fd = phi_aug[:5, 5:] @ u

    n_steps = int(round(horizon / dt))
    times = np.arange(n_steps + 1) * dt
    xs = np.empty((n_steps + 1, 5))
    xs[0] = x0
    x = x0
    for k in range(1, n_steps + 1):
        x = Ed @ x + fd
        xs[k] = x
    times.flags.writeable = False
    xs.flags.writeable = False
    return ReferenceTrajectory(times, xs)


def _closed_loop_rhs(y, u_phi, u_theta, u_psidot, kp, kt, kdp, kdt, kdps, J, Ji):
    """Scalar-unrolled derivative of the nonlinear closed loop.

    Computes the linearizing torque and then the rigid-body dynamics exactly
    as feedback_linearizing_torque / angular_dynamics do, with shared
    subexpressions; equivalence with the generic path is property-tested.
    """
    phi, th = y[0], y[1]
    p, q, r = y[3], y[4], y[5]
    if abs(th) >= THETA_MAX:
        raise SingularAttitude(f"pitch {th:.6f} rad left the admissible band")
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(th), math.cos(th)
    tth = sth / cth
    sec = 1.0 / cth
    sec2 = sec * sec

    # lam_dot = Q omega
    dphi = p + sphi * tth * q + cphi * tth * r
    dth = cphi * q - sphi * r
    dpsi = (sphi * q + cphi * r) * sec

    # v = -Qdot omega - K2 (lam_dot - e3 e3' u) - P' K1 P (lam - u)
    qd01 = cphi * dphi * tth + sphi * dth * sec2
    qd02 = -sphi * dphi * tth + cphi * dth * sec2
    qd21 = cphi * dphi * sec + sphi * sth * dth * sec2
    qd22 = -sphi * dphi * sec + cphi * sth * dth * sec2
    v0 = -(qd01 * q + qd02 * r) - kdp * dphi - kp * (phi - u_phi)
    v1 = (sphi * q + cphi * r) * dphi - kdt * dth - kt * (th - u_theta)
    v2 = -(qd21 * q + qd22 * r) - kdps * (dpsi - u_psidot)

    # w = Q^-1 v
    w0 = v0 - sth * v2
    w1 = cphi * v1 + sphi * cth * v2
    w2 = -sphi * v1 + cphi * cth * v2

    # n_ext = omega x (J omega) + J w, then omega_dot = J^-1 (n_ext - omega x (J omega))
    jw0 = J[0][0] * p + J[0][1] * q + J[0][2] * r
    jw1 = J[1][0] * p + J[1][1] * q + J[1][2] * r
    jw2 = J[2][0] * p + J[2][1] * q + J[2][2] * r
    cx0 = q * jw2 - r * jw1
    cx1 = r * jw0 - p * jw2
    cx2 = p * jw1 - q * jw0
    n0 = cx0 + J[0][0] * w0 + J[0][1] * w1 + J[0][2] * w2
    n1 = cx1 + J[1][0] * w0 + J[1][1] * w1 + J[1][2] * w2
    n2 = cx2 + J[2][0] * w0 + J[2][1] * w1 + J[2][2] * w2
    b0 = n0 - cx0
    b1 = n1 - cx1
    b2 = n2 - cx2
    od0 = Ji[0][0] * b0 + Ji[0][1] * b1 + Ji[0][2] * b2
    od1 = Ji[1][0] * b0 + Ji[1][1] * b1 + Ji[1][2] * b2
    od2 = Ji[2][0] * b0 + Ji[2][1] * b1 + Ji[2][2] * b2
    return (dphi, dth, dpsi, od0, od1, od2)


def simulate_inner_loop(
    state0: AttitudeState,
    cmd: InnerLoopCommand,
    gains: InnerLoopGains,
    params: RigidBodyParams,
    dt: float = 1e-3,
    horizon: float = 1.0,
) -> Trajectory:
    """RK4 simulation of the nonlinear closed loop (linearizing torque + rigid body).

    Functionally identical to attitude.integrate with
    feedback_linearizing_torque as the torque law, but with the derivative
    evaluated in one pass so long fine-step runs stay cheap.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError("dt must be positive and finite")
    if horizon < dt:
        raise ValueError("horizon must be at least one step long")
    n_steps = int(round(horizon / dt))

    kp, kt = float(gains.k1[0, 0]), float(gains.k1[1, 1])
    kdp, kdt, kdps = (float(gains.k2[i, i]) for i in range(3))
    J = params.inertia.tolist()
    Ji = params.inertia_inv.tolist()
    up, ut, ups = cmd.u_phi, cmd.u_theta, cmd.u_psi_dot

    times = np.arange(n_steps + 1) * dt
    ys = np.empty((n_steps + 1, 6))
    y = (*state0.lam, *state0.omega)
    ys[0] = y

    half = 0.5 * dt
    sixth = dt / 6.0
    rhs = _closed_loop_rhs
    for step in range(1, n_steps + 1):
        a0, a1, a2, a3, a4, a5 = y
        k1 = rhs(y, up, ut, ups, kp, kt, kdp, kdt, kdps, J, Ji)
        y2 = (a0 + half * k1[0], a1 + half * k1[1], a2 + half * k1[2],
              a3 + half * k1[3], a4 + half * k1[4], a5 + half * k1[5])
        k2 = rhs(y2, up, ut, ups, kp, kt, kdp, kdt, kdps, J, Ji)
        y3 = (a0 + half * k2[0], a1 + half * k2[1], a2 + half * k2[2],
              a3 + half * k2[3], a4 + half * k2[4], a5 + half * k2[5])
        k3 = rhs(y3, up, ut, ups, kp, kt, kdp, kdt, kdps, J, Ji)
        y4 = (a0 + dt * k3[0], a1 + dt * k3[1], a2 + dt * k3[2],
              a3 + dt * k3[3], a4 + dt * k3[4], a5 + dt * k3[5])
        k4 = rhs(y4, up, ut, ups, kp, kt, kdp, kdt, kdps, J, Ji)
        y = (a0 + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
             a1 + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
             a2 + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
             a3 + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
             a4 + sixth * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4]),
             a5 + sixth * (k1[5] + 2.0 * (k2[5] + k3[5]) + k4[5]))
        ys[step] = y
        if not math.isfinite(y[0] + y[1] + y[2] + y[3] + y[4] + y[5]):
            raise NonFiniteState(f"state became non-finite at t = {step * dt:.6g} s")

    lam_hist = ys[:, :3].copy()
    omega_hist = ys[:, 3:].copy()
    for arr in (times, lam_hist, omega_hist):
        arr.flags.writeable = False
    return Trajectory(times, lam_hist, omega_hist)


def project_x_il(traj: Trajectory) -> np.ndarray:
    """Map an attitude trajectory to x_il = (phi, theta, dphi, dtheta, dpsi) samples."""
    phi = traj.lam[:, 0]
    th = traj.lam[:, 1]
    p, q, r = traj.omega[:, 0], traj.omega[:, 1], traj.omega[:, 2]
    sphi, cphi = np.sin(phi), np.cos(phi)
    cth = np.cos(th)
    tth = np.tan(th)
    out = np.empty((len(traj), 5))
    out[:, 0] = phi
    out[:, 1] = th
    out[:, 2] = p + sphi * tth * q + cphi * tth * r
    out[:, 3] = cphi * q - sphi * r
    out[:, 4] = (sphi * q + cphi * r) / cth
    return out


def x_il_trajectory(traj: Trajectory) -> ReferenceTrajectory:
    """Attitude trajectory projected to x_il, as a saveable trace."""
    return ReferenceTrajectory(traj.t, project_x_il(traj))

"""Extended Kalman filter over the drone state.

State vector x = [px, py, pz, vx, vy, vz, yaw].  The control input
u = [v_body (3), yaw_rate] is the velocity command sent to the drone, so
the filter shares the plant's response model: world-frame velocity
relaxes toward the rotated body command at rate ``alpha`` while position
integrates the pre-update velocity.  The IMU measures world velocity and
yaw directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STATE_DIM = 7
INPUT_DIM = 4
MEAS_DIM = 4

# measurement picks [vx, vy, vz, yaw] out of the state
H_MATRIX = np.zeros((MEAS_DIM, STATE_DIM))
H_MATRIX[0, 3] = H_MATRIX[1, 4] = H_MATRIX[2, 5] = H_MATRIX[3, 6] = 1.0

MAX_CONDITION = 1e12


def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return float(-((-a + math.pi) % (2.0 * math.pi) - math.pi))


@dataclass(frozen=True)
class EkfParams:
    """Filter tuning: plant response rate and noise diagonals."""

    alpha: float = 2.0
    q_diag: tuple = (1e-4, 1e-4, 1e-4, 1e-6, 1e-6, 1e-6, 1e-7)
    r_diag: tuple = (0.01, 0.01, 0.01, 0.001)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if len(self.q_diag) != STATE_DIM:
            raise ValueError(f"q_diag needs {STATE_DIM} entries, got {len(self.q_diag)}")
        if len(self.r_diag) != MEAS_DIM:
            raise ValueError(f"r_diag needs {MEAS_DIM} entries, got {len(self.r_diag)}")
        if any(q < 0 for q in self.q_diag) or any(r < 0 for r in self.r_diag):
            raise ValueError("noise variances must be non-negative")


@dataclass
class Belief:
    """Gaussian state estimate: mean and covariance."""

    x: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.P = np.asarray(self.P, dtype=np.float64)
        if self.x.shape != (STATE_DIM,):
            raise ValueError(f"state must have shape ({STATE_DIM},), got {self.x.shape}")
        if self.P.shape != (STATE_DIM, STATE_DIM):
            raise ValueError(f"covariance must be {STATE_DIM}x{STATE_DIM}, got {self.P.shape}")


def initial_belief(position=(0.0, 0.0, 0.0), yaw: float = 0.0,
                   pos_var: float = 1e-6, vel_var: float = 1e-4,
                   yaw_var: float = 1e-6) -> Belief:
    """Belief for a drone sitting at a known spot, at rest."""
    x = np.zeros(STATE_DIM)
    x[:3] = position
    x[6] = wrap_angle(yaw)
    P = np.diag([pos_var] * 3 + [vel_var] * 3 + [yaw_var]).astype(np.float64)
    return Belief(x, P)


def _check_input(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (INPUT_DIM,):
        raise ValueError(f"input must have shape ({INPUT_DIM},), got {u.shape}")
    return u


def process_model(x: np.ndarray, u, dt: float, alpha: float) -> np.ndarray:
    """One step of the nominal plant: first-order velocity response."""
    u = _check_input(u)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (np.isfinite(x).all() and np.isfinite(u).all()):
        raise ValueError("process model inputs must be finite")
    c, s = math.cos(x[6]), math.sin(x[6])
    v_world = np.array([c * u[0] - s * u[1],
                        s * u[0] + c * u[1],
                        u[2]])
    out = x.copy()
    out[:3] = x[:3] + x[3:6] * dt
    out[3:6] = x[3:6] + alpha * dt * (v_world - x[3:6])
    out[6] = wrap_angle(x[6] + u[3] * dt)
    return out


def process_jacobian(x: np.ndarray, u, dt: float, alpha: float) -> np.ndarray:
    """Analytic d(process)/d(state) at the current estimate."""
    u = _check_input(u)
    c, s = math.cos(x[6]), math.sin(x[6])
    F = np.eye(STATE_DIM)
    F[0, 3] = F[1, 4] = F[2, 5] = dt
    k = 1.0 - alpha * dt
    F[3, 3] = F[4, 4] = F[5, 5] = k
    # velocity target rotates with yaw
    F[3, 6] = alpha * dt * (-s * u[0] - c * u[1])
    F[4, 6] = alpha * dt * (c * u[0] - s * u[1])
    return F


def measurement_model(x: np.ndarray) -> np.ndarray:
    return H_MATRIX @ x


def ekf_predict(belief: Belief, u, dt: float, params: EkfParams | None = None) -> Belief:
    """Propagate through the process model and inflate covariance."""
    params = params or EkfParams()
    x = process_model(belief.x, u, dt, params.alpha)
    F = process_jacobian(belief.x, u, dt, params.alpha)
    P = F @ belief.P @ F.T + np.diag(params.q_diag)
    P = 0.5 * (P + P.T)
    return Belief(x, P)


def ekf_update(belief: Belief, z, params: EkfParams | None = None) -> Belief:
    """Fuse an IMU measurement [vx, vy, vz, yaw]."""
    params = params or EkfParams()
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (MEAS_DIM,):
        raise ValueError(f"measurement must have shape ({MEAS_DIM},), got {z.shape}")
    P = belief.P
    S = H_MATRIX @ P @ H_MATRIX.T + np.diag(params.r_diag)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ValueError(
            f"innovation covariance is ill-conditioned (condition estimate {cond:.3e})")
    y = z - measurement_model(belief.x)
    y[3] = wrap_angle(y[3])
    K = P @ H_MATRIX.T @ np.linalg.inv(S)
    x = belief.x + K @ y
    x[6] = wrap_angle(x[6])
    P_new = (np.eye(STATE_DIM) - K @ H_MATRIX) @ P
    P_new = 0.5 * (P_new + P_new.T)
    return Belief(x, P_new)

# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Ego-vehicle pose EKF.

The state is ``[x, y, z, vx, vy, vz, roll, pitch, yaw]`` in the local metric
world frame. IMU samples drive a strapdown prediction; GPS positions and
world-frame velocities correct it. IMU biases are not estimated.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.transform import Rotation

from .datasets import ImuSample
from .exceptions import (
    ContractViolationError,
    MeasurementRejectedError,
    NumericallyDegenerateError,
)
from .geometry import Pose6D, quaternion_from_euler, wrap_angle
from .utils.config_utils import require

logger = logging.getLogger(__name__)

GRAVITY = np.array([0.0, 0.0, -9.81])
STATE_DIM = 9
POS = slice(0, 3)
VEL = slice(3, 6)
ATT = slice(6, 9)
MAX_PREDICT_DT = 1.0
_JACOBIAN_STEP = 1e-6


@dataclass(frozen=True)
class EkfConfig:
    """Noise model of the ego filter; every value must be positive."""

    accel_noise: float = 0.1
    gyro_noise: float = 0.01
    gps_sigma: float = 0.5
    velocity_sigma: float = 0.2
    initial_position_variance: float = 1.0
    initial_velocity_variance: float = 1.0
    initial_attitude_variance: float = 0.01

    def __post_init__(self):
        for name, value in vars(self).items():
            require(value > 0, f"{name} must be > 0, got {value}")

    def initial_covariance(self) -> np.ndarray:
        return np.diag(
            [self.initial_position_variance] * 3
            + [self.initial_velocity_variance] * 3
            + [self.initial_attitude_variance] * 3
        )


@dataclass(frozen=True, eq=False)
class EgoState:
    """Immutable snapshot of the ego filter."""

    mean: np.ndarray
    covariance: np.ndarray
    timestamp: float = 0.0
    innovation: Optional[np.ndarray] = None

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64, copy=True).reshape(STATE_DIM)
        mean[8] = wrap_angle(mean[8])
        cov = np.array(self.covariance, dtype=np.float64, copy=True)
        if cov.shape != (STATE_DIM, STATE_DIM):
            raise ContractViolationError(f"Ego covariance must be 9x9, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-9):
            raise ContractViolationError("Ego covariance is not symmetric")
        for arr in (mean, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def initial(
        cls,
        position: Sequence[float] = (0.0, 0.0, 0.0),
        velocity: Sequence[float] = (0.0, 0.0, 0.0),
        orientation: Sequence[float] = (0.0, 0.0, 0.0),
        cfg: EkfConfig = EkfConfig(),
        timestamp: float = 0.0,
    ) -> "EgoState":
        mean = np.concatenate([position, velocity, orientation]).astype(np.float64)
        return cls(mean, cfg.initial_covariance(), timestamp)

    @property
    def position(self) -> np.ndarray:
        return self.mean[POS]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[VEL]

    @property
    def orientation(self) -> np.ndarray:
        return self.mean[ATT]


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def _propagate(x: np.ndarray, accel: np.ndarray, gyro: np.ndarray, dt: float) -> np.ndarray:
    attitude = Rotation.from_euler("xyz", x[ATT])
    a_world = attitude.apply(accel) + GRAVITY
    out = np.empty(STATE_DIM)
    out[POS] = x[POS] + x[VEL] * dt + 0.5 * a_world * dt * dt
    out[VEL] = x[VEL] + a_world * dt
    out[ATT] = (attitude * Rotation.from_rotvec(gyro * dt)).as_euler("xyz")
    return out


def _state_delta(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a - b
    d[ATT] = [wrap_angle(v) for v in d[ATT]]
    return d


def _transition_jacobian(
    x: np.ndarray, accel: np.ndarray, gyro: np.ndarray, dt: float
) -> np.ndarray:
    """Central-difference Jacobian of the strapdown step at ``x``."""
    jac = np.empty((STATE_DIM, STATE_DIM))
    for i in range(STATE_DIM):
        step = np.zeros(STATE_DIM)
        step[i] = _JACOBIAN_STEP
        plus = _propagate(x + step, accel, gyro, dt)
        minus = _propagate(x - step, accel, gyro, dt)
        jac[:, i] = _state_delta(plus, minus) / (2.0 * _JACOBIAN_STEP)
    return jac


def predict(
    state: EgoState, imu: ImuSample, dt: float, cfg: EkfConfig = EkfConfig()
) -> EgoState:
    """
    Strapdown prediction over ``dt`` seconds.

    The gyro rate rotates the attitude, the specific force is rotated to the
    world frame and gravity removed, then velocity and position integrate.

    Raises:
        ContractViolationError: if ``dt`` is outside ``(0, 1)`` or the IMU
            sample is not finite
    """
    if not 0.0 < dt < MAX_PREDICT_DT:
        raise ContractViolationError(f"predict needs 0 < dt < {MAX_PREDICT_DT}, got {dt}")
    if not imu.is_finite():
        raise ContractViolationError("IMU sample is not finite")

    accel = np.asarray(imu.accel, dtype=np.float64)
    gyro = np.asarray(imu.gyro, dtype=np.float64)
    x = state.mean
    mean = _propagate(x, accel, gyro, dt)
    f = _transition_jacobian(x, accel, gyro, dt)

    qa = cfg.accel_noise**2
    qg = cfg.gyro_noise**2
    q = np.diag([qa * dt**3 / 3.0] * 3 + [qa * dt] * 3 + [qg * dt] * 3)
    cov = _symmetrize(f @ state.covariance @ f.T + q)
    return EgoState(mean, cov, state.timestamp + dt)


def _correct(
    state: EgoState, z: Sequence[float], block: slice, sigma: float, label: str
) -> EgoState:
    z = np.asarray(z, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(z)):
        raise MeasurementRejectedError(f"{label} measurement is not finite: {z.tolist()}")

    h = np.zeros((3, STATE_DIM))
    h[:, block] = np.eye(3)
    r = np.eye(3) * sigma**2
    p = state.covariance
    s = h @ p @ h.T + r
    try:
        factor = cho_factor(s)
    except LinAlgError as e:
        raise NumericallyDegenerateError(f"{label} innovation covariance is singular: {e}")

    gain = cho_solve(factor, h @ p).T
    innovation = z - h @ state.mean
    mean = state.mean + gain @ innovation
    joseph = np.eye(STATE_DIM) - gain @ h
    cov = _symmetrize(joseph @ p @ joseph.T + gain @ r @ gain.T)
    return replace(state, mean=mean, covariance=cov, innovation=innovation)


def correct_gps(
    state: EgoState, gps_local: Sequence[float], cfg: EkfConfig = EkfConfig()
) -> EgoState:
    """
    Fuse a GPS position already projected to the local frame.

    Raises:
        MeasurementRejectedError: on a non-finite fix; the state is untouched
        NumericallyDegenerateError: if the innovation covariance is singular
    """
    return _correct(state, gps_local, POS, cfg.gps_sigma, "GPS")


def correct_velocity(
    state: EgoState, vel_meas: Sequence[float], cfg: EkfConfig = EkfConfig()
) -> EgoState:
    """Fuse a world-frame velocity; errors as ``correct_gps``."""
    return _correct(state, vel_meas, VEL, cfg.velocity_sigma, "Velocity")


def pose_of(state: EgoState) -> Pose6D:
    roll, pitch, yaw = state.orientation
    idx = np.r_[0:3, 6:9]
    cov = state.covariance[np.ix_(idx, idx)]
    return Pose6D(
        state.position.copy(),
        quaternion_from_euler(roll, pitch, yaw),
        _symmetrize(cov),
        state.timestamp,
    )

"""Planar N-link serial arm: forward kinematics, Jacobian, manipulability,
joint limits, and the velocity-commanded integrator used for rollouts.

All geometric functions broadcast over arbitrary leading batch dimensions of
``q`` so the MPC rollouts can evaluate whole particle batches in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "ArmModel",
    "RobotState",
    "Control",
    "forward_kinematics",
    "jacobian",
    "manipulability",
    "step_dynamics",
    "joint_limit_violation",
    "reachable_annulus",
]


class DimensionError(ValueError):
    """Raised when an input vector does not match the arm's joint count."""


@dataclass(frozen=True)
class ArmModel:
    """Immutable planar serial-chain model.

    link_lengths are in meters, joint limits in radians, velocity limits in
    rad/s. base_position is the 2-D location of joint 0.
    """

    link_lengths: NDArray[np.float64]
    joint_lower: NDArray[np.float64]
    joint_upper: NDArray[np.float64]
    vel_limit: NDArray[np.float64]
    base_position: NDArray[np.float64] = field(
        default_factory=lambda: np.zeros(2)
    )

    def __post_init__(self):
        for name in ("link_lengths", "joint_lower", "joint_upper", "vel_limit"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
        object.__setattr__(
            self, "base_position", np.asarray(self.base_position, dtype=np.float64)
        )
        n = self.link_lengths.size
        if n < 2:
            raise ValueError("arm needs at least 2 links")
        if np.any(self.link_lengths <= 0):
            raise ValueError("link lengths must be positive")
        if self.joint_lower.size != n or self.joint_upper.size != n:
            raise DimensionError("joint limit arrays must have one entry per link")
        if np.any(self.joint_lower >= self.joint_upper):
            raise ValueError("joint_lower must be < joint_upper per joint")
        if self.vel_limit.size != n or np.any(self.vel_limit <= 0):
            raise ValueError("vel_limit must be positive per joint")
        if self.base_position.shape != (2,):
            raise DimensionError("base_position must be a 2-D point")

    @property
    def n_joints(self) -> int:
        return self.link_lengths.size

    @property
    def reach(self) -> float:
        return float(self.link_lengths.sum())


@dataclass(frozen=True)
class RobotState:
    """Joint positions/velocities plus simulation time."""

    q: NDArray[np.float64]
    qdot: NDArray[np.float64]
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=np.float64))
        object.__setattr__(self, "qdot", np.asarray(self.qdot, dtype=np.float64))
        if self.q.shape != self.qdot.shape:
            raise DimensionError("q and qdot must have equal length")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise ValueError("state entries must be finite")


@dataclass(frozen=True)
class Control:
    """Commanded joint velocities; clamped to vel_limit inside step_dynamics."""

    v_cmd: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "v_cmd", np.asarray(self.v_cmd, dtype=np.float64))


def _check_q(model: ArmModel, q: NDArray) -> NDArray[np.float64]:
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != model.n_joints:
        raise DimensionError(
            f"expected {model.n_joints} joint values, got {q.shape[-1]}"
        )
    return q

def forward_kinematics(model: ArmModel, q: NDArray) -> NDArray[np.float64]:
    """Joint origins and end-effector position, shape ``(..., N+1, 2)``.

    point[0] is the base; point[k] = point[k-1] + L_k * (cos, sin) of the
    cumulative joint angle.
    """
    q = _check_q(model, q)
    theta = np.cumsum(q, axis=-1)
    # (..., N, 2) increments along each link
    inc = np.stack([np.cos(theta), np.sin(theta)], axis=-1) * model.link_lengths[..., :, None]
    pts = np.empty(q.shape[:-1] + (model.n_joints + 1, 2))
    pts[..., 0, :] = model.base_position
    np.cumsum(inc, axis=-2, out=pts[..., 1:, :])
    pts[..., 1:, :] += model.base_position
    return pts


def jacobian(model: ArmModel, q: NDArray, points: NDArray | None = None) -> NDArray[np.float64]:
    """End-effector position Jacobian, shape ``(..., 2, N)``.

    Column i is the 90-degree rotation of (ee - joint_origin_i). ``points``
    may pass in precomputed forward kinematics to avoid recomputation.
    """
    q = _check_q(model, q)
    if points is None:
        points = forward_kinematics(model, q)
    ee = points[..., -1:, :]
    r = ee - points[..., :-1, :]  # (..., N, 2)
    cols = np.stack([-r[..., 1], r[..., 0]], axis=-2)  # (..., 2, N)
    return cols


def manipulability(model: ArmModel, q: NDArray, points: NDArray | None = None) -> NDArray[np.float64]:
    """Yoshikawa measure sqrt(det(J J^T)); zero at singularities.

    det(J J^T) for a 2xN Jacobian is computed in closed form from the row
    Gram matrix; round-off negatives are clamped to zero.
    """
    J = jacobian(model, q, points=points)
    jx, jy = J[..., 0, :], J[..., 1, :]
    a = np.sum(jx * jx, axis=-1)
    b = np.sum(jx * jy, axis=-1)
    c = np.sum(jy * jy, axis=-1)
    det = a * c - b * b
    return np.sqrt(np.maximum(det, 0.0))


def step_dynamics(model: ArmModel, state: RobotState, u: Control, dt: float) -> RobotState:
    """First-order Euler step under a clamped velocity command.

    Joint positions are not clamped at the limits; limit handling is the
    cost function's job.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = np.clip(_check_q(model, u.v_cmd), -model.vel_limit, model.vel_limit)
    return RobotState(q=state.q + v * dt, qdot=v, t=state.t + dt)


def joint_limit_violation(model: ArmModel, q: NDArray) -> NDArray[np.float64]:
    """Per-joint penetration depth beyond the limits, >= 0, shape ``(..., N)``."""
    q = _check_q(model, q)
    below = model.joint_lower - q
    above = q - model.joint_upper
    return np.maximum(0.0, np.maximum(below, above))


def reachable_annulus(model: ArmModel) -> tuple[float, float]:
    """(inner, outer) radii of the end-effector's reachable annulus."""
    lengths = model.link_lengths
    outer = float(lengths.sum())
    inner = float(max(0.0, 2.0 * lengths.max() - lengths.sum()))
    return inner, outer


def ee_position(model: ArmModel, q: NDArray) -> NDArray[np.float64]:
    """End-effector position, shape ``(..., 2)``."""
    return forward_kinematics(model, q)[..., -1, :]

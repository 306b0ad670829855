"""The running cost: six terms (pose, stop, joint limits, manipulability,
self-collision, environment collision) and their weighted aggregate.

Every term broadcasts over leading batch dimensions so the MPC can score all
particles and horizon steps in one vectorized pass; passing plain 1-D inputs
gives scalars.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .kinematics import (
    ArmModel,
    RobotState,
    Control,
    forward_kinematics,
    joint_limit_violation,
    manipulability,
)
from .world import World, arm_clearance

__all__ = [
    "CostWeights",
    "CostBreakdown",
    "CostConstants",
    "Target",
    "pose_cost",
    "stop_cost",
    "joint_cost",
    "manip_cost",
    "env_coll_cost",
    "self_coll_cost",
    "total_cost",
    "estimate_max_manipulability",
]


@dataclass(frozen=True)
class CostWeights:
    """Weight factors for the running-cost terms."""

    alpha_p: float
    alpha_s: float
    alpha_j: float
    alpha_m: float
    alpha_c: float

    def __post_init__(self):
        vals = (self.alpha_p, self.alpha_s, self.alpha_j, self.alpha_m, self.alpha_c)
        if any(v < 0 for v in vals):
            raise ValueError("cost weights must be nonnegative")
        if all(v == 0 for v in vals):
            raise ValueError("at least one cost weight must be positive")


@dataclass(frozen=True)
class CostBreakdown:
    """Per-term values plus the weighted total for one (state, control)."""

    pose: float
    stop: float
    joint: float
    manip: float
    self_coll: float
    env_coll: float
    total: float


@dataclass(frozen=True)
class Target:
    """A reach waypoint: 2-D position and success tolerance."""

    position: NDArray[np.float64]
    reach_tolerance: float

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        if self.reach_tolerance <= 0:
            raise ValueError("reach_tolerance must be positive")


@dataclass(frozen=True)
class CostConstants:
    """Shape constants for the cost terms; all values come from the config.

    mu_max is the arm's maximum manipulability, estimated once by random
    joint-space sampling.
    """

    d_safe: float = 0.02
    k_pen: float = 10.0
    eps: float = 1e-4
    margin: float = 0.1
    c_max: float = 100.0
    a_max: float = 2.0
    samples_per_link: int = 8
    mu_max: float = 1.0


def estimate_max_manipulability(
    model: ArmModel, samples: int = 100_000, seed: int = 0
) -> float:
    """Estimate the arm's maximum manipulability by uniform joint sampling."""
    rng = np.random.default_rng(seed)
    q = rng.uniform(model.joint_lower, model.joint_upper, size=(samples, model.n_joints))
    return float(np.max(manipulability(model, q)))


def pose_cost(ee: NDArray, target: Target) -> NDArray[np.float64]:
    """Euclidean distance from the end-effector to the target position."""
    ee = np.asarray(ee, dtype=np.float64)
    return np.linalg.norm(ee - target.position, axis=-1)


def stop_cost(
    qdot: NDArray, steps_remaining: NDArray, dt: float, constants: CostConstants
) -> NDArray[np.float64]:
    """Residual speed the plan cannot null before the horizon ends.

    Each joint may shed at most a_max*dt of speed per remaining step; whatever
    is left over is penalized linearly.
    """
    qdot = np.asarray(qdot, dtype=np.float64)
    budget = np.asarray(steps_remaining, dtype=np.float64)[..., None] * constants.a_max * dt
    return np.sum(np.maximum(0.0, np.abs(qdot) - budget), axis=-1)


def joint_cost(model: ArmModel, q: NDArray, constants: CostConstants) -> NDArray[np.float64]:
    """Squared limit penetration plus a soft quadratic barrier inside the margin.

    The barrier saturates at margin^2 once a joint is past its limit, so the
    penetration quadratic dominates outside.
    """
    q = np.asarray(q, dtype=np.float64)
    viol = joint_limit_violation(model, q)
    dist = np.minimum(q - model.joint_lower, model.joint_upper - q)
    barrier = np.where(dist >= 0, np.maximum(0.0, constants.margin - dist), constants.margin)
    return np.sum(viol * viol + barrier * barrier, axis=-1)


def manip_cost(
    model: ArmModel,
    q: NDArray,
    constants: CostConstants,
    points: NDArray | None = None,
) -> NDArray[np.float64]:
    """Reciprocal manipulability penalty, near the ceiling at singularities."""
    mu = manipulability(model, q, points=points)
    raw = 1.0 / (mu + constants.eps) - 1.0 / (constants.mu_max + constants.eps)
    return np.clip(raw, 0.0, constants.c_max)


def _clearance_hinge(d: NDArray, constants: CostConstants) -> NDArray[np.float64]:
    """0 beyond d_safe, quadratic ramp to 1 at contact, linear in penetration."""
    d = np.asarray(d, dtype=np.float64)
    ds = constants.d_safe
    ramp = np.square(np.maximum(0.0, ds - np.maximum(d, 0.0))) / (ds * ds)
    pen = np.where(d < 0, 1.0 + np.abs(d) * constants.k_pen, 0.0)
    return np.where(d < 0, pen, ramp)


def env_coll_cost(
    world: World,
    model: ArmModel,
    q: NDArray,
    constants: CostConstants,
    points: NDArray | None = None,
) -> NDArray[np.float64]:
    """Hinge on the arm's minimum signed clearance to the obstacle set."""
    d = arm_clearance(world, model, q, constants.samples_per_link, points=points)
    return _clearance_hinge(d, constants)


def _segment_pair_distance(
    a0: NDArray, a1: NDArray, b0: NDArray, b1: NDArray
) -> NDArray[np.float64]:
    """Minimum distance between segments [a0,a1] and [b0,b1], batched on (..., 2)."""
    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    denom = a * e - b * b
    tiny = 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > tiny, np.clip((b * f - c * e) / np.where(denom > tiny, denom, 1.0), 0.0, 1.0), 0.0)
        t = np.where(e > tiny, (b * s + f) / np.where(e > tiny, e, 1.0), 0.0)
        t_cl = np.clip(t, 0.0, 1.0)
        # re-project s where t needed clamping
        s = np.where(
            np.abs(t - t_cl) > 0,
            np.clip(np.where(a > tiny, (b * t_cl - c) / np.where(a > tiny, a, 1.0), 0.0), 0.0, 1.0),
            s,
        )
    pa = a0 + s[..., None] * d1
    pb = b0 + t_cl[..., None] * d2
    return np.linalg.norm(pa - pb, axis=-1)


def self_coll_cost(
    model: ArmModel,
    q: NDArray,
    constants: CostConstants,
    points: NDArray | None = None,
) -> NDArray[np.float64]:
    """Clearance hinge on the minimum distance between non-adjacent links."""
    q = np.asarray(q, dtype=np.float64)
    n = model.n_joints
    if n < 3:
        return np.zeros(q.shape[:-1])
    if points is None:
        points = forward_kinematics(model, q)
    dmin = None
    for i in range(n):
        for j in range(i + 2, n):
            d = _segment_pair_distance(
                points[..., i, :], points[..., i + 1, :],
                points[..., j, :], points[..., j + 1, :],
            )
            dmin = d if dmin is None else np.minimum(dmin, d)
    return _clearance_hinge(dmin, constants)


def total_cost(
    state: RobotState,
    u: Control,
    ee: NDArray,
    target: Target,
    world: World,
    model: ArmModel,
    weights: CostWeights,
    constants: CostConstants,
    steps_remaining: int,
    dt: float,
) -> CostBreakdown:
    """Evaluate all six terms at one (state, control) and aggregate them."""
    points = forward_kinematics(model, state.q)
    terms = {
        "pose": float(pose_cost(ee, target)),
        "stop": float(stop_cost(state.qdot, steps_remaining, dt, constants)),
        "joint": float(joint_cost(model, state.q, constants)),
        "manip": float(manip_cost(model, state.q, constants, points=points)),
        "self_coll": float(self_coll_cost(model, state.q, constants, points=points)),
        "env_coll": float(env_coll_cost(world, model, state.q, constants, points=points)),
    }
    total = combine_terms(weights=weights, **terms)
    return CostBreakdown(total=float(total), **terms)


def combine_terms(
    weights: CostWeights,
    pose: NDArray,
    stop: NDArray,
    joint: NDArray,
    manip: NDArray,
    self_coll: NDArray,
    env_coll: NDArray,
) -> NDArray[np.float64]:
    """Weighted sum of the six terms (collision terms share alpha_c)."""
    return (
        weights.alpha_p * np.asarray(pose)
        + weights.alpha_s * np.asarray(stop)
        + weights.alpha_j * np.asarray(joint)
        + weights.alpha_m * np.asarray(manip)
        + weights.alpha_c * (np.asarray(self_coll) + np.asarray(env_coll))
    )

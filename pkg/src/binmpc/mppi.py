"""Sampling-based MPC loop: perturb a nominal joint-velocity plan into K
particles, roll each out over the horizon, score with the running cost,
softmax-average into an updated plan, execute the first command, warm-start.

The rollout core is fully vectorized: because the dynamics is a clamped
velocity integrator, all K*H states come from a single cumulative sum and
every cost term is evaluated on the whole batch at once. The public
single-trajectory ``rollout`` goes through the same code path, so scalar and
batched evaluations agree bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import cost as costmod
from .cost import CostBreakdown, CostConstants, CostWeights, Target, combine_terms
from .kinematics import ArmModel, Control, RobotState, forward_kinematics
from .world import World, arm_clearance

__all__ = [
    "MpcConfig",
    "NominalPlan",
    "RolloutResult",
    "StepDiagnostics",
    "MppiController",
    "sample_perturbations",
    "rollout",
    "softmax_weights",
    "update_nominal",
]


@dataclass(frozen=True)
class MpcConfig:
    """Controller hyperparameters; noise_sigma is per joint."""

    horizon: int
    particles: int
    noise_sigma: NDArray[np.float64]
    temperature: float
    dt: float
    seed: int
    discount: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "noise_sigma", np.atleast_1d(np.asarray(self.noise_sigma, dtype=np.float64))
        )
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.particles < 2:
            raise ValueError("need at least 2 particles")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if np.any(self.noise_sigma <= 0):
            raise ValueError("noise_sigma must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class NominalPlan:
    """Horizon-length sequence of joint-velocity commands, shape (H, N)."""

    controls: NDArray[np.float64]

    def __post_init__(self):
        self.controls = np.asarray(self.controls, dtype=np.float64)
        if not np.all(np.isfinite(self.controls)):
            raise ValueError("nominal plan must be finite")


@dataclass
class RolloutResult:
    """States, per-step cost breakdowns and aggregate cost of one particle."""

    states: list[RobotState]
    per_step: list[CostBreakdown]
    total_cost: float
    min_clearance: float


@dataclass
class StepDiagnostics:
    """Per-control-step accounting emitted by the controller."""

    best_cost: float
    nominal_cost: float
    weight_entropy: float
    min_clearance: float
    wall_time_s: float
    rollout_count: int
    degenerate: bool
    updated_plan_cost: float


def sample_perturbations(
    config: MpcConfig, rng: np.random.Generator
) -> NDArray[np.float64]:
    """Zero-mean Gaussian velocity noise, shape (K, H, N).

    Particle 0 is reserved as the zero-noise copy of the nominal plan.
    """
    n = config.noise_sigma.size
    noise = np.zeros((config.particles, config.horizon, n))
    noise[1:] = rng.normal(0.0, 1.0, size=(config.particles - 1, config.horizon, n))
    noise[1:] *= config.noise_sigma
    return noise


def _batch_rollout(
    model: ArmModel,
    world: World,
    state: RobotState,
    controls: NDArray[np.float64],
    target: Target,
    weights: CostWeights,
    constants: CostConstants,
    config: MpcConfig,
):
    """Roll out a (K, H, N) control batch; returns per-step terms and totals.

    A NaN anywhere in a particle's costs turns its total into +inf.
    """
    qdot = np.clip(controls, -model.vel_limit, model.vel_limit)
    q = state.q + config.dt * np.cumsum(qdot, axis=-2)  # (K, H, N)
    points = forward_kinematics(model, q)  # (K, H, N+1, 2)
    ee = points[..., -1, :]
    steps_remaining = np.arange(config.horizon - 1, -1, -1, dtype=np.float64)

    clearance = arm_clearance(world, model, q, constants.samples_per_link, points=points)
    terms = {
        "pose": costmod.pose_cost(ee, target),
        "stop": costmod.stop_cost(qdot, steps_remaining, config.dt, constants),
        "joint": costmod.joint_cost(model, q, constants),
        "manip": costmod.manip_cost(model, q, constants, points=points),
        "self_coll": costmod.self_coll_cost(model, q, constants, points=points),
        "env_coll": costmod._clearance_hinge(clearance, constants),
    }
    per_step_total = combine_terms(weights=weights, **terms)  # (K, H)
    if config.discount != 1.0:
        totals = per_step_total @ (config.discount ** steps_remaining[::-1])
    else:
        totals = np.sum(per_step_total, axis=-1)
    bad = ~np.isfinite(per_step_total).all(axis=-1)
    if np.any(bad):
        totals = np.where(bad, np.inf, totals)
    min_clearance = np.min(clearance, axis=-1)
    return q, qdot, terms, per_step_total, totals, min_clearance


def rollout(
    model: ArmModel,
    world: World,
    state: RobotState,
    controls: NDArray[np.float64],
    target: Target,
    weights: CostWeights,
    constants: CostConstants,
    config: MpcConfig,
) -> RolloutResult:
    """Simulate one control sequence of length H and accumulate its cost."""
    controls = np.asarray(controls, dtype=np.float64)
    if controls.shape != (config.horizon, model.n_joints):
        raise ValueError(
            f"controls must be (H, N) = ({config.horizon}, {model.n_joints})"
        )
    q, qdot, terms, per_step_total, totals, min_clear = _batch_rollout(
        model, world, state, controls[None], target, weights, constants, config
    )
    states = [state]
    per_step = []
    for t in range(config.horizon):
        states.append(
            RobotState(q=q[0, t], qdot=qdot[0, t], t=state.t + (t + 1) * config.dt)
        )
        per_step.append(
            CostBreakdown(
                pose=float(terms["pose"][0, t]),
                stop=float(terms["stop"][0, t]),
                joint=float(terms["joint"][0, t]),
                manip=float(terms["manip"][0, t]),
                self_coll=float(terms["self_coll"][0, t]),
                env_coll=float(terms["env_coll"][0, t]),
                total=float(per_step_total[0, t]),
            )
        )
    return RolloutResult(
        states=states,
        per_step=per_step,
        total_cost=float(totals[0]),
        min_clearance=float(min_clear[0]),
    )


def softmax_weights(costs: NDArray, temperature: float) -> tuple[NDArray[np.float64], bool]:
    """Exponentiated-cost weights with min-baseline subtraction.

    Returns (weights, degenerate). Infinite costs get zero weight; if every
    cost is infinite the weights fall back to uniform and the degeneracy flag
    is set.
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.size < 2:
        raise ValueError("need at least 2 particle costs")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    finite = np.isfinite(costs)
    if not np.any(finite):
        return np.full(costs.shape, 1.0 / costs.size), True
    c_min = np.min(costs[finite])
    w = np.where(finite, np.exp(-(np.where(finite, costs, c_min) - c_min) / temperature), 0.0)
    return w / np.sum(w), False


def update_nominal(
    nominal: NominalPlan,
    perturbations: NDArray[np.float64],
    weights: NDArray[np.float64],
    vel_limit: NDArray[np.float64],
) -> NominalPlan:
    """Noise-weighted plan update, clamped to the joint velocity limits."""
    delta = np.einsum("k,khn->hn", weights, perturbations)
    return NominalPlan(np.clip(nominal.controls + delta, -vel_limit, vel_limit))


class MppiController:
    """Single-owner MPC stepper: holds the nominal plan and the RNG root.

    Per-step noise is drawn from a seed-and-step-index derived stream, so the
    closed-loop trajectory is a pure function of (seed, scenario) regardless
    of scheduling.
    """

    def __init__(
        self,
        model: ArmModel,
        world: World,
        weights: CostWeights,
        constants: CostConstants,
        config: MpcConfig,
        score_updated_plan: bool = False,
    ):
        if config.noise_sigma.size not in (1, model.n_joints):
            raise ValueError("noise_sigma must be scalar or per-joint")
        if config.noise_sigma.size == 1:
            config = MpcConfig(
                horizon=config.horizon,
                particles=config.particles,
                noise_sigma=np.full(model.n_joints, config.noise_sigma[0]),
                temperature=config.temperature,
                dt=config.dt,
                seed=config.seed,
                discount=config.discount,
            )
        self.model = model
        self.world = world
        self.weights = weights
        self.constants = constants
        self.config = config
        self.nominal = NominalPlan(np.zeros((config.horizon, model.n_joints)))
        self.score_updated_plan = score_updated_plan
        self._step_index = 0

    def reset(self):
        self.nominal = NominalPlan(
            np.zeros((self.config.horizon, self.model.n_joints))
        )
        self._step_index = 0

    def control_step(
        self, state: RobotState, target: Target
    ) -> tuple[Control, StepDiagnostics]:
        """One MPC iteration: sample, roll out, reweight, execute, shift."""
        t0 = time.perf_counter()
        cfg = self.config
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(self._step_index,))
        )
        noise = sample_perturbations(cfg, rng)
        controls = self.nominal.controls[None] + noise
        _, _, _, _, totals, min_clear = _batch_rollout(
            self.model, self.world, state, controls, target,
            self.weights, self.constants, cfg,
        )
        w, degenerate = softmax_weights(totals, cfg.temperature)
        updated = update_nominal(self.nominal, noise, w, self.model.vel_limit)

        # optional rescore of the updated plan (one extra rollout)
        updated_total = float("nan")
        if self.score_updated_plan:
            updated_total = float(
                _batch_rollout(
                    self.model, self.world, state, updated.controls[None], target,
                    self.weights, self.constants, cfg,
                )[4][0]
            )
        command = Control(np.clip(updated.controls[0], -self.model.vel_limit, self.model.vel_limit))

        shifted = np.zeros_like(updated.controls)
        shifted[:-1] = updated.controls[1:]
        self.nominal = NominalPlan(shifted)
        self._step_index += 1

        pw = w[w > 0]
        entropy = float(-np.sum(pw * np.log(pw)))
        diag = StepDiagnostics(
            best_cost=float(np.min(totals)),
            nominal_cost=float(totals[0]),
            weight_entropy=entropy,
            min_clearance=float(min_clear[int(np.argmin(totals))]),
            wall_time_s=time.perf_counter() - t0,
            rollout_count=cfg.particles * cfg.horizon,
            degenerate=degenerate,
            updated_plan_cost=updated_total,
        )
        return command, diag

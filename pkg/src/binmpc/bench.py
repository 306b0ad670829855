"""Experiment harness: config loading, seeded trials over the
{horizon x hierarchy-mode} grid, aggregation, and CSV/JSON output."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .cost import CostConstants, CostWeights, Target, estimate_max_manipulability
from .hierarchy import (
    Status,
    SupervisorState,
    TaskPlan,
    flat_supervisor,
    hierarchical_supervisor,
    supervisor_step,
)
from .kinematics import ArmModel, RobotState, ee_position, step_dynamics
from .mppi import MpcConfig, MppiController
from .world import World, build_bin_array

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TrialResult",
    "WaypointOutcome",
    "CellSummary",
    "default_config_path",
    "load_config",
    "run_trial",
    "run_experiment",
    "write_results",
]

TRIALS_CSV_HEADER = ["horizon", "mode", "trial", "waypoint", "success", "time_s", "path_m"]
STEPS_CSV_HEADER = [
    "horizon", "mode", "trial", "step", "sim_t",
    "best_cost", "nominal_cost", "entropy", "min_clearance", "rollout_count", "wall_ms",
]


class ConfigError(ValueError):
    """Bad experiment configuration file or values."""


def default_config_path() -> Path:
    return Path(resources.files("binmpc").joinpath("data/default_config.json"))


def load_config(path: str | os.PathLike | None = None) -> dict:
    """Read a JSON experiment config; None loads the shipped default."""
    p = Path(path) if path is not None else default_config_path()
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    for section in ("arm", "world", "cost", "mppi", "scenario", "experiment"):
        if section not in raw:
            raise ConfigError(f"config {p} missing section {section!r}")
    return raw


@dataclass
class ExperimentConfig:
    """Fully constructed experiment: domain objects plus the raw config dict."""

    raw: dict
    model: ArmModel
    world: World
    weights: CostWeights
    constants: CostConstants
    plan: TaskPlan
    start_q: np.ndarray
    horizons: list[int]
    modes: list[str]
    trials: int
    base_seed: int
    failure_mode: str
    particles: int
    noise_sigma: float
    temperature: float
    dt: float
    discount: float
    clearance_margin: float
    v_settle: float
    budget_s: float

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            arm = raw["arm"]
            model = ArmModel(
                link_lengths=arm["link_lengths"],
                joint_lower=arm["joint_lower"],
                joint_upper=arm["joint_upper"],
                vel_limit=arm["vel_limit"],
                base_position=arm.get("base_position", (0.0, 0.0)),
            )
            world = build_bin_array(**raw["world"])
            c = raw["cost"]
            weights = CostWeights(**c["weights"])
            constants = CostConstants(
                d_safe=c["d_safe"], k_pen=c["k_pen"], eps=c["eps"],
                margin=c["margin"], c_max=c["c_max"], a_max=c["a_max"],
                samples_per_link=c["samples_per_link"],
                mu_max=estimate_max_manipulability(
                    model, samples=c.get("mu_max_samples", 100_000),
                    seed=c.get("mu_max_seed", 0),
                ),
            )
            scen = raw["scenario"]
            plan = TaskPlan(
                waypoints=tuple(
                    Target(position=w["position"], reach_tolerance=w["tolerance"])
                    for w in scen["waypoints"]
                ),
                labels=tuple(w["region"] for w in scen["waypoints"]),
            )
            plan.validate(world)
            exp = raw["experiment"]
            mp = raw["mppi"]
            failure_mode = exp.get("failure_mode", "continue")
            if failure_mode not in ("continue", "halt"):
                raise ConfigError(f"unknown failure_mode {failure_mode!r}")
            modes = list(exp["modes"])
            for m in modes:
                if m not in ("flat", "hierarchical"):
                    raise ConfigError(f"unknown hierarchy mode {m!r}")
            cfg = cls(
                raw=raw,
                model=model,
                world=world,
                weights=weights,
                constants=constants,
                plan=plan,
                start_q=np.asarray(scen["start_q"], dtype=np.float64),
                horizons=[int(h) for h in exp["horizons"]],
                modes=modes,
                trials=int(exp["trials"]),
                base_seed=int(exp["base_seed"]),
                failure_mode=failure_mode,
                particles=int(mp["particles"]),
                noise_sigma=float(mp["noise_sigma"]),
                temperature=float(mp["temperature"]),
                dt=float(mp["dt"]),
                discount=float(mp.get("discount", 1.0)),
                clearance_margin=float(scen.get("clearance_margin", 0.05)),
                v_settle=float(scen.get("v_settle", 0.1)),
                budget_s=float(scen.get("waypoint_budget_s", 12.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from exc
        if cfg.trials < 1 or not cfg.horizons or not cfg.plan.waypoints:
            raise ConfigError("trials >= 1, nonempty horizons and waypoints required")
        return cfg

    def mpc_config(self, horizon: int, seed: int) -> MpcConfig:
        return MpcConfig(
            horizon=horizon,
            particles=self.particles,
            noise_sigma=np.full(self.model.n_joints, self.noise_sigma),
            temperature=self.temperature,
            dt=self.dt,
            seed=seed,
            discount=self.discount,
        )

    def make_supervisor(self, mode: str) -> SupervisorState:
        if mode == "flat":
            return flat_supervisor(self.plan, self.budget_s, self.v_settle)
        ee0 = ee_position(self.model, self.start_q)
        return hierarchical_supervisor(
            self.plan, self.world, ee0, self.model,
            self.budget_s, self.v_settle, self.clearance_margin,
        )


@dataclass
class WaypointOutcome:
    success: bool
    time_s: float | None
    path_m: float | None


@dataclass
class TrialResult:
    horizon: int
    mode: str
    trial: int
    waypoints: list[WaypointOutcome]
    elapsed_s: float
    traversed_m: float
    control_steps: int
    rollout_count: int
    wall_time_s: float
    invalid: bool = False
    steps: list[dict] = field(default_factory=list, repr=False)


@dataclass
class CellSummary:
    horizon: int
    mode: str
    trials: int
    invalid_trials: int
    success_rate: list[float]
    time_mean: list[float | None]
    time_std: list[float | None]
    path_mean: list[float | None]
    path_std: list[float | None]
    wall_per_step_s: float


def trial_seed(base_seed: int, horizon: int, mode: str, trial: int) -> int:
    """Stable 64-bit seed for one trial cell entry."""
    key = f"{base_seed}:{horizon}:{mode}:{trial}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def run_trial(
    cfg: ExperimentConfig,
    horizon: int,
    mode: str,
    trial_index: int,
    record_steps: bool = False,
) -> TrialResult:
    """Run one closed-loop trial: supervisor + MPC until done or timed out."""
    seed = trial_seed(cfg.base_seed, horizon, mode, trial_index)
    controller = MppiController(
        cfg.model, cfg.world, cfg.weights, cfg.constants,
        cfg.mpc_config(horizon, seed),
    )
    sup = cfg.make_supervisor(mode)
    n_wp = len(cfg.plan.waypoints)
    outcomes: list[WaypointOutcome | None] = [None] * n_wp

    state = RobotState(q=cfg.start_q, qdot=np.zeros(cfg.model.n_joints), t=0.0)
    ee = ee_position(cfg.model, state.q)
    path = 0.0
    steps = 0
    wall = 0.0
    invalid = False
    step_rows: list[dict] = []
    max_steps = int(math.ceil(n_wp * cfg.budget_s / cfg.dt)) + 10

    while steps < max_steps:
        target = None
        while True:
            prev = sup.active
            target, status = supervisor_step(sup, state, ee, state.t)
            if status in (Status.ADVANCED, Status.DONE):
                if prev is not None and not prev.injected:
                    outcomes[prev.original_index] = WaypointOutcome(True, state.t, path)
                if status == Status.DONE:
                    break
                continue
            if status == Status.TIMEOUT:
                idx = sup.active.original_index
                outcomes[idx] = WaypointOutcome(False, None, None)
                if cfg.failure_mode == "halt":
                    for k in range(idx + 1, n_wp):
                        outcomes[k] = WaypointOutcome(False, None, None)
                    sup.cursor = len(sup.expanded)
                    break
                sup.skip_to_next_original(state.t)
                continue
            break
        if sup.done:
            break

        u, diag = controller.control_step(state, target)
        state = step_dynamics(cfg.model, state, u, cfg.dt)
        if not (np.all(np.isfinite(state.q)) and np.all(np.isfinite(state.qdot))):
            invalid = True
            break
        new_ee = ee_position(cfg.model, state.q)
        path += float(np.linalg.norm(new_ee - ee))
        ee = new_ee
        steps += 1
        wall += diag.wall_time_s
        if record_steps:
            step_rows.append({
                "horizon": horizon, "mode": mode, "trial": trial_index,
                "step": steps, "sim_t": state.t,
                "best_cost": diag.best_cost, "nominal_cost": diag.nominal_cost,
                "entropy": diag.weight_entropy, "min_clearance": diag.min_clearance,
                "rollout_count": diag.rollout_count, "wall_ms": diag.wall_time_s * 1e3,
            })

    for k in range(n_wp):
        if outcomes[k] is None:
            outcomes[k] = WaypointOutcome(False, None, None)

    return TrialResult(
        horizon=horizon,
        mode=mode,
        trial=trial_index,
        waypoints=outcomes,  # type: ignore[arg-type]
        elapsed_s=state.t,
        traversed_m=path,
        control_steps=steps,
        rollout_count=steps * cfg.particles * horizon,
        wall_time_s=wall,
        invalid=invalid,
        steps=step_rows,
    )


def summarize_cell(
    cfg: ExperimentConfig, horizon: int, mode: str, trials: list[TrialResult]
) -> CellSummary:
    n_wp = len(cfg.plan.waypoints)
    valid = [t for t in trials if not t.invalid]
    rates, t_mean, t_std, p_mean, p_std = [], [], [], [], []
    for k in range(n_wp):
        succ = [t.waypoints[k] for t in valid if t.waypoints[k].success]
        rates.append(len(succ) / len(trials) if trials else 0.0)
        if succ:
            ts = np.array([w.time_s for w in succ])
            ps = np.array([w.path_m for w in succ])
            t_mean.append(float(ts.mean()))
            t_std.append(float(ts.std()))
            p_mean.append(float(ps.mean()))
            p_std.append(float(ps.std()))
        else:
            t_mean.append(None)
            t_std.append(None)
            p_mean.append(None)
            p_std.append(None)
    total_steps = sum(t.control_steps for t in valid)
    total_wall = sum(t.wall_time_s for t in valid)
    return CellSummary(
        horizon=horizon,
        mode=mode,
        trials=len(trials),
        invalid_trials=len(trials) - len(valid),
        success_rate=rates,
        time_mean=t_mean,
        time_std=t_std,
        path_mean=p_mean,
        path_std=p_std,
        wall_per_step_s=total_wall / total_steps if total_steps else 0.0,
    )


def _workers() -> int:
    env = os.environ.get("BINMPC_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def run_experiment(
    cfg: ExperimentConfig, record_steps: bool = False, progress=None
) -> tuple[list[CellSummary], list[TrialResult]]:
    """Run every (horizon, mode, trial) cell entry and aggregate per cell."""
    jobs = [
        (h, m, i)
        for h in cfg.horizons
        for m in cfg.modes
        for i in range(cfg.trials)
    ]
    workers = _workers()

    def one(job):
        h, m, i = job
        res = run_trial(cfg, h, m, i, record_steps=record_steps)
        if progress:
            progress(res)
        return res

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    # deterministic ordering regardless of scheduling
    results.sort(key=lambda t: (cfg.horizons.index(t.horizon), cfg.modes.index(t.mode), t.trial))
    summaries = [
        summarize_cell(cfg, h, m, [t for t in results if t.horizon == h and t.mode == m])
        for h in cfg.horizons
        for m in cfg.modes
    ]
    return summaries, results


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def write_results(
    summaries: list[CellSummary],
    trials: list[TrialResult],
    out_dir: str | os.PathLike,
    raw_config: dict | None = None,
    write_steps: bool = False,
) -> dict[str, Path]:
    """Emit trials.csv, summary.json and (optionally) steps.csv."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"trials": out / "trials.csv", "summary": out / "summary.json"}
        with open(paths["trials"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRIALS_CSV_HEADER)
            for t in trials:
                for k, wp in enumerate(t.waypoints):
                    w.writerow([
                        t.horizon, t.mode, t.trial, k + 1,
                        int(wp.success), _fmt(wp.time_s), _fmt(wp.path_m),
                    ])
        payload = {
            "config": raw_config,
            "cells": [asdict(s) for s in summaries],
        }
        with open(paths["summary"], "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        if write_steps:
            paths["steps"] = out / "steps.csv"
            with open(paths["steps"], "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(STEPS_CSV_HEADER)
                for t in trials:
                    for row in t.steps:
                        w.writerow([row[k] for k in STEPS_CSV_HEADER])
        return paths
    except OSError as exc:
        raise OSError(f"failed writing results under {out}: {exc}") from exc

"""Shared fixtures: the shipped default config and a small fast scenario."""

from __future__ import annotations

import numpy as np
import pytest

from binmpc.bench import ExperimentConfig, load_config
from binmpc.kinematics import ArmModel
from binmpc.world import build_bin_array


@pytest.fixture(scope="session")
def default_raw() -> dict:
    return load_config()


@pytest.fixture(scope="session")
def default_cfg(default_raw) -> ExperimentConfig:
    return ExperimentConfig.from_dict(default_raw)


@pytest.fixture(scope="session")
def default_world(default_cfg):
    return default_cfg.world


@pytest.fixture(scope="session")
def default_model(default_cfg):
    return default_cfg.model


@pytest.fixture
def arm3() -> ArmModel:
    """Unit-link 3-joint arm used by the hand-computed examples."""
    return ArmModel(
        link_lengths=[1.0, 1.0, 1.0],
        joint_lower=[-np.pi] * 3,
        joint_upper=[np.pi] * 3,
        vel_limit=[1.0] * 3,
    )


@pytest.fixture
def arm2() -> ArmModel:
    return ArmModel(
        link_lengths=[1.0, 1.0],
        joint_lower=[-np.pi] * 2,
        joint_upper=[np.pi] * 2,
        vel_limit=[1.0] * 2,
    )


@pytest.fixture
def unit_box_world():
    """One obstacle: the unit square [0,1] x [0,1]."""
    from binmpc.world import Box, World

    return World(
        obstacles=(Box((0.0, 0.0), (1.0, 1.0)),),
        regions={},
        bin_opening_y=1.0,
    )


def make_mini_raw(
    waypoints=None, horizons=(5,), modes=("flat", "hierarchical"), trials=2,
    budget_s=4.0, particles=8, seed=7,
) -> dict:
    """A small 2-link scenario whose trials finish in well under a second."""
    if waypoints is None:
        waypoints = [
            {"position": [0.4, 0.4], "region": "free", "tolerance": 0.05},
            {"position": [0.55, 0.35], "region": "free", "tolerance": 0.05},
        ]
    return {
        "arm": {
            "link_lengths": [0.4, 0.4],
            "joint_lower": [-3.1, -3.1],
            "joint_upper": [3.1, 3.1],
            "vel_limit": [1.5, 1.5],
            "base_position": [0.0, 0.0],
        },
        "world": {
            "bin_count": 2,
            "bin_width": 0.3,
            "bin_depth": 0.2,
            "wall_thickness": 0.02,
            "row_x0": 0.2,
            "floor_y": 0.0,
            "floor_thickness": 0.04,
            "tote": {
                "x0": -0.6, "width": 0.2, "depth": 0.1,
                "wall_thickness": 0.02, "floor_y": 0.0,
            },
        },
        "cost": {
            "weights": {
                "alpha_p": 10.0, "alpha_s": 1.0, "alpha_j": 50.0,
                "alpha_m": 0.1, "alpha_c": 100.0,
            },
            "d_safe": 0.02, "k_pen": 10.0, "eps": 1e-4, "margin": 0.1,
            "c_max": 100.0, "a_max": 2.0, "samples_per_link": 8,
            "mu_max_samples": 2000, "mu_max_seed": 0,
        },
        "mppi": {
            "particles": particles, "noise_sigma": 0.35,
            "temperature": 0.5, "dt": 0.05, "discount": 1.0,
        },
        "scenario": {
            # ee starts at (0.4, 0.4): straight up then elbow back down
            "start_q": [np.pi / 2, -np.pi / 2],
            "waypoints": list(waypoints),
            "clearance_margin": 0.05,
            "v_settle": 0.1,
            "waypoint_budget_s": budget_s,
        },
        "experiment": {
            "horizons": list(horizons),
            "modes": list(modes),
            "trials": trials,
            "base_seed": seed,
            "failure_mode": "continue",
        },
    }


@pytest.fixture
def mini_raw() -> dict:
    return make_mini_raw()


@pytest.fixture
def mini_cfg(mini_raw) -> ExperimentConfig:
    return ExperimentConfig.from_dict(mini_raw)


@pytest.fixture
def small_world():
    """Two 0.3-wide bins plus a tote, used by the world/hierarchy tests."""
    return build_bin_array(
        bin_count=2, bin_width=0.3, bin_depth=0.2, wall_thickness=0.02,
        row_x0=0.2, floor_y=0.0, floor_thickness=0.04,
        tote={"x0": -0.6, "width": 0.2, "depth": 0.1,
              "wall_thickness": 0.02, "floor_y": 0.0},
    )

"""Sampling-based MPC and hierarchical waypoint control for simulated planar
bin picking, plus the benchmark harness that sweeps the planning horizon."""

from .cost import CostBreakdown, CostConstants, CostWeights, Target
from .kinematics import ArmModel, Control, RobotState
from .mppi import MpcConfig, MppiController
from .world import Box, World, build_bin_array

__all__ = [
    "ArmModel",
    "RobotState",
    "Control",
    "Box",
    "World",
    "build_bin_array",
    "CostWeights",
    "CostBreakdown",
    "CostConstants",
    "Target",
    "MpcConfig",
    "MppiController",
]

__version__ = "0.1.0"

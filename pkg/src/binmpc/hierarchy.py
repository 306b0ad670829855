"""High-level supervision: waypoint expansion for bin crossings and the state
machine that advances through the (possibly expanded) target list.

The heuristic injects a retract waypoint above the current container and a
transit waypoint above the next one whenever consecutive targets live in
different regions, turning each leg into a straight, obstacle-free reach the
short-horizon MPC can solve on its own.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .cost import Target
from .kinematics import ArmModel, RobotState, reachable_annulus
from .world import World, region_of

__all__ = [
    "TaskPlan",
    "PlanError",
    "ExpandedTarget",
    "SupervisorState",
    "Status",
    "expand_waypoints",
    "flat_supervisor",
    "hierarchical_supervisor",
    "supervisor_step",
]


class PlanError(ValueError):
    """Task plan invalid for the given world/arm."""


class Status(enum.Enum):
    RUNNING = "running"
    ADVANCED = "advanced"
    TIMEOUT = "timeout"
    DONE = "done"


@dataclass(frozen=True)
class TaskPlan:
    """Ordered original waypoints with their region labels."""

    waypoints: tuple[Target, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.waypoints:
            raise PlanError("plan needs at least one waypoint")
        if len(self.labels) != len(self.waypoints):
            raise PlanError("one region label per waypoint required")

    def validate(self, world: World):
        for wp, label in zip(self.waypoints, self.labels):
            if label != "free" and label not in world.regions:
                raise PlanError(f"unknown region label {label!r}")
            actual = region_of(world, wp.position)
            if actual != label:
                raise PlanError(
                    f"waypoint at {wp.position} labeled {label!r} but lies in {actual!r}"
                )


@dataclass(frozen=True)
class ExpandedTarget:
    """One entry of the expanded target list.

    original_index is the original waypoint this entry belongs to; injected
    helpers share the index (and the time budget) of the waypoint they precede.
    """

    target: Target
    injected: bool
    original_index: int


@dataclass
class SupervisorState:
    """Cursor over the expanded target list plus deadline bookkeeping."""

    expanded: list[ExpandedTarget]
    budget_s: float
    v_settle: float
    cursor: int = 0
    deadline: float = field(init=False)

    def __post_init__(self):
        if not self.expanded:
            raise PlanError("expanded target list is empty")
        self.deadline = self.budget_s

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.expanded)

    @property
    def active(self) -> ExpandedTarget | None:
        return None if self.done else self.expanded[self.cursor]

    def n_original(self) -> int:
        return 1 + max(e.original_index for e in self.expanded)

    def skip_to_next_original(self, clock: float):
        """After a timeout, jump past the failed original waypoint's group."""
        failed = self.expanded[self.cursor].original_index
        while not self.done and self.expanded[self.cursor].original_index == failed:
            self.cursor += 1
        self.deadline = clock + self.budget_s


def _check_reachable(model: ArmModel, target: Target):
    inner, outer = reachable_annulus(model)
    r = float(np.linalg.norm(np.asarray(target.position) - model.base_position))
    if not (inner - 1e-9 <= r <= outer + 1e-9):
        raise PlanError(
            f"waypoint at {target.position} is outside the reachable annulus "
            f"[{inner:.3f}, {outer:.3f}] (r = {r:.3f})"
        )


def expand_waypoints(
    plan: TaskPlan,
    world: World,
    ee_start: NDArray,
    model: ArmModel,
    clearance_margin: float = 0.05,
    injected_tolerance: float = 0.03,
) -> list[ExpandedTarget]:
    """Insert retract/transit helpers wherever consecutive targets cross regions.

    Walking the plan with a current-position tracker: when the region changes,
    (a) climb out of the current container to just above the bin opening, then
    (b) travel at that height to directly above the next container, before
    descending to the original waypoint. Same-region consecutive targets and
    targets already vertically accessible get no helpers.
    """
    plan.validate(world)
    h = world.bin_opening_y + clearance_margin
    cur_pos = np.asarray(ee_start, dtype=np.float64)
    cur_region = region_of(world, cur_pos)

    out: list[ExpandedTarget] = []

    def inject(pos, k):
        t = Target(position=np.asarray(pos), reach_tolerance=injected_tolerance)
        _check_reachable(model, t)
        out.append(ExpandedTarget(target=t, injected=True, original_index=k))

    for k, (wp, label) in enumerate(zip(plan.waypoints, plan.labels)):
        _check_reachable(model, wp)
        if label == cur_region:
            pass  # same container: direct reach
        elif label == "free":
            # free targets at or above retract height need no helpers; lower
            # free targets still get a climb-out of the current container
            if wp.position[1] < h and (cur_region != "free" or cur_pos[1] < h):
                inject((cur_pos[0], h), k)
        else:
            from_pos = cur_pos
            if cur_region != "free" or cur_pos[1] < h:
                inject((cur_pos[0], h), k)
                from_pos = out[-1].target.position
            box = world.regions[label]
            accessible = (
                from_pos[1] >= world.bin_opening_y
                and box.min[0] <= from_pos[0] <= box.max[0]
            )
            if not accessible:
                inject((wp.position[0], h), k)
        out.append(ExpandedTarget(target=wp, injected=False, original_index=k))
        cur_pos = np.asarray(wp.position, dtype=np.float64)
        cur_region = label
    return out


def flat_supervisor(plan: TaskPlan, budget_s: float, v_settle: float) -> SupervisorState:
    """Baseline: original waypoints only, same advancement/timeout semantics."""
    expanded = [
        ExpandedTarget(target=wp, injected=False, original_index=k)
        for k, wp in enumerate(plan.waypoints)
    ]
    return SupervisorState(expanded=expanded, budget_s=budget_s, v_settle=v_settle)


def hierarchical_supervisor(
    plan: TaskPlan,
    world: World,
    ee_start: NDArray,
    model: ArmModel,
    budget_s: float,
    v_settle: float,
    clearance_margin: float = 0.05,
) -> SupervisorState:
    """Supervisor over the retract/transit expanded target list."""
    expanded = expand_waypoints(plan, world, ee_start, model, clearance_margin)
    return SupervisorState(expanded=expanded, budget_s=budget_s, v_settle=v_settle)


def supervisor_step(
    sup: SupervisorState, state: RobotState, ee: NDArray, clock: float
) -> tuple[Target | None, Status]:
    """Advance the cursor on reach-and-settle; flag deadline overruns.

    Returns the active target (None when done) and the transition status.
    The deadline resets when a new original waypoint's group becomes active;
    injected helpers share their original's budget.
    """
    if sup.done:
        return None, Status.DONE
    entry = sup.expanded[sup.cursor]
    dist = float(np.linalg.norm(np.asarray(ee) - entry.target.position))
    settled = float(np.max(np.abs(state.qdot))) <= sup.v_settle
    if dist <= entry.target.reach_tolerance and settled:
        prev_index = entry.original_index
        sup.cursor += 1
        if sup.done:
            return None, Status.DONE
        nxt = sup.expanded[sup.cursor]
        if nxt.original_index != prev_index:
            sup.deadline = clock + sup.budget_s
        return nxt.target, Status.ADVANCED
    if clock > sup.deadline:
        return entry.target, Status.TIMEOUT
    return entry.target, Status.RUNNING

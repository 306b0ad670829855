"""Cost terms: hand-computed values, branch continuity, and aggregate identity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binmpc.cost import (
    CostBreakdown,
    CostConstants,
    CostWeights,
    Target,
    combine_terms,
    env_coll_cost,
    estimate_max_manipulability,
    joint_cost,
    manip_cost,
    pose_cost,
    self_coll_cost,
    stop_cost,
    total_cost,
)
from binmpc.cost import _clearance_hinge
from binmpc.kinematics import ArmModel, Control, RobotState, ee_position
from binmpc.world import Box, World

CONST = CostConstants()


def _weights():
    return CostWeights(alpha_p=10.0, alpha_s=1.0, alpha_j=50.0, alpha_m=0.1,
                       alpha_c=100.0)


# -------------------------------------------------------------- weights


def test_weights_reject_negative():
    with pytest.raises(ValueError):
        CostWeights(-1.0, 1.0, 1.0, 1.0, 1.0)


def test_weights_reject_all_zero():
    with pytest.raises(ValueError):
        CostWeights(0.0, 0.0, 0.0, 0.0, 0.0)


def test_target_rejects_nonpositive_tolerance():
    with pytest.raises(ValueError):
        Target(position=(0.0, 0.0), reach_tolerance=0.0)


# ----------------------------------------------------------------- pose


def test_pose_zero_at_target():
    t = Target(position=(0.3, -0.2), reach_tolerance=0.05)
    assert pose_cost(np.array([0.3, -0.2]), t) == pytest.approx(0.0)


def test_pose_is_euclidean_distance():
    t = Target(position=(0.0, 0.0), reach_tolerance=0.05)
    assert pose_cost(np.array([3.0, 4.0]), t) == pytest.approx(5.0)


def test_pose_translation_invariance():
    rng = np.random.default_rng(0)
    for _ in range(20):
        ee = rng.normal(size=2)
        tp = rng.normal(size=2)
        shift = rng.normal(size=2)
        a = pose_cost(ee, Target(tp, 0.05))
        b = pose_cost(ee + shift, Target(tp + shift, 0.05))
        assert a == pytest.approx(b)


# ----------------------------------------------------------------- stop


def test_stop_zero_at_rest():
    assert stop_cost(np.zeros(3), 5, 0.05, CONST) == pytest.approx(0.0)


def test_stop_full_speed_with_no_steps_left():
    assert stop_cost(np.array([0.4, 0.0, 0.0]), 0, 0.05, CONST) == pytest.approx(0.4)


def test_stop_budget_absorbs_small_speeds():
    # 3 steps x a_max(2.0) x dt(0.05) = 0.3 of shed capacity per joint
    assert stop_cost(np.array([0.3, 0.0, 0.0]), 3, 0.05, CONST) == pytest.approx(0.0)
    assert stop_cost(np.array([0.5, 0.0, 0.0]), 3, 0.05, CONST) == pytest.approx(0.2)


def test_stop_matches_decel_rollout_oracle():
    # a joint braking at a_max each step stops exactly when the budget says so
    dt, a_max = 0.05, CONST.a_max
    rng = np.random.default_rng(1)
    for _ in range(50):
        qdot = rng.uniform(0.0, 2.0)
        steps = rng.integers(0, 25)
        v = qdot
        for _ in range(int(steps)):
            v = max(0.0, v - a_max * dt)
        assert stop_cost(np.array([qdot]), int(steps), dt, CONST) == pytest.approx(v)


# ---------------------------------------------------------------- joint


def test_joint_zero_at_midrange():
    m = ArmModel([1, 1], [-1, -1], [1, 1], [1, 1])
    assert joint_cost(m, np.zeros(2), CONST) == pytest.approx(0.0)


def test_joint_penetration_plus_saturated_barrier():
    m = ArmModel([1, 1], [-1, -1], [1, 1], [1, 1])
    # 0.2 past the upper limit: viol^2 + margin^2 = 0.04 + 0.01
    assert joint_cost(m, np.array([1.2, 0.0]), CONST) == pytest.approx(0.05)


def test_joint_barrier_inside_margin():
    m = ArmModel([1, 1], [-1, -1], [1, 1], [1, 1])
    # 0.04 from the limit with margin 0.1: barrier (0.06)^2, no violation
    assert joint_cost(m, np.array([0.96, 0.0]), CONST) == pytest.approx(0.0036)


def test_joint_monotone_toward_limit():
    m = ArmModel([1, 1], [-1, -1], [1, 1], [1, 1])
    qs = np.linspace(0.0, 1.3, 40)
    costs = [float(joint_cost(m, np.array([q, 0.0]), CONST)) for q in qs]
    assert all(b >= a - 1e-15 for a, b in zip(costs, costs[1:]))


# ---------------------------------------------------------------- manip


def test_manip_at_singularity_hits_ceiling(arm3):
    c = float(manip_cost(arm3, np.zeros(3), CONST))
    assert c == pytest.approx(CONST.c_max)


def test_manip_near_zero_at_best_posture(arm2):
    const = CostConstants(mu_max=1.0)
    # 2-link right angle has mu = 1 = mu_max
    assert float(manip_cost(arm2, np.array([0.0, np.pi / 2]), const)) == pytest.approx(
        0.0, abs=1e-9
    )


def test_manip_decreasing_in_manipulability(arm2):
    const = CostConstants(mu_max=1.0)
    elbows = np.linspace(0.05, np.pi / 2, 30)
    costs = [float(manip_cost(arm2, np.array([0.0, e]), const)) for e in elbows]
    assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))


def test_estimate_max_manipulability_two_link(arm2):
    est = estimate_max_manipulability(arm2, samples=20000, seed=0)
    assert est == pytest.approx(1.0, abs=0.01)


# ------------------------------------------------------------- collision


def test_hinge_zero_beyond_safe_distance():
    assert _clearance_hinge(np.array(0.5), CONST) == pytest.approx(0.0)
    assert _clearance_hinge(np.array(CONST.d_safe), CONST) == pytest.approx(0.0)


def test_hinge_one_at_contact():
    assert _clearance_hinge(np.array(0.0), CONST) == pytest.approx(1.0)


def test_hinge_linear_in_penetration():
    assert _clearance_hinge(np.array(-0.05), CONST) == pytest.approx(1.5)


def test_hinge_continuous_at_branch_points():
    h = 1e-12
    for d0 in (CONST.d_safe, 0.0):
        lo = float(_clearance_hinge(np.array(d0 - h), CONST))
        hi = float(_clearance_hinge(np.array(d0 + h), CONST))
        assert abs(hi - lo) <= 1e-9


def test_hinge_monotone_nonincreasing():
    ds = np.linspace(-0.1, 0.1, 400)
    vals = _clearance_hinge(ds, CONST)
    assert np.all(np.diff(vals) <= 1e-12)


def test_env_coll_far_from_obstacles(unit_box_world):
    m = ArmModel([0.5, 0.5], [-np.pi] * 2, [np.pi] * 2, [1, 1],
                 base_position=(4.0, 0.5))
    assert float(env_coll_cost(unit_box_world, m, np.zeros(2), CONST)) == 0.0


def test_env_coll_penetrating_link(unit_box_world):
    m = ArmModel([2.0, 0.5], [-np.pi] * 2, [np.pi] * 2, [1, 1],
                 base_position=(-0.5, 0.5))
    assert float(env_coll_cost(unit_box_world, m, np.zeros(2), CONST)) > 1.0


def test_self_coll_zero_for_straight_arm(arm3):
    assert float(self_coll_cost(arm3, np.zeros(3), CONST)) == 0.0


def test_self_coll_zero_for_two_links(arm2):
    # only non-adjacent pairs count, so a 2-link arm can never self-collide
    q = np.array([0.0, 3.1])
    assert float(self_coll_cost(arm2, q, CONST)) == 0.0


def test_self_coll_penalizes_folded_arm(arm3):
    # fold link 3 back onto link 1: contact puts the hinge at its peak of 1
    q = np.array([0.0, 3.1, 3.1])
    assert float(self_coll_cost(arm3, q, CONST)) == pytest.approx(1.0, abs=1e-6)


# ------------------------------------------------------------- aggregate


def _random_breakdown(default_world, default_model, seed):
    rng = np.random.default_rng(seed)
    q = rng.uniform(default_model.joint_lower, default_model.joint_upper)
    qdot = rng.uniform(-1.5, 1.5, size=default_model.n_joints)
    state = RobotState(q=q, qdot=qdot)
    target = Target(position=rng.uniform(-0.5, 1.0, size=2), reach_tolerance=0.05)
    return total_cost(
        state=state,
        u=Control(np.zeros(default_model.n_joints)),
        ee=ee_position(default_model, q),
        target=target,
        world=default_world,
        model=default_model,
        weights=_weights(),
        constants=CONST,
        steps_remaining=int(rng.integers(0, 20)),
        dt=0.05,
    )


def test_total_equals_weighted_sum(default_world, default_model):
    w = _weights()
    for seed in range(30):
        bd = _random_breakdown(default_world, default_model, seed)
        expected = (
            w.alpha_p * bd.pose + w.alpha_s * bd.stop + w.alpha_j * bd.joint
            + w.alpha_m * bd.manip + w.alpha_c * (bd.self_coll + bd.env_coll)
        )
        assert abs(bd.total - expected) <= 1e-12


def test_all_terms_nonnegative(default_world, default_model):
    for seed in range(30):
        bd = _random_breakdown(default_world, default_model, seed)
        for name in ("pose", "stop", "joint", "manip", "self_coll", "env_coll"):
            assert getattr(bd, name) >= 0.0


def test_combine_terms_linear_in_weights():
    bd = CostBreakdown(pose=1.0, stop=0.5, joint=0.2, manip=3.0,
                       self_coll=0.1, env_coll=0.4, total=0.0)
    kw = {k: getattr(bd, k)
          for k in ("pose", "stop", "joint", "manip", "self_coll", "env_coll")}
    w = _weights()
    w2 = CostWeights(2 * w.alpha_p, 2 * w.alpha_s, 2 * w.alpha_j,
                     2 * w.alpha_m, 2 * w.alpha_c)
    assert combine_terms(w2, **kw) == pytest.approx(2 * combine_terms(w, **kw))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3),
       st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3))
def test_terms_nonnegative_property(q, qdot):
    m = ArmModel([0.45, 0.45, 0.35], [-np.pi] * 3, [np.pi] * 3, [1.5] * 3)
    w = World(obstacles=(Box((0.5, -0.2), (0.7, 0.2)),), regions={},
              bin_opening_y=0.2)
    state = RobotState(q=np.asarray(q), qdot=np.asarray(qdot))
    bd = total_cost(
        state=state, u=Control(np.zeros(3)),
        ee=ee_position(m, state.q),
        target=Target((0.6, 0.0), 0.05), world=w, model=m,
        weights=_weights(), constants=CONST, steps_remaining=5, dt=0.05,
    )
    for name in ("pose", "stop", "joint", "manip", "self_coll", "env_coll", "total"):
        assert getattr(bd, name) >= 0.0

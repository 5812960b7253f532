from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from env.arm_env import ReachCarryEnv, subgoal_distance
from env.kinematics import forward_kinematics, max_end_effector_speed
from env.scene import Obstacle, get_preset
from errors import InputError, SceneConfigError, UsageError


def assert_states_equal(a, b):
    for name in ("joint_angles", "object_position", "goal_center", "grasp_offset"):
        assert_array_equal(getattr(a, name), getattr(b, name))
    for name in ("goal_radius", "obstacles", "carrying", "step_index", "terminated", "success"):
        assert getattr(a, name) == getattr(b, name)


def test_reset_is_deterministic():
    env = ReachCarryEnv(replace(get_preset("planar3"), object_mode="random"))
    assert_states_equal(env.reset(5), env.reset(5))


def test_random_object_depends_on_seed():
    env = ReachCarryEnv(replace(get_preset("planar3"), object_mode="random"))
    assert not np.array_equal(env.reset(0).object_position, env.reset(1).object_position)


def test_fixed_object_ignores_seed():
    env = ReachCarryEnv(get_preset("planar3"))
    assert_array_equal(env.reset(0).object_position, env.reset(1).object_position)


def test_obstacle_on_goal_rejected():
    scene = get_preset("planar3")
    covering = Obstacle(center=scene.goal_center, radius=scene.goal_radius * 1.5)
    with pytest.raises(SceneConfigError) as info:
        ReachCarryEnv(replace(scene, obstacles=scene.obstacles + (covering,)))
    assert info.value.field_path == "scene.obstacles[2]"


def test_obstacle_on_home_pose_rejected():
    scene = get_preset("planar3")
    with pytest.raises(SceneConfigError):
        ReachCarryEnv(replace(scene, obstacles=(Obstacle(center=(0.5, 0.0), radius=0.05),)))


def test_free_step_has_zero_reward():
    env = ReachCarryEnv(get_preset("planar3"))
    state = env.reset(0)
    state, outcome = env.step(state, np.zeros(3))
    assert outcome.r_env == 0.0
    assert not outcome.collided and not outcome.terminated and not outcome.success


def test_collision_penalized_and_episode_continues():
    scene = replace(get_preset("planar3"), obstacles=(Obstacle(center=(0.5, 0.15), radius=0.1),))
    env = ReachCarryEnv(scene)
    state = replace(env.reset(0), joint_angles=np.array([0.3, 0.0, 0.0]))
    state, outcome = env.step(state, np.zeros(3))
    assert outcome.collided
    assert outcome.r_env == -0.1
    assert not outcome.terminated
    env.step(state, np.zeros(3))


def test_carrying_into_goal_succeeds():
    base = get_preset("planar3")
    q = np.array([1.2, 0.8, 0.3])
    ee = forward_kinematics(q, base.arm)[-1]
    scene = replace(base, obstacles=(), goal_center=tuple(ee + 0.01), object_position=(0.55, -0.35))
    env = ReachCarryEnv(scene)
    state = replace(env.reset(0), joint_angles=q, carrying=True)
    state, outcome = env.step(state, np.zeros(3))
    assert outcome.success and outcome.terminated
    assert outcome.r_env == 1.0
    assert state.terminated and state.success


def test_step_after_termination_is_usage_error():
    env = ReachCarryEnv(replace(get_preset("planar3"), horizon=1))
    state, outcome = env.step(env.reset(0), np.zeros(3))
    assert outcome.terminated and not outcome.success
    with pytest.raises(UsageError):
        env.step(state, np.zeros(3))


def test_action_dimension_checked():
    env = ReachCarryEnv(get_preset("planar3"))
    with pytest.raises(InputError):
        env.step(env.reset(0), np.zeros(2))


def test_identical_steps_are_bit_identical():
    env = ReachCarryEnv(get_preset("planar3"))
    action = np.array([0.3, -0.7, 1.0])
    a, out_a = env.step(env.reset(0), action)
    b, out_b = env.step(env.reset(0), action)
    assert_states_equal(a, b)
    assert_array_equal(out_a.observation, out_b.observation)


@pytest.mark.parametrize("preset", ["planar3", "spatial7"])
def test_random_rollout_invariants(preset):
    scene = get_preset(preset)
    env = ReachCarryEnv(scene)
    arm = scene.arm
    rng = np.random.default_rng(3)
    state = env.reset(0)
    distance = env.distance_to_subgoal(state)
    speed = max_end_effector_speed(arm)
    while not state.terminated:
        state, outcome = env.step(state, rng.uniform(-1.5, 1.5, size=arm.num_links))
        points = forward_kinematics(state.joint_angles, arm)
        assert np.allclose(np.linalg.norm(np.diff(points, axis=0), axis=1), arm.link_lengths,
                           rtol=0, atol=1e-9)
        assert np.all(state.joint_angles >= arm.lower_limits)
        assert np.all(state.joint_angles <= arm.upper_limits)
        assert outcome.distance_to_subgoal >= 0.0
        assert abs(outcome.distance_to_subgoal - distance) <= speed + 1e-12
        if not outcome.collided and not outcome.success:
            assert outcome.r_env == 0.0
        if outcome.success:
            assert outcome.terminated
        distance = outcome.distance_to_subgoal
    assert state.step_index <= scene.horizon


def test_grasp_keeps_distance_continuous():
    base = get_preset("planar3")
    env = ReachCarryEnv(base)
    q = np.array([0.4, 0.2, 0.1])
    ee = forward_kinematics(q, base.arm)[-1]
    state = replace(env.reset(0), joint_angles=q, object_position=ee + np.array([0.03, 0.0]))
    before = env.distance_to_subgoal(state)
    state, outcome = env.step(state, np.zeros(3))
    assert state.carrying
    assert outcome.distance_to_subgoal == pytest.approx(before, abs=1e-12)
    state, outcome = env.step(state, np.array([1.0, 0.0, 0.0]))
    assert_array_equal(state.object_position, outcome.end_effector + state.grasp_offset)


def test_subgoal_distance_is_two_phase():
    ee = np.array([0.0, 0.0])
    obj = np.array([3.0, 4.0])
    goal = np.array([3.0, 0.0])
    assert subgoal_distance(ee, obj, goal) == 9.0


def test_observation_layout():
    scene = get_preset("planar3")
    env = ReachCarryEnv(scene)
    obs = env.observe(env.reset(0))
    assert obs.shape == (env.observation_dim,)
    assert obs[-1] == 0.0

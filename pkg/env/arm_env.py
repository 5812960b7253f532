"""
Kinematic reach-and-carry environment.

The arm must reach an object, pick it up by proximity and carry it into a
goal sphere while avoiding static obstacles. The only rewards are a terminal
success bonus and a per-step collision penalty; collisions never end an
episode. States are immutable snapshots, step() returns a new one.
"""

from dataclasses import dataclass, replace

import numpy as np

from env.kinematics import collision_check, forward_kinematics
from env.scene import SceneSpec
from errors import InputError, SceneConfigError, UsageError

SPAWN_ATTEMPTS = 1000


@dataclass(frozen=True, eq=False)
class WorldState:
    joint_angles: np.ndarray
    object_position: np.ndarray
    goal_center: np.ndarray
    goal_radius: float
    obstacles: tuple
    carrying: bool = False
    grasp_offset: np.ndarray = None
    step_index: int = 0
    terminated: bool = False
    success: bool = False


@dataclass(frozen=True, eq=False)
class StepOutcome:
    observation: np.ndarray
    r_env: float
    terminated: bool
    success: bool
    collided: bool
    distance_to_subgoal: float
    end_effector: np.ndarray


def clip_action(action, num_links: int) -> np.ndarray:
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.size != num_links:
        raise InputError(f"expected {num_links} joint velocity commands, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"action must be finite, got {a.tolist()}")
    return np.clip(a, -1.0, 1.0)


def subgoal_distance(end_effector: np.ndarray, object_position: np.ndarray,
                     goal_center: np.ndarray) -> float:
    """Two-phase progress measure: reach the object, then bring it to the goal.

    While carrying, the object rides with the end effector so the first term
    is the constant grasp offset; the measure is continuous across the grasp.
    """
    return float(np.linalg.norm(end_effector - object_position)
                 + np.linalg.norm(object_position - goal_center))


class ReachCarryEnv:
    """Pure-function environment: all episode data lives in WorldState."""

    def __init__(self, scene: SceneSpec):
        scene.validate()
        self.scene = scene
        self.arm = scene.arm
        self._lower = scene.arm.lower_limits
        self._upper = scene.arm.upper_limits
        self._obstacles = tuple(scene.obstacles)
        if self._obstacles:
            self._centers = np.array([o.center for o in self._obstacles], dtype=np.float64)
            self._radii = np.array([o.radius for o in self._obstacles], dtype=np.float64)

    @property
    def action_dim(self) -> int:
        return self.arm.num_links

    @property
    def observation_dim(self) -> int:
        return self.arm.num_links + 3 * self.arm.workspace_dim + 1

    # ---- Episode lifecycle ---------------------------------------------------------------------------

    def reset(self, seed: int) -> WorldState:
        scene = self.scene
        object_position = np.asarray(scene.object_position, dtype=np.float64)
        if scene.object_mode == "random" and scene.object_spawn_radius > 0:
            object_position = self._spawn_object(object_position, seed)
        return WorldState(
            joint_angles=np.asarray(scene.arm.home_pose, dtype=np.float64),
            object_position=object_position,
            goal_center=np.asarray(scene.goal_center, dtype=np.float64),
            goal_radius=float(scene.goal_radius),
            obstacles=self._obstacles,
            grasp_offset=np.zeros(self.arm.workspace_dim),
        )

    def _spawn_object(self, anchor: np.ndarray, seed: int) -> np.ndarray:
        rng = np.random.default_rng(int(seed) % (1 << 64))
        radius = self.scene.object_spawn_radius
        for _ in range(SPAWN_ATTEMPTS):
            offset = rng.uniform(-radius, radius, size=anchor.shape)
            if np.linalg.norm(offset) > radius:
                continue
            candidate = anchor + offset
            if not self._obstacles or np.all(
                    np.linalg.norm(self._centers - candidate, axis=1) >= self._radii):
                return candidate
        raise SceneConfigError("scene.object_spawn_radius",
                               "could not place the object outside every obstacle")

    def step(self, state: WorldState, action) -> tuple:
        if state.terminated:
            raise UsageError("step() called on a terminated state; call reset() first")
        scene = self.scene
        a = clip_action(action, self.arm.num_links)

        q = np.clip(state.joint_angles + a * self.arm.max_joint_velocity, self._lower, self._upper)
        points = forward_kinematics(q, self.arm)
        ee = points[-1]
        collided = collision_check(points, self._obstacles)

        carrying = state.carrying
        grasp_offset = state.grasp_offset
        object_position = state.object_position
        if carrying:
            object_position = ee + grasp_offset
        elif np.linalg.norm(ee - object_position) <= scene.grasp_radius:
            # The object stays put on the grasp step and follows from the next one.
            carrying = True
            grasp_offset = object_position - ee

        success = bool(carrying and np.linalg.norm(ee - state.goal_center) <= state.goal_radius)
        step_index = state.step_index + 1
        terminated = success or step_index >= scene.horizon

        r_env = 0.0
        if success:
            r_env += scene.success_bonus
        if collided:
            r_env += scene.collision_penalty

        next_state = replace(
            state,
            joint_angles=q,
            object_position=object_position,
            carrying=carrying,
            grasp_offset=grasp_offset,
            step_index=step_index,
            terminated=terminated,
            success=success,
        )
        outcome = StepOutcome(
            observation=self.observe(next_state, ee),
            r_env=r_env,
            terminated=terminated,
            success=success,
            collided=collided,
            distance_to_subgoal=subgoal_distance(ee, object_position, state.goal_center),
            end_effector=ee,
        )
        return next_state, outcome

    # ---- Views ---------------------------------------------------------------------------------------

    def end_effector(self, state: WorldState) -> np.ndarray:
        return forward_kinematics(state.joint_angles, self.arm)[-1]

    def distance_to_subgoal(self, state: WorldState) -> float:
        return subgoal_distance(self.end_effector(state), state.object_position, state.goal_center)

    def observe(self, state: WorldState, end_effector: np.ndarray = None) -> np.ndarray:
        ee = self.end_effector(state) if end_effector is None else end_effector
        return np.concatenate([
            state.joint_angles,
            ee,
            state.object_position,
            state.goal_center,
            [1.0 if state.carrying else 0.0],
        ])

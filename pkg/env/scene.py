"""
Scene description for the reach-and-carry task.
A scene is an arm, a set of static spherical obstacles, an object to pick up
and a goal sphere to carry it into. Presets follow the same name -> spec
table used throughout the project.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from env.kinematics import collision_check, forward_kinematics
from errors import SceneConfigError

OBJECT_MODES = ("fixed", "random")


@dataclass(frozen=True)
class ArmConfig:
    """Serial-link arm. Planar arms live in 2-D, spatial arms in 3-D."""
    link_lengths: Tuple[float, ...] = (0.4, 0.3, 0.2)
    joint_limits: Tuple[Tuple[float, float], ...] = (
        (-math.pi, math.pi), (-2.6, 2.6), (-2.6, 2.6))
    max_joint_velocity: float = 0.05
    home_pose: Tuple[float, ...] = (0.0, 0.0, 0.0)
    planar: bool = True

    @property
    def num_links(self) -> int:
        return len(self.link_lengths)

    @property
    def workspace_dim(self) -> int:
        return 2 if self.planar else 3

    @property
    def lower_limits(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.joint_limits], dtype=np.float64)

    @property
    def upper_limits(self) -> np.ndarray:
        return np.array([hi for _, hi in self.joint_limits], dtype=np.float64)

    @property
    def reach(self) -> float:
        return float(sum(self.link_lengths))

    def validate(self, path: str = "scene.arm"):
        if self.num_links < 2:
            raise SceneConfigError(f"{path}.link_lengths", "an arm needs at least 2 links")
        if not self.planar and self.num_links > 7:
            raise SceneConfigError(f"{path}.link_lengths", "spatial arms support at most 7 links")
        for i, length in enumerate(self.link_lengths):
            if not (math.isfinite(length) and length > 0):
                raise SceneConfigError(f"{path}.link_lengths[{i}]", f"must be > 0 (got {length})")
        if len(self.joint_limits) != self.num_links:
            raise SceneConfigError(
                f"{path}.joint_limits",
                f"expected {self.num_links} intervals, got {len(self.joint_limits)}")
        for i, (lo, hi) in enumerate(self.joint_limits):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise SceneConfigError(f"{path}.joint_limits[{i}]",
                                       f"needs low < high (got {lo}, {hi})")
        if len(self.home_pose) != self.num_links:
            raise SceneConfigError(
                f"{path}.home_pose",
                f"expected {self.num_links} angles, got {len(self.home_pose)}")
        for i, (angle, (lo, hi)) in enumerate(zip(self.home_pose, self.joint_limits)):
            if not (lo <= angle <= hi):
                raise SceneConfigError(f"{path}.home_pose[{i}]",
                                       f"{angle} is outside the joint limits [{lo}, {hi}]")
        if not (math.isfinite(self.max_joint_velocity) and self.max_joint_velocity > 0):
            raise SceneConfigError(f"{path}.max_joint_velocity",
                                   f"must be > 0 (got {self.max_joint_velocity})")


@dataclass(frozen=True)
class Obstacle:
    center: Tuple[float, ...]
    radius: float

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64)


@dataclass(frozen=True)
class SceneSpec:
    """Everything reset() needs besides the seed."""
    arm: ArmConfig = field(default_factory=ArmConfig)
    obstacles: Tuple[Obstacle, ...] = ()
    goal_center: Tuple[float, ...] = (-0.45, 0.4)
    goal_radius: float = 0.1
    object_position: Tuple[float, ...] = (0.55, 0.35)
    object_mode: str = "fixed"
    object_spawn_radius: float = 0.05
    grasp_radius: float = 0.05
    horizon: int = 300
    success_bonus: float = 1.0
    collision_penalty: float = -0.1
    preset: str = "planar3"

    def validate(self, path: str = "scene"):
        self.arm.validate(f"{path}.arm")
        dim = self.arm.workspace_dim
        for name in ("goal_center", "object_position"):
            point = getattr(self, name)
            if len(point) != dim or not all(math.isfinite(c) for c in point):
                raise SceneConfigError(f"{path}.{name}",
                                       f"expected {dim} finite coordinates, got {list(point)}")
        if not self.goal_radius > 0:
            raise SceneConfigError(f"{path}.goal_radius", f"must be > 0 (got {self.goal_radius})")
        if not self.grasp_radius > 0:
            raise SceneConfigError(f"{path}.grasp_radius", f"must be > 0 (got {self.grasp_radius})")
        if self.object_mode not in OBJECT_MODES:
            raise SceneConfigError(f"{path}.object_mode",
                                   f"must be one of {', '.join(OBJECT_MODES)}")
        if self.object_spawn_radius < 0:
            raise SceneConfigError(f"{path}.object_spawn_radius", "must be >= 0")
        if not (isinstance(self.horizon, int) and self.horizon > 0):
            raise SceneConfigError(f"{path}.horizon", f"must be a positive integer (got {self.horizon})")

        goal = np.asarray(self.goal_center, dtype=np.float64)
        obj = np.asarray(self.object_position, dtype=np.float64)
        for i, obstacle in enumerate(self.obstacles):
            where = f"{path}.obstacles[{i}]"
            if len(obstacle.center) != dim or not all(math.isfinite(c) for c in obstacle.center):
                raise SceneConfigError(f"{where}.center", f"expected {dim} finite coordinates")
            if not obstacle.radius > 0:
                raise SceneConfigError(f"{where}.radius", f"must be > 0 (got {obstacle.radius})")
            if np.linalg.norm(goal - obstacle.center_array) < obstacle.radius:
                raise SceneConfigError(where, "obstacle covers the goal center")
            if np.linalg.norm(obj - obstacle.center_array) < obstacle.radius:
                raise SceneConfigError(where, "obstacle covers the object position")

        home = forward_kinematics(np.asarray(self.arm.home_pose, dtype=np.float64), self.arm)
        if collision_check(home, self.obstacles):
            raise SceneConfigError(f"{path}.obstacles", "an obstacle intersects the arm at its home pose")


def _planar3() -> SceneSpec:
    return SceneSpec(
        arm=ArmConfig(),
        obstacles=(
            Obstacle(center=(0.05, 0.62), radius=0.1),
            Obstacle(center=(-0.25, 0.15), radius=0.06),
        ),
        goal_center=(-0.45, 0.4),
        goal_radius=0.1,
        object_position=(0.55, 0.35),
        preset="planar3",
    )


def _spatial7() -> SceneSpec:
    limits = ((-math.pi, math.pi),) + ((-2.6, 2.6),) * 6
    return SceneSpec(
        arm=ArmConfig(
            link_lengths=(0.2, 0.2, 0.15, 0.15, 0.1, 0.1, 0.05),
            joint_limits=limits,
            max_joint_velocity=0.04,
            home_pose=(0.0,) * 7,
            planar=False,
        ),
        obstacles=(
            Obstacle(center=(0.05, 0.45, 0.35), radius=0.1),
            Obstacle(center=(-0.3, 0.1, 0.2), radius=0.08),
            Obstacle(center=(0.35, -0.3, 0.1), radius=0.07),
        ),
        goal_center=(-0.45, 0.35, 0.2),
        goal_radius=0.1,
        object_position=(0.5, 0.3, 0.15),
        preset="spatial7",
    )


SCENE_PRESETS = {
    "planar3": _planar3(),
    "spatial7": _spatial7(),
}

PRESET_ORDER = ["planar3", "spatial7"]


def get_preset(name: str) -> SceneSpec:
    try:
        return SCENE_PRESETS[name]
    except KeyError:
        raise SceneConfigError("scene.preset",
                               f"unknown preset '{name}' (choose from {', '.join(PRESET_ORDER)})")

"""
The training loop body: one environment interaction with shaped reward,
followed by gradient updates once warmup is over.

act -> step -> judge -> decode -> shape -> push -> update
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
import torch

from env.arm_env import ReachCarryEnv
from env.scene import SceneSpec
from errors import CheckpointError
from feedback.channel import FeedbackChannel
from feedback.observer import DEFAULT_TOLERANCE, ErrorJudgment, judge_outcome
from feedback.shaping import ShapedReward, shape_reward
from metrics import EpisodeRecord
from rl.replay import ReplayBuffer, Transition
from rl.sac import SacAgent, SacConfig, read_checkpoint
from utils.seeding import RngStreams, generator_state, set_generator_state

logger = logging.getLogger(__name__)

SESSION_CHECKPOINT_VERSION = 1


@dataclass
class StepLog:
    global_step: int
    shaped: ShapedReward
    judgment: ErrorJudgment
    p: float
    updates: int
    episode: Optional[EpisodeRecord] = None


class _EpisodeAccumulator:
    def __init__(self, start_point: np.ndarray, episode_index: int, global_step: int, phase: str):
        self.path = [np.asarray(start_point, dtype=np.float64).copy()]
        self.r_env: List[float] = []
        self.r_total: List[float] = []
        self.collisions = 0
        self.episode_index = episode_index
        self.global_step = global_step
        self.phase = phase

    def add(self, end_effector: np.ndarray, r_env: float, r_total: float, collided: bool):
        self.path.append(np.asarray(end_effector, dtype=np.float64).copy())
        self.r_env.append(float(r_env))
        self.r_total.append(float(r_total))
        if collided:
            self.collisions += 1

    def finish(self, success: bool) -> EpisodeRecord:
        return EpisodeRecord(
            end_effector_path=np.stack(self.path),
            per_step_r_env=self.r_env,
            per_step_r_total=self.r_total,
            collision_steps=self.collisions,
            success=bool(success),
            episode_index=self.episode_index,
            global_step_at_start=self.global_step,
            phase=self.phase,
        )

    def state_dict(self) -> dict:
        return {
            "path": torch.from_numpy(np.stack(self.path)),
            "r_env": list(self.r_env),
            "r_total": list(self.r_total),
            "collisions": self.collisions,
            "episode_index": self.episode_index,
            "global_step": self.global_step,
            "phase": self.phase,
        }

    @classmethod
    def from_state_dict(cls, state: dict) -> "_EpisodeAccumulator":
        path = state["path"].numpy().astype(np.float64)
        episode = cls(path[0], int(state["episode_index"]), int(state["global_step"]), state["phase"])
        episode.path = [point.copy() for point in path]
        episode.r_env = [float(r) for r in state["r_env"]]
        episode.r_total = [float(r) for r in state["r_total"]]
        episode.collisions = int(state["collisions"])
        return episode


class TrainingSession:
    """Owns the environment, agent, replay buffer and feedback channel of one run."""

    def __init__(self, scene: SceneSpec, config: SacConfig, alpha: float,
                 channel: FeedbackChannel, streams: RngStreams,
                 progress_tolerance: float = DEFAULT_TOLERANCE):
        self.env = ReachCarryEnv(scene)
        self.config = config
        self.alpha = float(alpha)
        self.channel = channel
        self.streams = streams
        self.progress_tolerance = progress_tolerance
        self.buffer = ReplayBuffer(config.buffer_capacity, self.env.observation_dim, self.env.action_dim)
        self.agent = SacAgent(self.env.observation_dim, self.env.action_dim, config,
                              init_seed=streams.init_seed, generator=streams.policy)
        self.global_step = 0
        self.episode_index = 0
        self.update_phases = 0
        self._begin_episode()

    @property
    def update_count(self) -> int:
        return self.agent.update_count

    def _begin_episode(self):
        self.episode_seed = int(self.streams.env.integers(0, 2**31 - 1))
        self.state = self.env.reset(self.episode_seed)
        self.observation = self.env.observe(self.state)
        self.prev_distance = self.env.distance_to_subgoal(self.state)
        self._episode = _EpisodeAccumulator(self.env.end_effector(self.state),
                                            self.episode_index, self.global_step, "train")

    def train_step(self) -> StepLog:
        if self.global_step < self.config.warmup_steps:
            action = self.agent.random_action()
        else:
            action = self.agent.act(self.observation, stochastic=True)

        self.state, outcome = self.env.step(self.state, action)
        judgment = judge_outcome(self.prev_distance, outcome, self.progress_tolerance)
        feedback = self.channel.sample(judgment)
        shaped = shape_reward(outcome.r_env, feedback.p, self.alpha)
        self.buffer.push(Transition(
            observation=self.observation,
            action=action,
            r_total=shaped.r_total,
            next_observation=outcome.observation,
            terminal=outcome.success,
        ))
        self._episode.add(outcome.end_effector, outcome.r_env, shaped.r_total, outcome.collided)
        self.observation = outcome.observation
        self.prev_distance = outcome.distance_to_subgoal

        updates = 0
        if self.global_step >= self.config.warmup_steps:
            for _ in range(self.config.update_to_data_ratio):
                self.agent.update(self.buffer.sample(self.config.batch_size, self.streams.buffer))
                updates += 1
            self.update_phases += 1
        log = StepLog(global_step=self.global_step, shaped=shaped, judgment=judgment,
                      p=feedback.p, updates=updates)
        self.global_step += 1

        if outcome.terminated:
            log.episode = self._episode.finish(outcome.success)
            self.episode_index += 1
            self._begin_episode()
        return log

    # ---- Checkpoints -----------------------------------------------------------------------------------

    def state_dict(self) -> dict:
        """Everything continued training depends on, so a reload resumes bit for bit."""
        s = self.state
        return {
            "version": SESSION_CHECKPOINT_VERSION,
            "alpha": self.alpha,
            "agent": self.agent.state_dict(),
            "buffer": self.buffer.state_dict(),
            "channel": self.channel.state_dict(),
            "rng": {"env": generator_state(self.streams.env),
                    "buffer": generator_state(self.streams.buffer),
                    "decoder": generator_state(self.streams.decoder)},
            "global_step": self.global_step,
            "episode_index": self.episode_index,
            "update_phases": self.update_phases,
            "episode_seed": self.episode_seed,
            "world": {"joint_angles": torch.from_numpy(s.joint_angles.copy()),
                      "object_position": torch.from_numpy(s.object_position.copy()),
                      "grasp_offset": torch.from_numpy(np.asarray(s.grasp_offset, dtype=np.float64).copy()),
                      "carrying": bool(s.carrying),
                      "step_index": int(s.step_index),
                      "terminated": bool(s.terminated),
                      "success": bool(s.success)},
            "observation": torch.from_numpy(np.asarray(self.observation, dtype=np.float64).copy()),
            "prev_distance": float(self.prev_distance),
            "episode": self._episode.state_dict(),
        }

    def load_state_dict(self, state: dict):
        version = state.get("version")
        if version != SESSION_CHECKPOINT_VERSION or "buffer" not in state:
            raise CheckpointError(f"not a training-session checkpoint (version {version!r})")
        if float(state["alpha"]) != self.alpha:
            raise CheckpointError(f"checkpoint was trained with alpha={state['alpha']}, this run uses {self.alpha}")
        self.agent.load_state_dict(state["agent"])
        self.buffer.load_state_dict(state["buffer"])
        self.channel.load_state_dict(state["channel"])
        set_generator_state(self.streams.env, state["rng"]["env"])
        set_generator_state(self.streams.buffer, state["rng"]["buffer"])
        set_generator_state(self.streams.decoder, state["rng"]["decoder"])
        self.global_step = int(state["global_step"])
        self.episode_index = int(state["episode_index"])
        self.update_phases = int(state["update_phases"])
        self.episode_seed = int(state["episode_seed"])

        world = state["world"]
        self.state = replace(
            self.env.reset(self.episode_seed),
            joint_angles=world["joint_angles"].numpy().astype(np.float64),
            object_position=world["object_position"].numpy().astype(np.float64),
            grasp_offset=world["grasp_offset"].numpy().astype(np.float64),
            carrying=bool(world["carrying"]),
            step_index=int(world["step_index"]),
            terminated=bool(world["terminated"]),
            success=bool(world["success"]),
        )
        self.observation = state["observation"].numpy().astype(np.float64)
        self.prev_distance = float(state["prev_distance"])
        self._episode = _EpisodeAccumulator.from_state_dict(state["episode"])

    def save_checkpoint(self, path: str):
        torch.save(self.state_dict(), path)

    def load_checkpoint(self, path: str):
        self.load_state_dict(read_checkpoint(path))

    def evaluate(self, seeds: Sequence[int]) -> List[EpisodeRecord]:
        """Deterministic-policy episodes with the feedback channel off."""
        records = []
        for i, seed in enumerate(seeds):
            state = self.env.reset(seed)
            observation = self.env.observe(state)
            episode = _EpisodeAccumulator(self.env.end_effector(state), i, self.global_step, "eval")
            while not state.terminated:
                action = self.agent.act(observation, stochastic=False)
                state, outcome = self.env.step(state, action)
                episode.add(outcome.end_effector, outcome.r_env, outcome.r_env, outcome.collided)
                observation = outcome.observation
            records.append(episode.finish(state.success))
        return records

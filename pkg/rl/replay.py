"""
Uniform experience replay for off-policy learning.
Storage is a preallocated ring; once full, the oldest transition is
overwritten first.
"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import torch

from errors import InputError, UsageError
from rl.networks import DTYPE


@dataclass(frozen=True, eq=False)
class Transition:
    observation: np.ndarray
    action: np.ndarray
    r_total: float
    next_observation: np.ndarray
    terminal: bool


@dataclass(frozen=True, eq=False)
class TransitionBatch:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_observations: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return int(self.rewards.shape[0])

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition]) -> "TransitionBatch":
        if not transitions:
            raise UsageError("cannot build a batch from zero transitions")
        return cls(
            observations=np.stack([np.asarray(t.observation, dtype=np.float64) for t in transitions]),
            actions=np.stack([np.asarray(t.action, dtype=np.float64) for t in transitions]),
            rewards=np.array([t.r_total for t in transitions], dtype=np.float64),
            next_observations=np.stack([np.asarray(t.next_observation, dtype=np.float64)
                                        for t in transitions]),
            terminals=np.array([t.terminal for t in transitions], dtype=np.float64),
        )

    def tensors(self):
        return (torch.as_tensor(self.observations, dtype=DTYPE),
                torch.as_tensor(self.actions, dtype=DTYPE),
                torch.as_tensor(self.rewards, dtype=DTYPE),
                torch.as_tensor(self.next_observations, dtype=DTYPE),
                torch.as_tensor(self.terminals, dtype=DTYPE))


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling (with replacement)."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity <= 0:
            raise InputError(f"replay capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self._obs = np.zeros((self.capacity, self.obs_dim))
        self._act = np.zeros((self.capacity, self.act_dim))
        self._rew = np.zeros(self.capacity)
        self._next_obs = np.zeros((self.capacity, self.obs_dim))
        self._terminal = np.zeros(self.capacity)
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition):
        obs = np.asarray(t.observation, dtype=np.float64).reshape(-1)
        act = np.asarray(t.action, dtype=np.float64).reshape(-1)
        next_obs = np.asarray(t.next_observation, dtype=np.float64).reshape(-1)
        if obs.size != self.obs_dim or next_obs.size != self.obs_dim:
            raise InputError(f"observation dimension must be {self.obs_dim}, "
                             f"got {obs.size} and {next_obs.size}")
        if act.size != self.act_dim:
            raise InputError(f"action dimension must be {self.act_dim}, got {act.size}")

        i = self._next
        self._obs[i] = obs
        self._act[i] = act
        self._rew[i] = float(t.r_total)
        self._next_obs[i] = next_obs
        self._terminal[i] = 1.0 if t.terminal else 0.0
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _slots(self) -> np.ndarray:
        """Storage slots ordered oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise UsageError("cannot sample from an empty replay buffer")
        if batch_size <= 0:
            raise UsageError(f"batch size must be positive, got {batch_size}")
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        slots = self._slots()[self.sample_indices(batch_size, rng)]
        return TransitionBatch(
            observations=self._obs[slots].copy(),
            actions=self._act[slots].copy(),
            rewards=self._rew[slots].copy(),
            next_observations=self._next_obs[slots].copy(),
            terminals=self._terminal[slots].copy(),
        )

    def transitions(self) -> List[Transition]:
        return [Transition(self._obs[i].copy(), self._act[i].copy(), float(self._rew[i]),
                           self._next_obs[i].copy(), bool(self._terminal[i]))
                for i in self._slots()]

    # ---- Checkpoints -----------------------------------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "observations": torch.from_numpy(self._obs.copy()),
            "actions": torch.from_numpy(self._act.copy()),
            "rewards": torch.from_numpy(self._rew.copy()),
            "next_observations": torch.from_numpy(self._next_obs.copy()),
            "terminals": torch.from_numpy(self._terminal.copy()),
            "next": self._next,
            "size": self.size,
        }

    def load_state_dict(self, state: dict):
        shape = (int(state["capacity"]), int(state["obs_dim"]), int(state["act_dim"]))
        if shape != (self.capacity, self.obs_dim, self.act_dim):
            raise InputError(f"replay state has (capacity, obs_dim, act_dim) = {shape}, "
                             f"expected {(self.capacity, self.obs_dim, self.act_dim)}")
        self._obs = state["observations"].numpy().astype(np.float64, copy=True)
        self._act = state["actions"].numpy().astype(np.float64, copy=True)
        self._rew = state["rewards"].numpy().astype(np.float64, copy=True)
        self._next_obs = state["next_observations"].numpy().astype(np.float64, copy=True)
        self._terminal = state["terminals"].numpy().astype(np.float64, copy=True)
        self._next = int(state["next"])
        self.size = int(state["size"])

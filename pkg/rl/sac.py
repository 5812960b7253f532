"""
Soft actor-critic for continuous actions.

Twin critics with Polyak-averaged targets, a tanh-squashed Gaussian actor and
a learned entropy temperature. All policy noise comes from one
torch.Generator owned by the agent, so a run is reproducible bit for bit.
"""

import copy
import logging
import math
import pickle
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import torch

from errors import CheckpointError, ConfigError, InputError, UsageError
from rl.distributions import bound_action, squashed_sample
from rl.networks import DTYPE, Actor, Critic
from rl.replay import Transition, TransitionBatch

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class SacConfig:
    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    temperature_lr: float = 3e-4
    batch_size: int = 256
    buffer_capacity: int = 100_000
    initial_temperature: float = 0.2
    target_entropy: Optional[float] = None
    update_to_data_ratio: int = 1
    warmup_steps: int = 1000
    hidden_sizes: Tuple[int, ...] = field(default=(64, 64))

    def resolved_target_entropy(self, act_dim: int) -> float:
        return float(-act_dim) if self.target_entropy is None else float(self.target_entropy)

    def validate(self, path: str = "sac"):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"{path}.gamma", f"must lie in (0, 1) (got {self.gamma})")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"{path}.tau", f"must lie in (0, 1] (got {self.tau})")
        for name in ("actor_lr", "critic_lr", "temperature_lr", "initial_temperature"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{path}.{name}", f"must be > 0 (got {value})")
        for name in ("batch_size", "buffer_capacity", "update_to_data_ratio"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value > 0):
                raise ConfigError(f"{path}.{name}", f"must be a positive integer (got {value})")
        if self.batch_size > self.buffer_capacity:
            raise ConfigError(f"{path}.batch_size",
                              f"{self.batch_size} exceeds buffer_capacity {self.buffer_capacity}")
        if not (isinstance(self.warmup_steps, int) and self.warmup_steps >= 0):
            raise ConfigError(f"{path}.warmup_steps", f"must be >= 0 (got {self.warmup_steps})")
        if not self.hidden_sizes or any(int(h) <= 0 for h in self.hidden_sizes):
            raise ConfigError(f"{path}.hidden_sizes", f"must be positive integers (got {self.hidden_sizes})")
        if self.target_entropy is not None and not math.isfinite(self.target_entropy):
            raise ConfigError(f"{path}.target_entropy", "must be finite or null")


BatchLike = Union[TransitionBatch, Sequence[Transition]]


def _as_batch(batch: BatchLike) -> TransitionBatch:
    if isinstance(batch, TransitionBatch):
        if len(batch) == 0:
            raise UsageError("update called with an empty batch")
        return batch
    if not batch:
        raise UsageError("update called with an empty batch")
    return TransitionBatch.from_transitions(batch)


def _adam(params, lr: float) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=lr, betas=ADAM_BETAS, eps=ADAM_EPS)


class SacAgent:
    """Actor, twin critics, targets, temperature and their optimizers."""

    def __init__(self, obs_dim: int, act_dim: int, config: SacConfig,
                 init_seed: int = 0, generator: Optional[torch.Generator] = None):
        config.validate()
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.config = config
        self.target_entropy = config.resolved_target_entropy(act_dim)

        # Parameter init draws from torch's global RNG; fork it so runs in
        # one process don't disturb each other.
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(int(init_seed) % (1 << 63))
            self.actor = Actor(obs_dim, act_dim, config.hidden_sizes)
            self.critic1 = Critic(obs_dim, act_dim, config.hidden_sizes)
            self.critic2 = Critic(obs_dim, act_dim, config.hidden_sizes)
        self.target1 = copy.deepcopy(self.critic1)
        self.target2 = copy.deepcopy(self.critic2)
        for p in list(self.target1.parameters()) + list(self.target2.parameters()):
            p.requires_grad_(False)

        self.log_temperature = torch.tensor(math.log(config.initial_temperature),
                                            dtype=DTYPE, requires_grad=True)
        self.actor_optimizer = _adam(self.actor.parameters(), config.actor_lr)
        self.critic_optimizer = _adam(list(self.critic1.parameters())
                                      + list(self.critic2.parameters()), config.critic_lr)
        self.temperature_optimizer = _adam([self.log_temperature], config.temperature_lr)

        if generator is None:
            generator = torch.Generator(device="cpu")
            generator.manual_seed(int(init_seed) % (1 << 63))
        self.generator = generator
        self.update_count = 0

    @property
    def temperature(self) -> float:
        return float(self.log_temperature.detach().exp())

    def _noise(self, rows: int) -> torch.Tensor:
        return torch.randn((rows, self.act_dim), generator=self.generator, dtype=DTYPE)

    # ---- Acting ----------------------------------------------------------------------------------------

    def act(self, observation, stochastic: bool = True) -> np.ndarray:
        obs = np.asarray(observation, dtype=np.float64).reshape(-1)
        if obs.size != self.obs_dim:
            raise InputError(f"observation dimension must be {self.obs_dim}, got {obs.size}")
        if not np.all(np.isfinite(obs)):
            raise InputError("observation contains non-finite values")
        with torch.no_grad():
            mean, log_std = self.actor(torch.as_tensor(obs, dtype=DTYPE).unsqueeze(0))
            if stochastic:
                action, _, _ = squashed_sample(mean, log_std, self._noise(1))
            else:
                action = torch.tanh(mean)
            return bound_action(action).squeeze(0).numpy().copy()

    def random_action(self) -> np.ndarray:
        """Uniform exploration action used before learning starts."""
        u = torch.rand((self.act_dim,), generator=self.generator, dtype=DTYPE)
        return bound_action(2.0 * u - 1.0).numpy().copy()

    # ---- Losses ----------------------------------------------------------------------------------------

    def td_target(self, rewards, next_obs, terminals, next_noise) -> torch.Tensor:
        with torch.no_grad():
            mean, log_std = self.actor(next_obs)
            next_action, next_log_prob, _ = squashed_sample(mean, log_std, next_noise)
            q_next = torch.min(self.target1(next_obs, next_action), self.target2(next_obs, next_action))
            soft_value = q_next - self.log_temperature.exp() * next_log_prob
            return rewards + self.config.gamma * (1.0 - terminals) * soft_value

    def critic_loss(self, batch: TransitionBatch, next_noise: torch.Tensor) -> torch.Tensor:
        obs, actions, rewards, next_obs, terminals = batch.tensors()
        y = self.td_target(rewards, next_obs, terminals, next_noise)
        q1 = self.critic1(obs, actions)
        q2 = self.critic2(obs, actions)
        return ((q1 - y) ** 2).mean() + ((q2 - y) ** 2).mean()

    def actor_loss(self, batch: TransitionBatch, noise: torch.Tensor):
        """Returns (loss, log-probs of the reparameterized actions)."""
        obs = batch.tensors()[0]
        mean, log_std = self.actor(obs)
        action, log_prob, _ = squashed_sample(mean, log_std, noise)
        q = torch.min(self.critic1(obs, action), self.critic2(obs, action))
        temperature = self.log_temperature.detach().exp()
        return (temperature * log_prob - q).mean(), log_prob

    def temperature_loss(self, log_probs: torch.Tensor) -> torch.Tensor:
        return -(self.log_temperature * (log_probs.detach() + self.target_entropy)).mean()

    # ---- Updates ---------------------------------------------------------------------------------------

    def update_critics(self, batch: BatchLike) -> float:
        batch = _as_batch(batch)
        loss = self.critic_loss(batch, self._noise(len(batch)))
        self.critic_optimizer.zero_grad()
        loss.backward()
        self.critic_optimizer.step()
        return float(loss.detach())

    def update_actor(self, batch: BatchLike) -> Tuple[float, torch.Tensor]:
        batch = _as_batch(batch)
        loss, log_probs = self.actor_loss(batch, self._noise(len(batch)))
        self.actor_optimizer.zero_grad()
        loss.backward()
        self.actor_optimizer.step()
        # Critic grads picked up here are cleared by the next critic update.
        return float(loss.detach()), log_probs.detach()

    def update_temperature(self, batch: BatchLike, log_probs: Optional[torch.Tensor] = None) -> float:
        batch = _as_batch(batch)
        if log_probs is None:
            with torch.no_grad():
                mean, log_std = self.actor(batch.tensors()[0])
                _, log_probs, _ = squashed_sample(mean, log_std, self._noise(len(batch)))
        loss = self.temperature_loss(log_probs)
        self.temperature_optimizer.zero_grad()
        loss.backward()
        self.temperature_optimizer.step()
        return float(loss.detach())

    def soft_update_targets(self, tau: Optional[float] = None):
        tau = self.config.tau if tau is None else float(tau)
        if not 0.0 < tau <= 1.0:
            raise InputError(f"tau must lie in (0, 1], got {tau}")
        with torch.no_grad():
            for critic, target in ((self.critic1, self.target1), (self.critic2, self.target2)):
                for p, tp in zip(critic.parameters(), target.parameters()):
                    tp.mul_(1.0 - tau).add_(tau * p)

    def update(self, batch: BatchLike) -> dict:
        """One full gradient step: critics, actor, temperature, targets."""
        batch = _as_batch(batch)
        critic_loss = self.update_critics(batch)
        actor_loss, log_probs = self.update_actor(batch)
        temperature_loss = self.update_temperature(batch, log_probs)
        self.soft_update_targets()
        self.update_count += 1
        return {"critic_loss": critic_loss, "actor_loss": actor_loss,
                "temperature_loss": temperature_loss, "temperature": self.temperature}

    # ---- Checkpoints -----------------------------------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "hidden_sizes": list(self.config.hidden_sizes),
            "actor": self.actor.state_dict(),
            "critic1": self.critic1.state_dict(),
            "critic2": self.critic2.state_dict(),
            "target1": self.target1.state_dict(),
            "target2": self.target2.state_dict(),
            "log_temperature": self.log_temperature.detach().clone(),
            "actor_optimizer": self.actor_optimizer.state_dict(),
            "critic_optimizer": self.critic_optimizer.state_dict(),
            "temperature_optimizer": self.temperature_optimizer.state_dict(),
            "generator": self.generator.get_state(),
            "update_count": self.update_count,
        }

    def load_state_dict(self, state: dict):
        version = state.get("version")
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version!r}")
        if (state["obs_dim"], state["act_dim"]) != (self.obs_dim, self.act_dim) \
                or tuple(state["hidden_sizes"]) != tuple(self.config.hidden_sizes):
            raise CheckpointError("checkpoint network shapes do not match this agent")
        self.actor.load_state_dict(state["actor"])
        self.critic1.load_state_dict(state["critic1"])
        self.critic2.load_state_dict(state["critic2"])
        self.target1.load_state_dict(state["target1"])
        self.target2.load_state_dict(state["target2"])
        with torch.no_grad():
            self.log_temperature.copy_(state["log_temperature"])
        self.actor_optimizer.load_state_dict(state["actor_optimizer"])
        self.critic_optimizer.load_state_dict(state["critic_optimizer"])
        self.temperature_optimizer.load_state_dict(state["temperature_optimizer"])
        self.generator.set_state(state["generator"])
        self.update_count = int(state["update_count"])

    def save_checkpoint(self, path: str):
        torch.save(self.state_dict(), path)

    def load_checkpoint(self, path: str):
        """Accepts an agent file or a training-session checkpoint."""
        state = read_checkpoint(path)
        self.load_state_dict(state.get("agent", state))


def read_checkpoint(path: str) -> dict:
    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, pickle.UnpicklingError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    if not isinstance(state, dict):
        raise CheckpointError(f"{path} does not hold a checkpoint")
    return state

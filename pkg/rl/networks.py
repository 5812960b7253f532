"""
Small fully-connected function approximators for the actor and critics.
Everything runs in double precision; tanh between hidden layers keeps the
losses smooth so finite differences can check the gradients.
"""

from typing import Sequence, Tuple

import torch
import torch.nn as nn

from errors import InputError
from rl.distributions import LOG_STD_MAX, LOG_STD_MIN

DTYPE = torch.float64


class MlpNetwork(nn.Module):
    """Linear layers with tanh in between and a linear output."""

    def __init__(self, layer_sizes: Sequence[int]):
        super().__init__()
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise InputError(f"layer sizes must be >= 2 positive integers, got {sizes}")
        self.layer_sizes = tuple(sizes)

        layers = []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            linear = nn.Linear(n_in, n_out, dtype=DTYPE)
            nn.init.xavier_uniform_(linear.weight)
            nn.init.zeros_(linear.bias)
            layers.append(linear)
            if i < len(sizes) - 2:
                layers.append(nn.Tanh())
        self.net = nn.Sequential(*layers)

    @property
    def output_layer(self) -> nn.Linear:
        return self.net[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class Actor(nn.Module):
    """Maps observations to the mean and log-std of the pre-squash Gaussian."""

    def __init__(self, obs_dim: int, act_dim: int, hidden_sizes: Sequence[int]):
        super().__init__()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.body = MlpNetwork([obs_dim, *hidden_sizes, 2 * act_dim])

    def forward(self, obs: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        mean, log_std = self.body(obs).chunk(2, dim=-1)
        return mean, torch.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX)


class Critic(nn.Module):
    """Q(s, a) as a scalar per row."""

    def __init__(self, obs_dim: int, act_dim: int, hidden_sizes: Sequence[int]):
        super().__init__()
        self.body = MlpNetwork([obs_dim + act_dim, *hidden_sizes, 1])

    def forward(self, obs: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        return self.body(torch.cat([obs, action], dim=-1)).squeeze(-1)

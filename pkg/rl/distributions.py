"""
Tanh-squashed Gaussian policy distribution.

Noise is passed in explicitly so that sampling is reparameterized and the
caller decides which random stream it comes from.
"""

import math

import torch
import torch.nn.functional as F
from torch.distributions import Normal

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

# Largest double strictly below 1; emitted actions never touch the bounds.
ACTION_BOUND = math.nextafter(1.0, 0.0)


def log_one_minus_tanh_sq(u: torch.Tensor) -> torch.Tensor:
    """log(1 - tanh(u)^2), stable for large |u|."""
    return 2.0 * (math.log(2.0) - u - F.softplus(-2.0 * u))


def squashed_log_prob(u: torch.Tensor, mean: torch.Tensor, log_std: torch.Tensor) -> torch.Tensor:
    """Log-density of tanh(u) where u ~ N(mean, exp(log_std)), summed over action dims."""
    base = Normal(mean, log_std.exp()).log_prob(u)
    return (base - log_one_minus_tanh_sq(u)).sum(dim=-1)


def squashed_sample(mean: torch.Tensor, log_std: torch.Tensor, noise: torch.Tensor):
    """Returns (action, log_prob, pre-squash sample)."""
    u = mean + log_std.exp() * noise
    return torch.tanh(u), squashed_log_prob(u, mean, log_std), u


def bound_action(action: torch.Tensor) -> torch.Tensor:
    return torch.clamp(action, -ACTION_BOUND, ACTION_BOUND)

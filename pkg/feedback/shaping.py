"""
Reward integration: the centered feedback mapping and the weighted blend
with the sparse environment reward.
"""

import math
import numbers
from dataclasses import dataclass

from errors import InputError

NEUTRAL_PROBABILITY = 0.5


@dataclass(frozen=True)
class FeedbackSample:
    """Decoder output p and its centered reward r_hf = 0.5 - p."""
    p: float
    r_hf: float

    @classmethod
    def from_probability(cls, p: float) -> "FeedbackSample":
        check_probability(p)
        return cls(p=float(p), r_hf=centered_feedback(p))


@dataclass(frozen=True)
class ShapedReward:
    r_env: float
    r_hf: float
    alpha: float
    r_total: float


def check_probability(p: float):
    if not (isinstance(p, numbers.Real) and math.isfinite(p) and 0.0 <= p <= 1.0):
        raise InputError(f"probability must lie in [0, 1], got {p!r}")


def centered_feedback(p: float) -> float:
    """Uncertain outputs (p = 0.5) are reward-neutral; confident errors cost up to 0.5."""
    return NEUTRAL_PROBABILITY - float(p)


def shape_reward(r_env: float, p: float, alpha: float) -> ShapedReward:
    check_probability(p)
    if not (math.isfinite(alpha) and alpha >= 0):
        raise InputError(f"feedback weight alpha must be >= 0, got {alpha!r}")
    if not math.isfinite(r_env):
        raise InputError(f"r_env must be finite, got {r_env!r}")
    r_hf = centered_feedback(p)
    return ShapedReward(r_env=float(r_env), r_hf=r_hf, alpha=float(alpha),
                        r_total=float(r_env) + float(alpha) * r_hf)

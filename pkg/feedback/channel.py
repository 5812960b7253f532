"""
Feedback channels: where a training step gets its decoder probability from.
"""

from abc import ABC, abstractmethod

import numpy as np

from errors import CheckpointError
from feedback.observer import ErrorJudgment, ObserverModel, simulate_decoder
from feedback.shaping import NEUTRAL_PROBABILITY, FeedbackSample
from feedback.stream import ProbabilityStream
from utils.seeding import generator_state, set_generator_state


class FeedbackChannel(ABC):
    name = "abstract"

    @abstractmethod
    def sample(self, judgment: ErrorJudgment) -> FeedbackSample:
        """Return the feedback for the transition that was just judged."""

    def state_dict(self) -> dict:
        return {"name": self.name}

    def load_state_dict(self, state: dict):
        if state.get("name") != self.name:
            raise CheckpointError(f"checkpoint was saved with a '{state.get('name')}' feedback channel, "
                                  f"this run uses '{self.name}'")


class ObserverChannel(FeedbackChannel):
    """Simulated decoder; always draws, even when alpha is 0."""
    name = "observer"

    def __init__(self, model: ObserverModel, rng: np.random.Generator):
        model.validate()
        self.model = model
        self.rng = rng

    def sample(self, judgment: ErrorJudgment) -> FeedbackSample:
        return simulate_decoder(judgment, self.model, self.rng)

    def state_dict(self) -> dict:
        return {"name": self.name, "rng": generator_state(self.rng)}

    def load_state_dict(self, state: dict):
        super().load_state_dict(state)
        set_generator_state(self.rng, state["rng"])


class StreamChannel(FeedbackChannel):
    """Replays recorded probabilities one per step; the judgment is ignored."""
    name = "stream"

    def __init__(self, stream: ProbabilityStream):
        self.stream = stream

    def sample(self, judgment: ErrorJudgment) -> FeedbackSample:
        return FeedbackSample.from_probability(self.stream.next())

    def state_dict(self) -> dict:
        return {"name": self.name, "position": self.stream.position}

    def load_state_dict(self, state: dict):
        super().load_state_dict(state)
        position = int(state["position"])
        if not 0 <= position <= len(self.stream):
            raise CheckpointError(f"stream position {position} is outside {self.stream.source} "
                                  f"({len(self.stream)} rows)")
        self.stream.position = position


class DisabledChannel(FeedbackChannel):
    """No observer: every step reports the neutral probability."""
    name = "disabled"

    def sample(self, judgment: ErrorJudgment) -> FeedbackSample:
        return FeedbackSample(p=NEUTRAL_PROBABILITY, r_hf=0.0)

"""
Simulated evaluative observer.

A ground-truth judgment ("did the last action make things worse?") is turned
into a graded decoder probability p by a per-subject confusion model: a
biased coin decides which side of 0.5 the decoder lands on (tpr/tnr), and a
Beta draw decides how confident it is (sharpness).
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import yaml

from errors import ConfigError
from feedback.shaping import FeedbackSample

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 0.005
DEFAULT_ERROR_MEAN = 0.8
DEFAULT_SHARPNESS = 10.0


class ErrorCause(str, enum.Enum):
    NONE = "none"
    MOVED_AWAY = "moved_away_from_subgoal"
    COLLISION = "collision"


@dataclass(frozen=True)
class ErrorJudgment:
    is_error: bool
    cause: ErrorCause

    @classmethod
    def correct(cls) -> "ErrorJudgment":
        return cls(is_error=False, cause=ErrorCause.NONE)


@dataclass(frozen=True)
class ObserverModel:
    """Confusion parameters of one subject's decoder.

    error_mean is the mean of the confident-error component (mu_e); the
    confident-correct component mirrors it at 1 - error_mean.
    """
    subject_id: str
    tpr: float
    tnr: float
    sharpness: float = DEFAULT_SHARPNESS
    error_mean: float = DEFAULT_ERROR_MEAN

    def validate(self, path: str = "observer"):
        for name in ("tpr", "tnr"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.5 <= value <= 1.0):
                raise ConfigError(f"{path}.{name}", f"must lie in [0.5, 1.0] (got {value})")
        if not (math.isfinite(self.sharpness) and self.sharpness > 0):
            raise ConfigError(f"{path}.sharpness", f"must be > 0 (got {self.sharpness})")
        if not (0.5 < self.error_mean < 1.0):
            raise ConfigError(f"{path}.error_mean", f"must lie in (0.5, 1.0) (got {self.error_mean})")
        if not self.subject_id:
            raise ConfigError(f"{path}.subject_id", "must be a non-empty string")


def judge_transition(prev_distance: float, collided: bool, curr_distance: float,
                     tolerance: float = DEFAULT_TOLERANCE) -> ErrorJudgment:
    """Collision beats regression; regression must exceed the tolerance strictly."""
    if collided:
        return ErrorJudgment(is_error=True, cause=ErrorCause.COLLISION)
    if curr_distance - prev_distance > tolerance:
        return ErrorJudgment(is_error=True, cause=ErrorCause.MOVED_AWAY)
    return ErrorJudgment.correct()


def judge_outcome(prev_distance: float, outcome, tolerance: float = DEFAULT_TOLERANCE) -> ErrorJudgment:
    return judge_transition(prev_distance, outcome.collided, outcome.distance_to_subgoal, tolerance)


def simulate_decoder(judgment: ErrorJudgment, model: ObserverModel,
                     rng: np.random.Generator) -> FeedbackSample:
    """Draw one decoder probability for a judgment.

    Each call consumes one uniform (the confusion coin) and one Beta draw.
    The Beta sample is reflected into the half picked by the coin, so
    thresholding p at 0.5 recovers tpr / tnr exactly in expectation.
    """
    hit = rng.random() < (model.tpr if judgment.is_error else model.tnr)
    says_error = hit if judgment.is_error else not hit
    mean = model.error_mean if says_error else 1.0 - model.error_mean
    p = float(rng.beta(model.sharpness * mean, model.sharpness * (1.0 - mean)))
    if says_error and p < 0.5:
        p = 1.0 - p
    elif not says_error and p > 0.5:
        p = 1.0 - p
    return FeedbackSample(p=p, r_hf=0.5 - p)


# ---- Subject bank -------------------------------------------------------------------------------------

def build_observer_bank(count: int = 12, low: float = 0.60, high: float = 0.90,
                        sharpness: float = DEFAULT_SHARPNESS) -> List[ObserverModel]:
    """Subjects S01..Snn with tpr = tnr evenly spaced in [low, high]."""
    accuracies = np.linspace(low, high, count)
    return [ObserverModel(subject_id=f"S{i + 1:02d}", tpr=round(float(acc), 4),
                          tnr=round(float(acc), 4), sharpness=sharpness)
            for i, acc in enumerate(accuracies)]


def load_observer_bank(path: str) -> Dict[str, ObserverModel]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError("feedback.bank", f"cannot read observer bank {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigError("feedback.bank", f"{path} is not valid YAML: {e}")

    entries = data.get("subjects") if isinstance(data, dict) else None
    if not isinstance(entries, list) or not entries:
        raise ConfigError("feedback.bank", f"{path} must contain a non-empty 'subjects' list")

    bank = {}
    for i, entry in enumerate(entries):
        where = f"subjects[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(where, "expected a mapping")
        unknown = set(entry) - {"subject_id", "tpr", "tnr", "sharpness", "error_mean"}
        if unknown:
            raise ConfigError(f"{where}.{sorted(unknown)[0]}", "unknown key")
        try:
            model = ObserverModel(
                subject_id=str(entry["subject_id"]),
                tpr=float(entry["tpr"]),
                tnr=float(entry["tnr"]),
                sharpness=float(entry.get("sharpness", DEFAULT_SHARPNESS)),
                error_mean=float(entry.get("error_mean", DEFAULT_ERROR_MEAN)),
            )
        except KeyError as e:
            raise ConfigError(f"{where}.{e.args[0]}", "missing")
        except (TypeError, ValueError) as e:
            raise ConfigError(where, f"bad value: {e}")
        model.validate(where)
        if model.subject_id in bank:
            raise ConfigError(f"{where}.subject_id", f"duplicate subject '{model.subject_id}'")
        bank[model.subject_id] = model
    logger.debug("Loaded %d observer models from %s", len(bank), path)
    return bank


def save_observer_bank(path: str, models: List[ObserverModel]):
    data = {"subjects": [
        {"subject_id": m.subject_id, "tpr": m.tpr, "tnr": m.tnr,
         "sharpness": m.sharpness, "error_mean": m.error_mean}
        for m in models
    ]}
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False)

"""
Evaluation quantities: path efficiency, success rate, collision statistics,
return curves and their area under the curve.

All aggregates are order-independent: values are sorted before reduction so
that the same set of episodes always yields the same bits. Standard
deviations use the population convention (divide by N).
"""

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from errors import InputError, UsageError


@dataclass
class EpisodeRecord:
    """One episode; the unit every metric is computed from."""
    end_effector_path: np.ndarray
    per_step_r_env: List[float] = field(default_factory=list)
    per_step_r_total: List[float] = field(default_factory=list)
    collision_steps: int = 0
    success: bool = False
    episode_index: int = 0
    global_step_at_start: int = 0
    phase: str = "train"

    @property
    def num_steps(self) -> int:
        return len(self.per_step_r_env)

    @property
    def env_return(self) -> float:
        return math.fsum(self.per_step_r_env)

    @property
    def total_return(self) -> float:
        return math.fsum(self.per_step_r_total)

    def to_json(self) -> str:
        return json.dumps({
            "phase": self.phase,
            "episode_index": self.episode_index,
            "global_step_at_start": self.global_step_at_start,
            "success": bool(self.success),
            "collision_steps": int(self.collision_steps),
            "per_step_r_env": [float(r) for r in self.per_step_r_env],
            "per_step_r_total": [float(r) for r in self.per_step_r_total],
            "end_effector_path": np.asarray(self.end_effector_path, dtype=np.float64).tolist(),
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "EpisodeRecord":
        data = json.loads(line)
        return cls(
            end_effector_path=np.asarray(data["end_effector_path"], dtype=np.float64),
            per_step_r_env=list(data["per_step_r_env"]),
            per_step_r_total=list(data["per_step_r_total"]),
            collision_steps=int(data["collision_steps"]),
            success=bool(data["success"]),
            episode_index=int(data["episode_index"]),
            global_step_at_start=int(data["global_step_at_start"]),
            phase=data.get("phase", "train"),
        )


@dataclass(frozen=True)
class MeanStd:
    mean: float
    std: float

    def __str__(self):
        return f"{self.mean:.2f} ± {self.std:.2f}"


@dataclass(frozen=True)
class ReturnCurve:
    steps: Tuple[int, ...]
    values: Tuple[float, ...]
    auc: float

    def points(self) -> List[Tuple[int, float]]:
        return list(zip(self.steps, self.values))


@dataclass
class RunSummary:
    success_rate: MeanStd
    path_efficiency: MeanStd
    mean_collision: MeanStd
    collision_rate: float
    return_curve: ReturnCurve
    episodes: int = 0


def _shifted_mean_std(arr: np.ndarray, axis: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    # Shifting by the first entry keeps constant inputs exact (mean = value, std = 0).
    anchor = np.take(arr, [0], axis=axis)
    deviations = arr - anchor
    return np.squeeze(anchor, axis=axis) + np.mean(deviations, axis=axis), np.std(deviations, axis=axis)


def mean_std(values: Iterable[float]) -> MeanStd:
    arr = np.sort(np.asarray(list(values), dtype=np.float64))
    if arr.size == 0:
        raise UsageError("cannot aggregate an empty list")
    mean, std = _shifted_mean_std(arr)
    return MeanStd(mean=float(mean), std=float(std))


def _require_records(records: Sequence[EpisodeRecord]):
    if not records:
        raise UsageError("metrics need at least one episode record")


# ---- Per-episode ----------------------------------------------------------------------------------------

def path_efficiency(path) -> float:
    """Straight-line displacement over arc length, clipped to (0, 1].

    Paths with zero arc length (including single points) count as 1.
    """
    points = np.asarray(path, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    if points.shape[0] < 1:
        raise InputError("path needs at least one point")
    if not np.all(np.isfinite(points)):
        raise InputError("path contains non-finite coordinates")
    if points.shape[0] == 1:
        return 1.0
    arc = float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))
    if arc == 0.0:
        return 1.0
    chord = float(np.linalg.norm(points[-1] - points[0]))
    return float(np.clip(chord / arc, np.finfo(np.float64).tiny, 1.0))


# ---- Summary aggregates ---------------------------------------------------------------------------------

def success_rate(records: Sequence[EpisodeRecord]) -> MeanStd:
    _require_records(records)
    return mean_std(1.0 if r.success else 0.0 for r in records)


def mean_collision(records: Sequence[EpisodeRecord]) -> MeanStd:
    _require_records(records)
    return mean_std(float(r.collision_steps) for r in records)


def path_efficiency_stats(records: Sequence[EpisodeRecord]) -> MeanStd:
    _require_records(records)
    return mean_std(path_efficiency(r.end_effector_path) for r in records)


def collision_rate(records: Sequence[EpisodeRecord]) -> float:
    """Fraction of episodes with at least one colliding step."""
    _require_records(records)
    return sum(1 for r in records if r.collision_steps > 0) / len(records)


# ---- Return curves ---------------------------------------------------------------------------------------

def build_return_curve(evaluation_logs: Sequence[Tuple[int, Sequence[float]]]) -> ReturnCurve:
    """Mean evaluation return per checkpoint plus trapezoidal AUC over steps."""
    steps, values = [], []
    for step, returns in evaluation_logs:
        if steps and step <= steps[-1]:
            raise InputError(f"checkpoint steps must increase strictly ({steps[-1]} then {step})")
        if len(returns) == 0:
            raise InputError(f"checkpoint at step {step} has no evaluation returns")
        steps.append(int(step))
        values.append(float(np.mean(np.sort(np.asarray(returns, dtype=np.float64)))))
    return ReturnCurve(steps=tuple(steps), values=tuple(values), auc=curve_auc(steps, values))


def curve_auc(steps: Sequence[float], values: Sequence[float]) -> float:
    if len(steps) < 2:
        return 0.0
    return float(trapezoid(np.asarray(values, dtype=np.float64), np.asarray(steps, dtype=np.float64)))


def aggregate_curves(curves: Sequence[ReturnCurve]) -> Tuple[ReturnCurve, Tuple[float, ...]]:
    """Pointwise mean curve and population std across runs sharing checkpoint steps."""
    if not curves:
        raise UsageError("cannot aggregate zero curves")
    steps = curves[0].steps
    for curve in curves[1:]:
        if curve.steps != steps:
            raise InputError("curves were evaluated at different checkpoint steps")
    values = np.sort(np.array([curve.values for curve in curves], dtype=np.float64), axis=0)
    mean, std = _shifted_mean_std(values, axis=0)
    mean_curve = ReturnCurve(steps=steps, values=tuple(float(v) for v in mean),
                             auc=curve_auc(steps, mean))
    return mean_curve, tuple(float(s) for s in std)


def smooth(values: Sequence[float], window: int) -> np.ndarray:
    """Trailing moving average; the first points average what is available."""
    arr = np.asarray(values, dtype=np.float64)
    if window <= 1 or arr.size == 0:
        return arr.copy()
    csum = np.concatenate([[0.0], np.cumsum(arr)])
    idx = np.arange(arr.size)
    lo = np.maximum(0, idx + 1 - window)
    return (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)


def steps_to_threshold(curve: ReturnCurve, threshold: float, window: int = 3) -> Optional[int]:
    """First checkpoint step where the smoothed return reaches `threshold`."""
    smoothed = smooth(curve.values, window)
    hits = np.nonzero(smoothed >= threshold)[0]
    return int(curve.steps[hits[0]]) if hits.size else None


def final_return(curve: ReturnCurve, window: int = 3) -> float:
    if not curve.values:
        raise UsageError("empty return curve")
    return float(smooth(curve.values, window)[-1])


def summarize_run(eval_records: Sequence[EpisodeRecord], curve: ReturnCurve) -> RunSummary:
    _require_records(eval_records)
    return RunSummary(
        success_rate=success_rate(eval_records),
        path_efficiency=path_efficiency_stats(eval_records),
        mean_collision=mean_collision(eval_records),
        collision_rate=collision_rate(eval_records),
        return_curve=curve,
        episodes=len(eval_records),
    )

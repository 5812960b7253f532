"""
One training run from a resolved configuration to its artifacts on disk:
config.yaml, curve.csv, episodes.jsonl, checkpoint.pt and, last, summary.csv.
"""

import logging
import math
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, RunIOError
from feedback.channel import DisabledChannel, FeedbackChannel, ObserverChannel, StreamChannel
from feedback.observer import load_observer_bank
from feedback.stream import load_probability_stream
from metrics import (EpisodeRecord, ReturnCurve, RunSummary, build_return_curve,
                     curve_auc, summarize_run)
from rl.trainer import TrainingSession
from runner.config import ExperimentConfig, dump_config, experiment_to_dict
from utils.paths import (CHECKPOINT_FILE, CONFIG_FILE, CURVE_FILE, EPISODES_FILE,
                         SPARSE_SUBJECT, SUMMARY_FILE, is_run_complete, make_dir, run_dir)
from utils.seeding import RngStreams, cell_seed
from utils.tables import atomic_write_text, parse_number, read_table, write_table

logger = logging.getLogger(__name__)

METHOD_SPARSE = "sparse"
METHOD_RLIHF = "rlihf"

CURVE_HEADER = ("step", "eval_return_mean", "train_return")
SUMMARY_HEADER = ("method", "alpha", "subject",
                  "success_rate_mean", "success_rate_std",
                  "path_eff_mean", "path_eff_std",
                  "mean_collision_mean", "mean_collision_std",
                  "collision_rate", "episodes")


def method_of(cfg: ExperimentConfig) -> str:
    return METHOD_RLIHF if cfg.feedback_enabled else METHOD_SPARSE


def cell_directory(cfg: ExperimentConfig, seed: int) -> str:
    return run_dir(cfg.output_dir, cfg.protocol, cfg.alpha, cfg.subject_label, seed)


def checkpoint_steps(total_timesteps: int, interval: int) -> List[int]:
    """Evaluation points: 0, every `interval` steps, and the final step."""
    steps = list(range(0, total_timesteps, interval))
    steps.append(total_timesteps)
    return steps


def make_streams(cfg: ExperimentConfig, seed: int, eval_episodes: Optional[int] = None) -> RngStreams:
    subject = cfg.feedback.subject if cfg.feedback.source == "observer" else ""
    episodes = cfg.eval.episodes if eval_episodes is None else eval_episodes
    return RngStreams.from_seed(cell_seed(cfg.master_seed, seed), subject or "", episodes)


def build_channel(cfg: ExperimentConfig, streams: RngStreams) -> FeedbackChannel:
    fb = cfg.feedback
    if fb.source == "observer":
        bank = load_observer_bank(fb.bank)
        if fb.subject not in bank:
            raise ConfigError("feedback.subject", f"'{fb.subject}' is not in the observer bank {fb.bank}")
        return ObserverChannel(bank[fb.subject], streams.decoder)
    if fb.source == "stream":
        stream = load_probability_stream(fb.stream)
        if len(stream) < cfg.total_timesteps:
            raise ConfigError("feedback.stream",
                              f"{fb.stream} has {len(stream)} rows but training runs "
                              f"{cfg.total_timesteps} steps")
        return StreamChannel(stream)
    return DisabledChannel()


def summary_row(method: str, alpha: float, subject: Optional[str], summary: RunSummary) -> list:
    return [method, alpha, subject or SPARSE_SUBJECT,
            summary.success_rate.mean, summary.success_rate.std,
            summary.path_efficiency.mean, summary.path_efficiency.std,
            summary.mean_collision.mean, summary.mean_collision.std,
            summary.collision_rate, summary.episodes]


def _mean_or_none(values: Sequence[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


# ---- Training -----------------------------------------------------------------------------------------

def train_single(cfg: ExperimentConfig, seed: int = 0, force: bool = False) -> RunSummary:
    """Train one (alpha, subject, seed) cell; a completed directory is left alone unless forced."""
    cfg.validate()
    directory = cell_directory(cfg, seed)
    if is_run_complete(directory) and not force:
        logger.info("Run already complete, skipping: %s", directory)
        return load_run_summary(directory, cfg.eval.summary_window)

    streams = make_streams(cfg, seed)
    channel = build_channel(cfg, streams)
    session = TrainingSession(cfg.scene, cfg.sac, cfg.alpha, channel, streams, cfg.progress_tolerance)

    try:
        make_dir(directory)
        summary_path = os.path.join(directory, SUMMARY_FILE)
        if os.path.exists(summary_path):
            os.remove(summary_path)
        atomic_write_text(os.path.join(directory, CONFIG_FILE), _frozen_config(cfg, seed))
    except OSError as e:
        raise RunIOError(directory, f"cannot prepare run directory: {e}")

    logger.info("Starting %s run (alpha=%g, subject=%s, seed=%d, %d steps) in %s",
                method_of(cfg), cfg.alpha, cfg.subject_label or SPARSE_SUBJECT, seed,
                cfg.total_timesteps, directory)

    eval_log: List[Tuple[int, List[float]]] = []
    eval_records: List[EpisodeRecord] = []
    train_returns: List[Optional[float]] = []
    finished: List[float] = []
    for step in checkpoint_steps(cfg.total_timesteps, cfg.eval.interval):
        while session.global_step < step:
            log = session.train_step()
            if log.episode is not None:
                finished.append(log.episode.total_return)
        records = session.evaluate(streams.eval_seeds)
        returns = [r.env_return for r in records]
        eval_log.append((step, returns))
        eval_records.extend(records)
        train_returns.append(_mean_or_none(finished))
        finished = []
        logger.info("step %d: eval return %.4f, success %.2f",
                    step, float(np.mean(returns)), sum(r.success for r in records) / len(records))

    logger.info("Finished %d steps with %d gradient updates over %d update phases",
                session.global_step, session.update_count, session.update_phases)

    curve = build_return_curve(eval_log)
    summary = summarize_run(eval_records[-cfg.eval.summary_window:], curve)
    _write_artifacts(directory, cfg, session, curve, train_returns, eval_records, summary)
    return summary


def _frozen_config(cfg: ExperimentConfig, seed: int) -> str:
    data = experiment_to_dict(cfg)
    data["sweep"] = {"alphas": [cfg.alpha], "seeds": [seed],
                     "subjects": [cfg.feedback.subject] if cfg.feedback.subject else "all"}
    return dump_config(data)


def _write_artifacts(directory: str, cfg: ExperimentConfig, session: TrainingSession,
                     curve: ReturnCurve, train_returns: Sequence[Optional[float]],
                     eval_records: Sequence[EpisodeRecord], summary: RunSummary):
    try:
        write_table(os.path.join(directory, CURVE_FILE), CURVE_HEADER,
                    [(step, value, train) for (step, value), train in zip(curve.points(), train_returns)])
        atomic_write_text(os.path.join(directory, EPISODES_FILE),
                          "".join(r.to_json() + "\n" for r in eval_records))
        session.save_checkpoint(os.path.join(directory, CHECKPOINT_FILE))
        write_table(os.path.join(directory, SUMMARY_FILE), SUMMARY_HEADER,
                    [summary_row(method_of(cfg), cfg.alpha, cfg.subject_label, summary)])
    except OSError as e:
        raise RunIOError(directory, f"cannot write run artifacts: {e}")
    logger.info("Wrote run artifacts to %s", directory)


# ---- Reading runs back --------------------------------------------------------------------------------

def read_curve(directory: str) -> Tuple[ReturnCurve, List[Optional[float]]]:
    path = os.path.join(directory, CURVE_FILE)
    try:
        rows = read_table(path)
    except OSError as e:
        raise RunIOError(path, f"cannot read learning curve: {e}")
    steps = [int(row["step"]) for row in rows]
    values = [parse_number(row["eval_return_mean"]) for row in rows]
    train = [parse_number(row["train_return"]) for row in rows]
    return ReturnCurve(steps=tuple(steps), values=tuple(values), auc=curve_auc(steps, values)), train


def read_episodes(directory: str) -> List[EpisodeRecord]:
    path = os.path.join(directory, EPISODES_FILE)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return [EpisodeRecord.from_json(line) for line in f if line.strip()]
    except OSError as e:
        raise RunIOError(path, f"cannot read episode log: {e}")


def final_episodes(directory: str, summary_window: int) -> List[EpisodeRecord]:
    return read_episodes(directory)[-summary_window:]


def load_run_summary(directory: str, summary_window: int) -> RunSummary:
    curve, _ = read_curve(directory)
    return summarize_run(final_episodes(directory, summary_window), curve)


# ---- Checkpoint evaluation ----------------------------------------------------------------------------

def evaluate_checkpoint(cfg: ExperimentConfig, seed: int, checkpoint_path: str,
                        episodes: int) -> RunSummary:
    """Deterministic episodes of a saved policy, feedback off."""
    if episodes <= 0:
        raise ConfigError("--episodes", f"must be positive (got {episodes})")
    streams = make_streams(cfg, seed, eval_episodes=episodes)
    session = TrainingSession(cfg.scene, cfg.sac, cfg.alpha, DisabledChannel(), streams,
                              cfg.progress_tolerance)
    session.agent.load_checkpoint(checkpoint_path)
    records = session.evaluate(streams.eval_seeds)
    curve = build_return_curve([(0, [r.env_return for r in records])])
    logger.info("Evaluated %s over %d episodes", checkpoint_path, episodes)
    return summarize_run(records, curve)

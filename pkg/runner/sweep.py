"""
Multi-run protocols: the feedback-weight sweep and the per-subject
(leave-one-subject-out) study.

Cells run in worker processes; each owns its output directory and random
streams. Aggregation re-reads finished cells from disk in a fixed order, so
the tables do not depend on which cell finished first or on how many times
the sweep was resumed.
"""

import logging
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from database import (CellRecord, RunRegistry, STATUS_DONE, STATUS_FAILED,
                      STATUS_PENDING, STATUS_RUNNING)
from errors import ConfigError, SweepFailedError
from feedback.observer import load_observer_bank
from metrics import (ReturnCurve, aggregate_curves, collision_rate, final_return, mean_std,
                     steps_to_threshold, summarize_run)
from runner.config import ExperimentConfig, ResolvedConfig, config_fingerprint
from runner.train import (METHOD_RLIHF, METHOD_SPARSE, SUMMARY_HEADER, cell_directory,
                          final_episodes, read_curve, summary_row, train_single)
from utils.paths import SPARSE_SUBJECT, SUMMARY_FILE, is_run_complete, protocol_dir
from utils.tables import write_table

logger = logging.getLogger(__name__)

SWEEP_PROTOCOL = "sweep"
LOSO_PROTOCOL = "loso"
ACCELERATION_FILE = "acceleration.csv"
LOSO_REPORT_FILE = "loso_report.csv"
FINGERPRINT_KEY = "config_fingerprint"

ACCELERATION_HEADER = ("method", "alpha", "subject", "seeds",
                       "auc_mean", "auc_std", "auc_ratio",
                       "auc_diff_mean", "auc_diff_std",
                       "seeds_accelerated", "median_steps_ratio",
                       "success_rate_mean", "collision_rate")


@dataclass(frozen=True)
class Cell:
    """One (method, alpha, subject, seed) run of a protocol."""
    method: str
    alpha: float
    subject: Optional[str]
    seed: int

    @property
    def group(self) -> Tuple[str, float, str]:
        return self.method, self.alpha, self.subject or SPARSE_SUBJECT

    def config(self, base: ExperimentConfig) -> ExperimentConfig:
        if self.method == METHOD_SPARSE:
            return replace(base, alpha=0.0,
                           feedback=replace(base.feedback, source="disabled", stream=None))
        if base.feedback.source == "stream":
            return replace(base, alpha=self.alpha)
        return replace(base, alpha=self.alpha,
                       feedback=replace(base.feedback, source="observer", subject=self.subject,
                                        stream=None))

    def directory(self, base: ExperimentConfig) -> str:
        return cell_directory(self.config(base), self.seed)

    def record(self, base: ExperimentConfig) -> CellRecord:
        return CellRecord(protocol=base.protocol, method=self.method, alpha=self.alpha,
                          subject=self.subject or SPARSE_SUBJECT, seed=self.seed,
                          run_dir=self.directory(base))


def sort_cells(cells: Sequence[Cell]) -> List[Cell]:
    return sorted(cells, key=lambda c: (c.method != METHOD_SPARSE, c.alpha, c.subject or "", c.seed))


# ---- Cell planning ------------------------------------------------------------------------------------

def _feedback_subjects(resolved: ResolvedConfig) -> List[Optional[str]]:
    base = resolved.experiment
    if base.feedback.source == "stream":
        return ["stream"]
    if base.feedback.source != "observer":
        raise ConfigError("feedback.source", "multi-run protocols need an observer or stream source")
    return resolved.sweep.resolve_subjects(load_observer_bank(base.feedback.bank))


def sweep_cells(resolved: ResolvedConfig) -> List[Cell]:
    """Every alpha > 0 per subject and seed, plus the sparse baseline (alpha 0) per seed."""
    spec = resolved.sweep
    subjects = _feedback_subjects(resolved)
    cells = [Cell(METHOD_SPARSE, 0.0, None, seed) for seed in spec.seeds]
    for alpha in sorted(a for a in spec.alphas if a > 0):
        for subject in subjects:
            cells.extend(Cell(METHOD_RLIHF, alpha, subject, seed) for seed in spec.seeds)
    return sort_cells(cells)


def loso_cells(resolved: ResolvedConfig) -> List[Cell]:
    """One feedback run per subject and seed at the configured alpha, plus shared sparse runs."""
    alpha = resolved.experiment.alpha
    if alpha <= 0:
        raise ConfigError("alpha", "the per-subject protocol needs alpha > 0")
    subjects = _feedback_subjects(resolved)
    cells = [Cell(METHOD_SPARSE, 0.0, None, seed) for seed in resolved.sweep.seeds]
    for subject in subjects:
        cells.extend(Cell(METHOD_RLIHF, alpha, subject, seed) for seed in resolved.sweep.seeds)
    return sort_cells(cells)


# ---- Execution ----------------------------------------------------------------------------------------

def _init_worker():
    torch.set_num_threads(1)


def run_cell(job: Tuple[ExperimentConfig, int, bool]) -> Tuple[bool, str]:
    """Worker entry point; reports (success, message) instead of raising."""
    cfg, seed, force = job
    try:
        train_single(cfg, seed, force)
        return True, ""
    except Exception as e:
        logger.exception("Run failed: alpha=%g subject=%s seed=%d",
                         cfg.alpha, cfg.subject_label or SPARSE_SUBJECT, seed)
        return False, f"{type(e).__name__}: {e}"


def _check_fingerprint(registry: RunRegistry, base: ExperimentConfig, force: bool):
    # alpha and subject vary per cell; they do not identify the protocol.
    neutral = replace(base, alpha=0.0, feedback=replace(base.feedback, subject=None))
    fingerprint = config_fingerprint(neutral)
    stored = registry.get_meta(FINGERPRINT_KEY)
    if stored and stored != fingerprint and not force:
        raise ConfigError("--config", f"{registry.db_path} belongs to a run made with a different "
                                      "configuration; use --force to overwrite it")
    registry.set_meta(FINGERPRINT_KEY, fingerprint)


def run_cells(base: ExperimentConfig, cells: Sequence[Cell], workers: int = 1,
              force: bool = False) -> List[str]:
    """Run every cell that is not complete; returns failure descriptions."""
    registry = RunRegistry.for_protocol_dir(protocol_dir(base.output_dir, base.protocol))
    _check_fingerprint(registry, base, force)

    pending: List[Cell] = []
    for cell in cells:
        record = cell.record(base)
        registry.register_cell(record)
        if not force and is_run_complete(record.run_dir):
            registry.set_status(record, STATUS_DONE)
        else:
            registry.set_status(record, STATUS_PENDING)
            pending.append(cell)
    logger.info("%d of %d cells to run (%d already complete)",
                len(pending), len(cells), len(cells) - len(pending))

    failures: List[str] = []

    def finished(cell: Cell, success: bool, message: str):
        record = cell.record(base)
        registry.set_status(record, STATUS_DONE if success else STATUS_FAILED, message)
        if not success:
            failures.append(f"{record.run_dir}: {message}")

    if workers <= 1:
        for cell in pending:
            registry.set_status(cell.record(base), STATUS_RUNNING)
            finished(cell, *run_cell((cell.config(base), cell.seed, force)))
        return sorted(failures)

    # torch's thread pool does not survive fork.
    context = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=context, initializer=_init_worker) as pool:
        futures = {}
        for cell in pending:
            registry.set_status(cell.record(base), STATUS_RUNNING)
            futures[pool.submit(run_cell, (cell.config(base), cell.seed, force))] = cell
        for future in as_completed(futures):
            try:
                success, message = future.result()
            except Exception as e:
                success, message = False, f"worker crashed: {type(e).__name__}: {e}"
            finished(futures[future], success, message)
    return sorted(failures)


# ---- Aggregation --------------------------------------------------------------------------------------

def group_cells(cells: Sequence[Cell]) -> Dict[Tuple[str, float, str], List[Cell]]:
    groups: Dict[Tuple[str, float, str], List[Cell]] = {}
    for cell in sort_cells(cells):
        groups.setdefault(cell.group, []).append(cell)
    return dict(sorted(groups.items(), key=lambda item: (item[0][0] != METHOD_SPARSE, item[0][1], item[0][2])))


def pooled_summary_rows(base: ExperimentConfig, cells: Sequence[Cell]) -> List[list]:
    """Summary rows: final-window evaluation episodes pooled across seeds."""
    rows = []
    for (method, alpha, subject), members in group_cells(cells).items():
        episodes = []
        curves = []
        for cell in members:
            directory = cell.directory(base)
            episodes.extend(final_episodes(directory, base.eval.summary_window))
            curves.append(read_curve(directory)[0])
        curve, _ = aggregate_curves(curves)
        rows.append(summary_row(method, alpha, subject, summarize_run(episodes, curve)))
    return rows


def _steps_ratio(curve: ReturnCurve, baseline: ReturnCurve, fraction: float,
                 window: int) -> Optional[float]:
    """Steps-to-threshold of `curve` over that of its paired baseline."""
    target = final_return(baseline, window)
    if target <= 0:
        return None
    threshold = fraction * target
    base_steps = steps_to_threshold(baseline, threshold, window)
    if not base_steps:
        return None
    steps = steps_to_threshold(curve, threshold, window)
    return math.inf if steps is None else steps / base_steps


def acceleration_rows(base: ExperimentConfig, cells: Sequence[Cell]) -> List[list]:
    """Per group: AUC statistics and paired acceleration against the sparse runs of the same seeds."""
    baselines = {cell.seed: read_curve(cell.directory(base))[0]
                 for cell in cells if cell.method == METHOD_SPARSE}
    rows = []
    for (method, alpha, subject), members in group_cells(cells).items():
        aucs, ratios, accelerated, episodes = [], [], 0, []
        baseline_aucs, differences = [], []
        for cell in members:
            directory = cell.directory(base)
            curve = read_curve(directory)[0]
            baseline = baselines.get(cell.seed)
            if baseline is None:
                raise ConfigError("sweep.seeds", f"seed {cell.seed} has no sparse baseline run")
            aucs.append(curve.auc)
            baseline_aucs.append(baseline.auc)
            differences.append(curve.auc - baseline.auc)
            if curve.auc > baseline.auc:
                accelerated += 1
            ratio = _steps_ratio(curve, baseline, base.eval.threshold_fraction, base.eval.smoothing)
            if ratio is not None:
                ratios.append(ratio)
            episodes.extend(final_episodes(directory, base.eval.summary_window))
        auc = mean_std(aucs)
        baseline_auc = mean_std(baseline_aucs).mean
        difference = mean_std(differences)
        rows.append([
            method, alpha, subject, len(members),
            auc.mean, auc.std,
            auc.mean / baseline_auc if baseline_auc > 0 else None,
            difference.mean, difference.std,
            accelerated,
            float(np.median(np.sort(ratios))) if ratios else None,
            mean_std(1.0 if e.success else 0.0 for e in episodes).mean,
            collision_rate(episodes),
        ])
    return rows


def _finish(base: ExperimentConfig, cells: Sequence[Cell], failures: List[str],
            report_file: str) -> List[list]:
    if failures:
        for failure in failures:
            logger.error("Failed cell %s", failure)
        raise SweepFailedError(failures)
    directory = protocol_dir(base.output_dir, base.protocol)
    rows = pooled_summary_rows(base, cells)
    write_table(os.path.join(directory, SUMMARY_FILE), SUMMARY_HEADER, rows)
    write_table(os.path.join(directory, report_file), ACCELERATION_HEADER, acceleration_rows(base, cells))
    logger.info("Wrote %s summary (%d rows) to %s", base.protocol, len(rows), directory)
    return rows


# ---- Protocols ----------------------------------------------------------------------------------------

def alpha_sweep(resolved: ResolvedConfig, workers: int = 1, force: bool = False) -> List[list]:
    base = replace(resolved.experiment, protocol=SWEEP_PROTOCOL)
    cells = sweep_cells(resolved)
    logger.info("Feedback-weight sweep: %d cells over alphas %s",
                len(cells), ", ".join(f"{a:g}" for a in sorted({c.alpha for c in cells})))
    failures = run_cells(base, cells, workers, force)
    return _finish(base, cells, failures, ACCELERATION_FILE)


def loso_eval(resolved: ResolvedConfig, workers: int = 1, force: bool = False) -> List[list]:
    base = replace(resolved.experiment, protocol=LOSO_PROTOCOL)
    cells = loso_cells(resolved)
    logger.info("Per-subject study: %d cells at alpha %g", len(cells), base.alpha)
    failures = run_cells(base, cells, workers, force)
    return _finish(base, cells, failures, LOSO_REPORT_FILE)

"""
Plot-ready tables from finished runs. Nothing is rendered here; the tables
are plain CSV so figures can be drawn by any external tool.

  curves.csv                    mean +/- std evaluation return per group and step
  paired_a<alpha>_<subject>.csv feedback runs next to the sparse runs of the same seeds
"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Tuple

from database import RunRegistry
from errors import ConfigError, IncompleteRunsError
from metrics import ReturnCurve, aggregate_curves
from runner.train import METHOD_SPARSE, read_curve
from utils.paths import (CONFIG_FILE, REGISTRY_FILE, SUMMARY_FILE, format_alpha,
                         is_run_complete, make_dir, slugify)
from utils.tables import parse_number, read_table, write_table

logger = logging.getLogger(__name__)

PLOTS_DIR = "plots"
CURVES_FILE = "curves.csv"
CURVES_HEADER = ("method", "alpha", "subject", "step", "return_mean", "return_std", "seeds")
PAIRED_HEADER = ("step", "feedback_mean", "feedback_std", "sparse_mean", "sparse_std", "seeds")


@dataclass(frozen=True)
class FinishedRun:
    method: str
    alpha: float
    subject: str
    seed: int
    directory: str

    @property
    def group(self) -> Tuple[str, float, str]:
        return self.method, self.alpha, self.subject


def protocol_root(run_directory: str) -> str:
    """<out>/<protocol> of a run laid out as <out>/<protocol>/<alpha>/<subject>/<seed>."""
    path = os.path.abspath(run_directory)
    for _ in range(4):
        path = os.path.dirname(path)
    return path


def scan(root: str) -> Tuple[List[str], List[str]]:
    """Run directories and run registries below `root` (itself included)."""
    runs, registries = [], []
    for current, dirs, files in os.walk(root):
        dirs[:] = sorted(d for d in dirs if d != PLOTS_DIR)
        if CONFIG_FILE in files:
            runs.append(current)
        if REGISTRY_FILE in files:
            registries.append(os.path.join(current, REGISTRY_FILE))
    return sorted(runs), sorted(registries)


def missing_runs(run_dirs: List[str], registries: List[str]) -> List[str]:
    missing = {d for d in run_dirs if not is_run_complete(d)}
    for registry_path in registries:
        for cell in RunRegistry(registry_path).get_cells():
            if not is_run_complete(cell.run_dir):
                missing.add(cell.run_dir)
    return sorted(missing)


def _load_run(directory: str) -> FinishedRun:
    row = read_table(os.path.join(directory, SUMMARY_FILE))[0]
    return FinishedRun(method=row["method"], alpha=parse_number(row["alpha"]) or 0.0,
                       subject=row["subject"], seed=int(os.path.basename(directory)),
                       directory=directory)


def _group(runs: List[FinishedRun]) -> Dict[Tuple[str, float, str], List[FinishedRun]]:
    groups: Dict[Tuple[str, float, str], List[FinishedRun]] = {}
    for run in sorted(runs, key=lambda r: (r.method != METHOD_SPARSE, r.alpha, r.subject, r.seed)):
        groups.setdefault(run.group, []).append(run)
    return groups


def _curves_rows(groups, curves: Dict[str, ReturnCurve]) -> List[list]:
    rows = []
    for (method, alpha, subject), runs in groups.items():
        mean, std = aggregate_curves([curves[r.directory] for r in runs])
        for (step, value), spread in zip(mean.points(), std):
            rows.append([method, alpha, subject, step, value, spread, len(runs)])
    return rows


def _paired_rows(runs: List[FinishedRun], sparse_by_seed: Dict[int, FinishedRun],
                 curves: Dict[str, ReturnCurve]) -> List[list]:
    paired = [r for r in runs if r.seed in sparse_by_seed]
    feedback, feedback_std = aggregate_curves([curves[r.directory] for r in paired])
    sparse, sparse_std = aggregate_curves([curves[sparse_by_seed[r.seed].directory] for r in paired])
    if feedback.steps != sparse.steps:
        raise ConfigError("--dir", "feedback and sparse runs were evaluated at different steps")
    return [[step, f, fs, s, ss, len(paired)]
            for step, f, fs, s, ss in zip(feedback.steps, feedback.values, feedback_std,
                                          sparse.values, sparse_std)]


def export_plots(root: str) -> List[str]:
    """
    Write plot tables under <root>/plots and return their paths. A root
    holding several protocols (the output directory of a sweep and a loso
    study) is exported one protocol at a time, into <protocol>/plots.
    """
    if not os.path.isdir(root):
        raise ConfigError("--dir", f"not a directory: {root}")
    run_dirs, registries = scan(root)
    missing = missing_runs(run_dirs, registries)
    if missing:
        raise IncompleteRunsError(missing)
    if not run_dirs:
        raise ConfigError("--dir", f"no runs found under {root}")

    by_protocol: Dict[str, List[str]] = {}
    for directory in run_dirs:
        by_protocol.setdefault(protocol_root(directory), []).append(directory)
    if len(by_protocol) == 1:
        return _export_runs(root, run_dirs)

    logger.info("%s holds %d protocols; exporting each on its own", root, len(by_protocol))
    written = []
    for protocol_dir in sorted(by_protocol):
        written.extend(_export_runs(protocol_dir, by_protocol[protocol_dir]))
    return written


def _export_runs(root: str, run_dirs: List[str]) -> List[str]:
    runs = [_load_run(d) for d in run_dirs]
    curves = {r.directory: read_curve(r.directory)[0] for r in runs}
    groups = _group(runs)

    out_dir = make_dir(os.path.join(root, PLOTS_DIR))
    written = []
    path = os.path.join(out_dir, CURVES_FILE)
    write_table(path, CURVES_HEADER, _curves_rows(groups, curves))
    written.append(path)

    sparse_by_seed = {r.seed: r for r in runs if r.method == METHOD_SPARSE}
    for (method, alpha, subject), members in groups.items():
        if method == METHOD_SPARSE:
            continue
        if not any(r.seed in sparse_by_seed for r in members):
            logger.warning("No sparse runs share seeds with alpha=%g subject=%s; no paired table",
                           alpha, subject)
            continue
        path = os.path.join(out_dir, f"paired_a{format_alpha(alpha)}_{slugify(subject)}.csv")
        write_table(path, PAIRED_HEADER, _paired_rows(members, sparse_by_seed, curves))
        written.append(path)

    logger.info("Exported %d table(s) from %d run(s) to %s", len(written), len(runs), out_dir)
    return written

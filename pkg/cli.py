"""
Command-line front end.

  train            one run from a config file
  sweep            feedback-weight sweep with its sparse baseline
  loso             per-subject study at a fixed feedback weight
  eval             deterministic evaluation of a finished run's checkpoint
  export-plots     plot-ready tables from a run or protocol directory
  validate-config  resolve and validate a config without running anything

Exit codes: 0 success, 1 run error, 2 configuration error,
3 failed sweep cells or incomplete runs.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

import torch

from errors import (ConfigError, ErrPilotError, IncompleteRunsError, StreamFormatError,
                    SweepFailedError)
from metrics import RunSummary
from runner.config import ResolvedConfig, dump_config, load_config, resolved_to_dict
from runner.export import export_plots
from runner.sweep import alpha_sweep, loso_eval
from runner.train import (SUMMARY_HEADER, cell_directory, evaluate_checkpoint, method_of,
                          train_single)
from utils.paths import CHECKPOINT_FILE, CONFIG_FILE, SPARSE_SUBJECT
from utils.tables import render_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_PARTIAL_FAILURE = 3

WORKERS_ENV = "ERRPILOT_WORKERS"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

CONFIG_COMMANDS = ("train", "sweep", "loso", "validate-config")


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    config_path: Optional[str] = None
    overrides: tuple = ()
    workers: int = 1
    force: bool = False
    seed: int = 0
    directory: Optional[str] = None
    episodes: Optional[int] = None
    print_config: bool = False
    resolved: Optional[ResolvedConfig] = None


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected an integer, got '{raw}'")
    if workers <= 0:
        raise ConfigError(WORKERS_ENV, f"must be positive (got {workers})")
    return workers


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="errpilot",
                                     description="Error-signal shaped reinforcement learning bench")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name, help_text in (("train", "train a single run"),
                            ("sweep", "feedback-weight sweep plus sparse baseline"),
                            ("loso", "per-subject study at a fixed feedback weight"),
                            ("validate-config", "resolve and validate a config")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path override, applied after the file (repeatable)")
        p.add_argument("--print-config", action="store_true", help="print the resolved config")
        if name != "validate-config":
            p.add_argument("--workers", type=int, default=None,
                           help=f"parallel runs (default: ${WORKERS_ENV} or 1)")
            p.add_argument("--force", action="store_true", help="re-run completed runs")
        if name == "train":
            p.add_argument("--seed", type=int, default=0, help="seed index of the run")

    p = sub.add_parser("eval", help="evaluate a finished run's checkpoint")
    p.add_argument("--dir", dest="directory", required=True, help="run directory")
    p.add_argument("--episodes", type=int, default=None, help="episodes (default: eval.episodes)")

    p = sub.add_parser("export-plots", help="write plot-ready tables")
    p.add_argument("--dir", dest="directory", required=True, help="run or protocol directory")
    return parser


def resolve_invocation(args: argparse.Namespace) -> CliInvocation:
    resolved = None
    if args.subcommand in CONFIG_COMMANDS:
        resolved = load_config(args.config, args.overrides)
    elif args.subcommand == "eval":
        resolved = load_config(os.path.join(args.directory, CONFIG_FILE))

    workers = getattr(args, "workers", None)
    if workers is None:
        workers = default_workers()
    elif workers <= 0:
        raise ConfigError("--workers", f"must be positive (got {workers})")

    return CliInvocation(
        subcommand=args.subcommand,
        config_path=getattr(args, "config", None),
        overrides=tuple(getattr(args, "overrides", ())),
        workers=workers,
        force=getattr(args, "force", False),
        seed=getattr(args, "seed", 0),
        directory=getattr(args, "directory", None),
        episodes=getattr(args, "episodes", None),
        print_config=getattr(args, "print_config", False),
        resolved=resolved,
    )


def parse_and_validate(argv: Optional[Sequence[str]] = None) -> CliInvocation:
    return resolve_invocation(build_parser().parse_args(argv))


def _print_summary(title: str, summary: RunSummary):
    print(f"{title}")
    print(f"  success rate     {summary.success_rate}")
    print(f"  path efficiency  {summary.path_efficiency}")
    print(f"  mean collision   {summary.mean_collision}")
    print(f"  collision rate   {summary.collision_rate:.2f}")
    print(f"  episodes         {summary.episodes}")


def _run(inv: CliInvocation) -> int:
    if inv.print_config and inv.resolved is not None:
        sys.stdout.write(dump_config(resolved_to_dict(inv.resolved)))

    if inv.subcommand == "validate-config":
        if not inv.print_config:
            print(f"{inv.config_path}: OK")
        return EXIT_OK

    if inv.subcommand == "export-plots":
        for path in export_plots(inv.directory):
            print(path)
        return EXIT_OK

    cfg = inv.resolved.experiment
    if inv.subcommand == "train":
        summary = train_single(cfg, inv.seed, inv.force)
        _print_summary(f"{method_of(cfg)} alpha={cfg.alpha:g} subject={cfg.subject_label or SPARSE_SUBJECT} "
                       f"-> {cell_directory(cfg, inv.seed)}", summary)
        return EXIT_OK

    if inv.subcommand == "eval":
        seed = inv.resolved.sweep.seeds[0]
        episodes = inv.episodes if inv.episodes is not None else cfg.eval.episodes
        summary = evaluate_checkpoint(cfg, seed, os.path.join(inv.directory, CHECKPOINT_FILE), episodes)
        _print_summary(f"{method_of(cfg)} alpha={cfg.alpha:g} checkpoint of {inv.directory}", summary)
        return EXIT_OK

    protocol = alpha_sweep if inv.subcommand == "sweep" else loso_eval
    rows = protocol(inv.resolved, inv.workers, inv.force)
    sys.stdout.write(render_table(SUMMARY_HEADER, rows))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format=LOG_FORMAT, stream=sys.stderr)
    torch.set_num_threads(1)
    try:
        inv = resolve_invocation(args)
        return _run(inv)
    except (ConfigError, StreamFormatError) as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG_ERROR
    except (SweepFailedError, IncompleteRunsError) as e:
        logger.error("%s", e)
        return EXIT_PARTIAL_FAILURE
    except ErrPilotError as e:
        logger.error("%s", e)
        return EXIT_RUN_ERROR

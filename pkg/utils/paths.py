"""
Path utilities for ErrPilot.
Run directories follow <out>/<protocol>/<alpha>/<subject>/<seed>/ so that
every cell of a sweep owns its own folder.
"""

import os
import re
import sys

CURVE_FILE = "curve.csv"
EPISODES_FILE = "episodes.jsonl"
SUMMARY_FILE = "summary.csv"
CHECKPOINT_FILE = "checkpoint.pt"
CONFIG_FILE = "config.yaml"
REGISTRY_FILE = "registry.db"

# Subject directory used by feedback-free (sparse) runs.
SPARSE_SUBJECT = "none"


def normalize_path(rel_path: str) -> str:
    """Convert Windows backslashes to forward slashes for cross-platform."""
    return rel_path.replace("\\", "/") if rel_path else rel_path


def get_app_root() -> str:
    """Get the directory containing the sources (or the frozen executable)."""
    if getattr(sys, 'frozen', False):
        return os.path.dirname(os.path.abspath(sys.executable))
    return os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def get_config_dir() -> str:
    return os.path.join(get_app_root(), "configs")


def get_default_bank_path() -> str:
    return os.path.join(get_config_dir(), "subjects.yaml")


def resolve_relative(path: str, base_dir: str) -> str:
    """Resolve `path` against `base_dir` unless it is already absolute."""
    if not path:
        return path
    path = os.path.expanduser(normalize_path(path))
    if os.path.isabs(path):
        return os.path.normpath(path)
    return os.path.normpath(os.path.join(base_dir, path))


def slugify(name: str) -> str:
    slug = name.strip()
    slug = re.sub(r'[^\w\s.-]', '', slug)
    slug = re.sub(r'[\s_]+', '-', slug)
    slug = slug.strip('-')
    return slug or "unnamed"


def format_alpha(alpha: float) -> str:
    """Directory name for a feedback weight, e.g. 0.3 -> '0.3', 1.0 -> '1'."""
    return f"{alpha:g}"


def run_dir(out: str, protocol: str, alpha: float, subject: str, seed: int) -> str:
    return os.path.join(out, slugify(protocol), format_alpha(alpha),
                        slugify(subject or SPARSE_SUBJECT), str(seed))


def protocol_dir(out: str, protocol: str) -> str:
    return os.path.join(out, slugify(protocol))


def make_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def is_run_complete(path: str) -> bool:
    return os.path.isfile(os.path.join(path, SUMMARY_FILE))

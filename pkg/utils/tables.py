"""
Delimiter-separated table helpers.
Every number written by ErrPilot goes through format_number so that output
files are byte-stable across runs.
"""

import csv
import io
import math
import os
import tempfile
from typing import Iterable, List, Optional, Sequence

SIGNIFICANT_DIGITS = 9


def format_number(value) -> str:
    """Fixed formatting at 9 significant digits; None and NaN become empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return ""
    if value == 0.0:
        # Drops the sign of -0.0 so equal tables stay byte-identical.
        return "0"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def parse_number(text: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    return float(text)


def atomic_write_text(path: str, text: str):
    """Write to a temporary file next to `path` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise


def render_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell)
                         for cell in row])
    return buf.getvalue()


def write_table(path: str, header: Sequence[str], rows: Iterable[Sequence]):
    atomic_write_text(path, render_table(header, rows))


def read_table(path: str) -> List[dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))

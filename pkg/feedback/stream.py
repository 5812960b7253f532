"""
Probability stream files: replay decoder outputs recorded elsewhere.

Format: plain text, header line "step,p", one row per timestep, steps
0, 1, 2, ... without gaps, p a decimal in [0, 1].
"""

import math
from typing import Sequence

import numpy as np

from errors import StreamExhaustedError, StreamFormatError
from utils.tables import atomic_write_text

HEADER = "step,p"


class ProbabilityStream:
    """Sequence of probabilities indexed by training timestep."""

    def __init__(self, probabilities: Sequence[float], source: str = "<memory>"):
        self.probabilities = np.asarray(probabilities, dtype=np.float64)
        self.source = source
        self.position = 0

    def __len__(self) -> int:
        return int(self.probabilities.size)

    def next(self) -> float:
        if self.position >= len(self):
            raise StreamExhaustedError(self.position, len(self))
        p = float(self.probabilities[self.position])
        self.position += 1
        return p


def load_probability_stream(path: str) -> ProbabilityStream:
    """Parse a stream file; row numbers in errors are 1-based file lines."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise StreamFormatError(path, 0, f"cannot read file: {e}")

    if not lines or lines[0].strip().replace(" ", "") != HEADER:
        raise StreamFormatError(path, 1, f"expected header '{HEADER}'")

    probabilities = []
    for row, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = [part.strip() for part in line.split(",")]
        if len(parts) != 2:
            raise StreamFormatError(path, row, f"expected 2 columns, got {len(parts)}")
        try:
            step = int(parts[0])
        except ValueError:
            raise StreamFormatError(path, row, f"step '{parts[0]}' is not an integer")
        try:
            p = float(parts[1])
        except ValueError:
            raise StreamFormatError(path, row, f"p '{parts[1]}' is not a number")
        expected = len(probabilities)
        if step != expected:
            raise StreamFormatError(path, row, f"step {step} out of order (expected {expected})")
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise StreamFormatError(path, row, f"p = {p} outside [0, 1]")
        probabilities.append(p)

    return ProbabilityStream(probabilities, source=path)


def write_probability_stream(path: str, probabilities: Sequence[float]):
    rows = [HEADER]
    for step, p in enumerate(probabilities):
        rows.append(f"{step},{float(p)!r}")
    atomic_write_text(path, "\n".join(rows) + "\n")

"""
Exception hierarchy for ErrPilot.
The CLI maps these onto stable exit codes.
"""


class ErrPilotError(Exception):
    """Base class for every error raised on purpose by this project."""


class ConfigError(ErrPilotError):
    """A configuration value is missing, mistyped or out of range."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        self.message = message
        super().__init__(f"{field_path}: {message}" if field_path else message)


class SceneConfigError(ConfigError):
    """The scene geometry cannot host a valid episode."""


class InputError(ErrPilotError, ValueError):
    """A numeric argument is malformed (non-finite, wrong shape, out of range)."""


class UsageError(ErrPilotError, RuntimeError):
    """An operation was called in a state where it is not allowed."""


class StreamFormatError(ErrPilotError):
    """A probability stream file does not follow the `step,p` format."""

    def __init__(self, path: str, row: int, message: str):
        self.path = path
        self.row = row
        super().__init__(f"{path}: row {row}: {message}")


class StreamExhaustedError(ErrPilotError):
    """A replayed probability stream ran out before training finished."""

    def __init__(self, step: int, length: int):
        self.step = step
        self.length = length
        super().__init__(
            f"probability stream exhausted at step {step} (stream has {length} rows)")


class CheckpointError(ErrPilotError):
    """A checkpoint file cannot be restored into the current agent."""


class IncompleteRunsError(ErrPilotError):
    """Export was asked for a directory that still has unfinished cells."""

    def __init__(self, missing: list):
        self.missing = list(missing)
        listing = "\n  ".join(self.missing)
        super().__init__(f"{len(self.missing)} incomplete run(s):\n  {listing}")


class SweepFailedError(ErrPilotError):
    """At least one cell of a sweep failed; the rest were completed."""

    def __init__(self, failures: list):
        self.failures = list(failures)
        super().__init__(f"{len(self.failures)} sweep cell(s) failed")


class RunIOError(ErrPilotError):
    """Reading or writing a run artifact failed."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")

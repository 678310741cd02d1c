"""
Error hierarchy for PACE. Every class carries the exit code the CLI returns for it.
"""


class PaceError(Exception):
    """Base class for all PACE errors."""

    exit_code: int = 4


class UsageError(PaceError):
    """Invalid command-line usage."""

    exit_code = 1


class ConfigurationError(PaceError):
    """Invalid configuration, sample rate or dataset definition."""

    exit_code = 2


class DependencyError(PaceError):
    """A prerequisite checkpoint or artifact is missing."""

    exit_code = 3

    def __init__(self, message: str, stage: int | None = None):
        super().__init__(message)
        self.stage = stage


class PaceRuntimeError(PaceError):
    """Failure while running an otherwise valid command."""

    exit_code = 4


class ContractError(PaceRuntimeError):
    """A precondition of an operation was violated."""


class DimensionError(ContractError):
    """Shape mismatch; `axis` names the offending axis."""

    def __init__(self, message: str, axis: str | int | None = None):
        super().__init__(message if axis is None else f"{message} (axis {axis})")
        self.axis = axis


class CodeIndexError(ContractError, IndexError):
    """An embedding id or codec code is out of range; `position` names where."""

    def __init__(self, message: str, position: tuple | int | None = None):
        super().__init__(message if position is None else f"{message} at position {position}")
        self.position = position


class StateError(PaceRuntimeError):
    """The model is not in a state that allows the operation (e.g. untrained)."""


class AudioFormatError(PaceRuntimeError):
    """Unreadable or unsupported audio file."""


class UndefinedDistanceError(PaceRuntimeError):
    """A contour has no voiced frames."""


class CheckpointFormatError(PaceRuntimeError):
    """A PACK file is truncated, has the wrong magic or an unknown version."""

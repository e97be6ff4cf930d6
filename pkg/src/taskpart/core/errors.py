"""Error types raised across taskpart.

Every error carries an ``error_type`` tag and a message, so the CLI can print
``<error_type>: <message>`` and pick an exit code without inspecting classes.
"""

from pathlib import Path


class TaskPartError(Exception):
    """Runtime failure (CLI exit code 1)."""

    exit_code = 1

    def __init__(self, error_type: str, message: str):
        self.error_type = error_type
        self.message = message
        super().__init__(f"{error_type}: {message}")

    def __reduce__(self):
        # Subclass constructors do not take ``args``.
        return _restore, (type(self), self.args, self.__dict__)


def _restore(cls: type[TaskPartError], args: tuple, state: dict) -> TaskPartError:
    error = cls.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error


class ValidationFailure(TaskPartError):
    """Invalid input or usage (CLI exit code 2)."""

    exit_code = 2


# -----------------------------------------------------------------------------
# Point cloud parsing
# -----------------------------------------------------------------------------


class MalformedRecord(ValidationFailure):
    def __init__(self, line: int, detail: str, source: str = ""):
        self.line = line
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__("MalformedRecord", f"{where}: {detail}")


class EmptyCloud(ValidationFailure):
    def __init__(self, cloud_id: str):
        self.cloud_id = cloud_id
        super().__init__("EmptyCloud", f"no points parsed for '{cloud_id}'")


class UnsupportedPlyElement(ValidationFailure):
    def __init__(self, detail: str):
        super().__init__("UnsupportedPlyElement", detail)


class UnsupportedPlyFormat(ValidationFailure):
    def __init__(self, detail: str):
        super().__init__("UnsupportedPlyFormat", detail)


class InsufficientPoints(ValidationFailure):
    def __init__(self, cloud_id: str, requested: int, available: int):
        self.cloud_id = cloud_id
        super().__init__(
            "InsufficientPoints",
            f"cloud '{cloud_id}' has {available} points, {requested} requested",
        )


# -----------------------------------------------------------------------------
# Features
# -----------------------------------------------------------------------------


class DimensionMismatch(ValidationFailure):
    def __init__(self, detail: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__("DimensionMismatch", f"{prefix}{detail}")


class DuplicateId(ValidationFailure):
    def __init__(self, item_id: str):
        self.item_id = item_id
        super().__init__("DuplicateId", f"id '{item_id}' appears more than once")


class MalformedNumber(ValidationFailure):
    def __init__(self, line: int, column: int, text: str):
        self.line = line
        self.column = column
        super().__init__(
            "MalformedNumber", f"line {line}, column {column}: '{text}' is not a number"
        )


# -----------------------------------------------------------------------------
# Clustering, simulation, statistics
# -----------------------------------------------------------------------------


class InvalidK(ValidationFailure):
    def __init__(self, detail: str):
        super().__init__("InvalidK", detail)


class InstanceTooLarge(ValidationFailure):
    def __init__(self, n: int, limit: int):
        super().__init__(
            "InstanceTooLarge", f"{n} rows exceed the exact-oracle limit of {limit}"
        )


class InvalidConfig(ValidationFailure):
    def __init__(self, detail: str):
        super().__init__("InvalidConfig", detail)


class InvalidBudget(ValidationFailure):
    def __init__(self, detail: str):
        super().__init__("InvalidBudget", detail)


class EmptyInput(ValidationFailure):
    def __init__(self, detail: str):
        super().__init__("EmptyInput", detail)


class InvalidN(ValidationFailure):
    def __init__(self, n: int, size: int):
        super().__init__("InvalidN", f"n={n} is outside 0..{size}")


# -----------------------------------------------------------------------------
# Run directories
# -----------------------------------------------------------------------------


class ManifestError(ValidationFailure):
    def __init__(self, path: Path, detail: str):
        self.path = path
        super().__init__("ManifestError", f"{path}: {detail}")


class ArtifactIOError(TaskPartError):
    def __init__(self, path: Path, detail: str):
        self.path = path
        super().__init__("IoError", f"{path}: {detail}")


class PipelineError(TaskPartError):
    """A pipeline phase failed; ``phase`` names it."""

    def __init__(self, phase: str, detail: str):
        self.phase = phase
        super().__init__("PipelineError", f"phase '{phase}' failed: {detail}")

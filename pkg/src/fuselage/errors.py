"""Exception types raised across the engine."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .diagnostics import Diagnostic


class FuselageError(Exception):
    """Base class for engine errors."""


class MalformedInputError(FuselageError):
    """Input bytes are not syntactically a story document."""


class UnsupportedVersionError(FuselageError):
    """Document declares a format version this build does not read."""


class InvalidGraphError(FuselageError):
    """A structurally parsed graph violates the story-graph invariants."""

    def __init__(self, diagnostics: list["Diagnostic"]):
        self.diagnostics = diagnostics
        lines = "; ".join(d.render() for d in diagnostics[:5])
        more = f" (+{len(diagnostics) - 5} more)" if len(diagnostics) > 5 else ""
        super().__init__(f"invalid story graph: {lines}{more}")


class CompileFailedError(FuselageError):
    """Compilation produced error diagnostics."""

    def __init__(self, diagnostics: list["Diagnostic"]):
        self.diagnostics = diagnostics
        super().__init__(f"compilation failed with {sum(d.is_error for d in diagnostics)} error(s)")


class SessionFinishedError(FuselageError):
    """An event was applied to a session that already acknowledged its ending."""


class MalformedSaveError(FuselageError):
    """Save document is not structurally a valid save state."""


class HashMismatchError(FuselageError):
    """Save document belongs to a different story than the one provided."""


class StateBudgetExceededError(FuselageError):
    """Exact analysis exceeded its configured state budget."""

    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"state-space exploration exceeded budget of {budget} states")


class UnreachableError(FuselageError):
    """No replayable trace exists to the requested node."""

    def __init__(self, target: str):
        self.target = target
        super().__init__(f"no trace reaches node {target!r}")

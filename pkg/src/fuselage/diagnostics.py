"""Diagnostics shared by the parser, checker, compiler, and graph validator."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    """Half-open character range in a source file, 1-based line/column."""

    file: str
    line: int
    column: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: SourceSpan | None = None
    node: str | None = field(default=None)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render(self) -> str:
        where = str(self.span) if self.span else (self.node or "<graph>")
        return f"{where}: {self.severity.value}[{self.code}]: {self.message}"


def error(code: str, message: str, span: SourceSpan | None = None, node: str | None = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, span, node)


def warning(code: str, message: str, span: SourceSpan | None = None, node: str | None = None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, span, node)


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)

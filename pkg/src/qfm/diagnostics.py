"""Source locations and diagnostics shared by the parser, builder and validator.

Diagnostic codes form a closed set, documented in ``docs/formats.md``:

==========  =========================================================
E001        syntax error (unexpected or missing token)
E002        unknown keyword or construct
E003        unterminated string literal
E004        malformed number literal
E005        unexpected character
E010        duplicate name within a namespace
E011        unresolved reference (message carries a best-match hint)
E012        value outside an attribute's declared domain
E013        metric implemented by an abstract feature
E014        constraint subject and object are the same feature
E015        group with fewer than two members
E016        feature listed both as implementer and involvement
E017        quality property influenced by itself
E018        duplicate attribute specification in a requirement
E021        threshold metric does not belong to the required property
E022        exclude constraint targets an attribute without a value
E023        two quality properties share kind and variant tag
W010        abstract feature with no concrete feature beneath it
W012        exclude constraint between ancestor-related features
W013        bare-attribute require constraint in a model without a
            requirement (it constrains nothing until one is given)
==========  =========================================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    """A half-open region of source text, 1-based line and column."""

    file: str
    line: int
    column: int
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"span position must be 1-based, got {self.line}:{self.column}")


#: Span attached to entities that were built programmatically rather than parsed.
SYNTHETIC_SPAN = SourceSpan(file="<builtin>", line=1, column=1, length=0)


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: SourceSpan

    def render(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.column}: {self.severity.value}[{self.code}]: {self.message}"


def error(code: str, message: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, span)


def warning(code: str, message: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, span)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)


def format_diagnostics(diags: list[Diagnostic]) -> str:
    """Render diagnostics one per line, sorted by (file, line, column, code)."""
    ordered = sorted(diags, key=lambda d: (d.span.file, d.span.line, d.span.column, d.code))
    return "".join(d.render() + "\n" for d in ordered)

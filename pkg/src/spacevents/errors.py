"""Exception types shared across the package."""

from __future__ import annotations


class SpaceventsError(Exception):
    """Base class for every error this package raises on purpose."""


class InputError(SpaceventsError):
    """Bad input data or configuration supplied by the caller."""


class ParseError(InputError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StructureError(InputError):
    """A sentence's dependency edges do not form a tree."""


class SchemaError(InputError):
    """A structured record does not match the shape it is required to have."""


class RuleError(InputError):
    """Problem in a rule file: syntax, duplicate names, or tier violations."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None and col is not None:
            message = f"line {line}, column {col}: {message}"
        elif line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col

"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class BactaError(Exception):
    """Base class for all engine errors."""


class LexError(BactaError):
    def __init__(self, message, span):
        super().__init__(f"{span.line}:{span.column}: {message}")
        self.message = message
        self.span = span


class ParseError(BactaError):
    def __init__(self, message, span, expected=()):
        detail = f"{span.line}:{span.column}: {message}"
        if expected:
            detail += " (expected " + ", ".join(sorted(expected)) + ")"
        super().__init__(detail)
        self.message = message
        self.span = span
        self.expected = frozenset(expected)


class CompileError(BactaError):
    """Model cannot be unrolled into a valid acyclic graph."""


class EvalError(BactaError):
    """Domain violation during numeric evaluation (log of negative, etc.)."""


class ParamError(BactaError):
    """Distribution parameters violate their invariants."""


class InitError(BactaError):
    """Chain initialization failed to find a finite starting point."""


class DiagnosticError(BactaError):
    """Convergence diagnostics requested on unusable chains."""


class QueryError(BactaError):
    """Posterior query references an unknown parameter."""


class SchemaError(BactaError):
    """Dataset columns do not line up."""


class SpecError(BactaError):
    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
        self.message = message


class SimulationError(BactaError):
    """Too many replicates failed in an operating-characteristics run."""

    def __init__(self, message, failed_records=()):
        super().__init__(message)
        self.failed_records = list(failed_records)


class DivergenceWarning(UserWarning):
    """Raised (as a warning) when any R-hat exceeds 1.1."""

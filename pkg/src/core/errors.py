"""
Exception hierarchy for the toolkit.

Every error raised for bad input, bad configuration or a degenerate problem
derives from RecidivismError, which is a ValueError so that callers written
against plain ValueError keep working. The CLI maps this family to exit code 2.
"""

from typing import Optional


class RecidivismError(ValueError):
    """Base class for all user/config/data errors."""


class SchemaError(RecidivismError):
    """A feature or column is missing, unknown, or two schemas share nothing."""

    def __init__(self, message: str, feature: Optional[str] = None):
        super().__init__(message)
        self.feature = feature


class FeatureTypeError(RecidivismError, TypeError):
    """A value has the wrong type for how it is used (e.g. text under a numeric comparator)."""


class RecordRangeError(RecidivismError):
    """A record value violates a domain range (age outside [18, 70], negative count)."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class TableParseError(RecidivismError):
    """A scoring-table or basis file is malformed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TableValidationError(RecidivismError):
    """A scoring table violates its declared coefficient or offset range."""


class ConfigError(RecidivismError):
    """A configuration value or file is invalid."""


class DegenerateLabelError(RecidivismError):
    """Training labels contain a single class."""


class UndefinedAUCError(RecidivismError):
    """AUC requested for labels without both classes."""


class CapInfeasibleError(RecidivismError):
    """No penalty in the grid keeps the additive model within its feature cap."""


class NoModelError(RecidivismError):
    """The integer search ran out of budget before finding any incumbent."""


class AuditUndefinedError(RecidivismError):
    """A fairness audit has no usable cells at all."""

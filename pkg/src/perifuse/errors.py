"""Exception hierarchy used across the toolkit.

Every error raised by library code derives from ToolkitError so the CLI can
report failures uniformly on stderr with a nonzero exit status.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ToolkitError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionError(ToolkitError):
    """Vector or grid dimensions do not match what was declared."""


class DomainError(ToolkitError):
    """A value lies outside the mathematically valid domain."""


class DuplicateKeyError(ToolkitError):
    """Two records share a sample key that must be unique."""


class CompletenessError(ToolkitError):
    """A subject is missing samples the protocol requires."""


class UsageError(ToolkitError):
    """An operation was invoked with inconsistent or unsupported arguments."""


class AlignmentError(UsageError):
    """Score sets passed together are not aligned to the same pair list."""


class TemplateLookupError(ToolkitError):
    """A protocol references a sample key with no matching template."""


class SingularityError(ToolkitError):
    """An unregularized linear system is singular or rank deficient."""


class ScorerError(ToolkitError):
    """The black-box scorer failed or returned unusable values."""


class DegenerateInputError(ToolkitError):
    """A statistic is undefined on the given input (e.g. zero variance)."""

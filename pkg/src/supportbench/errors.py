"""Exception hierarchy shared across the package.

ConfigError signals a bad setting caught at startup; DataError and its
subclasses signal problems with input files or their contents. The CLI maps
ConfigError to exit code 1 and DataError to exit code 2.
"""


class SupportBenchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SupportBenchError):
    """Invalid configuration detected before any data is processed."""


class DataError(SupportBenchError):
    """Input data violates the expected schema or invariants."""


class RowParseError(DataError):
    """A single CSV row could not be parsed.

    Carries the 1-based line number of the offending row and, when the
    problem is tied to one column, that column's name.
    """

    def __init__(self, line: int, message: str, column: str | None = None):
        self.line = line
        self.column = column
        prefix = f"row at line {line}"
        if column:
            prefix += f", column {column!r}"
        super().__init__(f"{prefix}: {message}")


class EmptySplitError(DataError):
    """A temporal split produced an empty train or test side."""


class CoverageError(DataError):
    """Response records do not cover the test split exactly once each."""


class EmbeddingFormatError(DataError):
    """An embedding file is malformed.

    ``line`` is the 1-based line (text format) or record number (binary
    format) where parsing failed.
    """

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"embedding entry {line}: {message}")

"""Exception hierarchy shared by the numerical modules and the CLI."""

from __future__ import annotations


class QcltError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(QcltError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(QcltError):
    """A run configuration is malformed, incomplete, or inconsistent."""

    def __init__(self, message: str, key: str | None = None, lines: tuple[int, ...] = ()):
        self.key = key
        self.lines = lines
        where = ""
        if key is not None:
            where = f"{key}: "
        if lines:
            where += "(line " + ", ".join(str(n) for n in lines) + ") "
        super().__init__(where + message)

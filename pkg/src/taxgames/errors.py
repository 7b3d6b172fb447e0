"""Exception types shared across the package."""

from __future__ import annotations


class TaxgamesError(Exception):
    """Base class for all package-specific errors."""


class ResourceLimitError(TaxgamesError):
    """An enumeration or construction exceeded its configured cap."""


class SearchLimitError(ResourceLimitError):
    """A bounded search was exhausted without a definite answer."""


class AlphabetMismatchError(TaxgamesError):
    """A machine or tax was applied to an arena with a different alphabet."""


class DocumentError(TaxgamesError):
    """A document failed to parse or validate.

    Carries a list of human-readable diagnostics so callers can report
    every problem at once instead of the first one found.
    """

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics: list[str] = list(diagnostics or [])

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        return base + "\n" + "\n".join("  - " + d for d in self.diagnostics)

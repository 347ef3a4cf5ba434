"""Exception taxonomy shared across the package.

Plain I/O failures (missing snapshot file, unwritable path) surface as the
builtin ``OSError`` family; everything domain-specific derives from
:class:`FlpAdvisorError` so callers can catch one root.
"""

from __future__ import annotations


class FlpAdvisorError(Exception):
    """Root of all domain errors raised by this package."""


class SchemaViolation(FlpAdvisorError):
    """Node or edge insert that breaks the graph schema (bad label, bad
    endpoint pair, missing or mistyped required property)."""


class EmptyStore(FlpAdvisorError):
    """Statistics requested on a store with no problem nodes."""


class FormatError(FlpAdvisorError):
    """Snapshot file is corrupt, truncated, or not a snapshot at all."""


class HeaderMismatch(FlpAdvisorError):
    """A required corpus CSV column is absent."""

    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__(f"missing required columns: {', '.join(self.missing)}")


class UnknownEntity(FlpAdvisorError):
    """A typed entity name does not exist in the catalog."""

    def __init__(self, kind: str, name: str, suggestions: list[str]):
        self.kind = kind
        self.name = name
        self.suggestions = list(suggestions)
        hint = f" (did you mean: {', '.join(self.suggestions)}?)" if self.suggestions else ""
        super().__init__(f"unknown {kind} {name!r}{hint}")


class ValidationError(FlpAdvisorError):
    """Record-level validation failure with one message per bad field."""

    def __init__(self, field_errors: dict[str, str]):
        self.field_errors = dict(field_errors)
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(self.field_errors.items())))


class EmptyIndex(FlpAdvisorError):
    """Similarity search over an index containing no vectors."""


class ZeroVector(FlpAdvisorError):
    """Text embedded to a zero vector; cosine similarity is undefined."""


class ProviderError(FlpAdvisorError):
    """Transport or payload failure from an embedding/LLM provider."""


class MalformedResponse(FlpAdvisorError):
    """Provider response does not follow the required output contract."""


class EmptyEvidence(FlpAdvisorError):
    """All three retrieval channels came back empty; nothing to ground on."""

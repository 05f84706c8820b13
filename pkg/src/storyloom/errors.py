"""Error taxonomy shared across the package.

Every failure surfaced to a caller is a :class:`StoryloomError` subclass so
service layers can map them to wire responses without string matching.
"""

from __future__ import annotations


class StoryloomError(Exception):
    """Base class for all package errors."""


# --------------------------------------------------------------------------
# Gherkin text handling


class GherkinError(StoryloomError):
    pass


class NoKeywordFound(GherkinError):
    """Input text contains no keyword-anchored line at all."""


class DuplicateFeatureHeader(GherkinError):
    """A feature header appeared where only scenario blocks are allowed."""


class MalformedGherkin(GherkinError):
    """Model output stayed unusable as Gherkin after format repair."""


# --------------------------------------------------------------------------
# Memory store


class MemoryStoreError(StoryloomError):
    pass


class StoreUnreadable(MemoryStoreError):
    pass


class StoreWriteFailed(MemoryStoreError):
    pass


# --------------------------------------------------------------------------
# Model gateway


class GatewayError(StoryloomError):
    #: retried with backoff when True
    transient = False


class ProviderTimeout(GatewayError):
    transient = True


class RateLimited(GatewayError):
    transient = True


class ProviderUnavailable(GatewayError):
    """Upstream 5xx or connection failure."""

    transient = True


class AuthFailure(GatewayError):
    pass


class EmptyCompletion(GatewayError):
    pass


class FixtureMissing(GatewayError):
    """Replay provider has no recorded completion for a prompt key."""

    def __init__(self, fixture_key: str):
        super().__init__(f"no replay fixture for prompt key {fixture_key}")
        self.fixture_key = fixture_key


class FormatViolation(GatewayError):
    """Internal: a completion failed structured-output validation."""


# --------------------------------------------------------------------------
# Chain operations


class ExtractionFailed(StoryloomError):
    """Completion did not contain the three required code sections."""


class IndexOutOfRange(StoryloomError):
    """A scenario decision referenced an index outside the current list."""


# --------------------------------------------------------------------------
# Sessions and service


class EmptyRequirement(StoryloomError):
    pass


class IllegalState(StoryloomError):
    pass


class UnknownSession(StoryloomError):
    pass


class UnknownVersion(StoryloomError):
    pass


class PreviewFileNotFound(StoryloomError):
    pass


class PathTraversalRejected(StoryloomError):
    pass


class WorkspaceUnwritable(StoryloomError):
    pass


# --------------------------------------------------------------------------
# Metrics


class DomainError(StoryloomError):
    """Metric inputs violate the stated preconditions."""

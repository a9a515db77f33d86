"""Exception types shared across the package."""

from __future__ import annotations


class Sum2ActError(Exception):
    """Base class for all package errors."""


class ConfigurationError(Sum2ActError):
    """Invalid configuration: bad budgets, empty tool lists, broken manifests."""


class PolicyFileError(ConfigurationError):
    """A scripted-policy file failed to parse or validate."""


class TraceFormatError(Sum2ActError):
    """An episode trace record is malformed or violates episode invariants."""


class ScriptError(Sum2ActError):
    """A scripted provider had no entry matching the rendered prompt and no default."""


class ProviderUnavailable(Sum2ActError):
    """The live completion endpoint stayed unreachable after all retries."""


class ProviderRejected(Sum2ActError):
    """The live completion endpoint rejected the request (HTTP 4xx, never retried)."""

    def __init__(self, status_code: int, message: str):
        super().__init__(f"HTTP {status_code}: {message}")
        self.status_code = status_code


class RequestTooLarge(Sum2ActError):
    """A completion request exceeded the configured size limit (never truncated silently)."""


class MalformedOutput(Sum2ActError):
    """Model output could not be parsed into the required structure."""


class ScenarioError(Sum2ActError):
    """A sandbox scenario file failed to parse or validate."""


class OracleLookupError(Sum2ActError):
    """An instruction id is missing from the ground-truth tool map."""


class CatalogMismatchError(Sum2ActError):
    """A ground-truth tool name is absent from the catalog."""

    def __init__(self, tool_name: str):
        super().__init__(f"tool not in catalog: {tool_name!r}")
        self.tool_name = tool_name

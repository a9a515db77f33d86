"""Chat-completion backends: a live HTTP client and a deterministic scripted
provider for tests.

A provider is anything with ``complete(request) -> str``. The scripted
provider matches ordered substring/regex entries against the fully rendered
prompt text, so prompt-construction bugs surface directly in tests.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass

import requests

from .errors import (
    PolicyFileError,
    ProviderRejected,
    ProviderUnavailable,
    RequestTooLarge,
    ScriptError,
)

ROLES = ("system", "user", "assistant")

# Hard ceiling on rendered request size; requests are never truncated
# silently, they fail loudly instead.
MAX_REQUEST_CHARS = 200_000


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown chat role: {self.role!r}")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} messages must have non-empty content")


@dataclass(frozen=True)
class CompletionRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_output_tokens: int = 1024
    stop: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("completion request requires at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    def rendered_prompt(self) -> str:
        """All message contents joined; the text scripted matchers see."""
        return "\n".join(m.content for m in self.messages)


def user_request(prompt: str, temperature: float = 0.0) -> CompletionRequest:
    return CompletionRequest(
        messages=(ChatMessage(role="user", content=prompt),),
        temperature=temperature,
    )


@dataclass(frozen=True)
class PolicyEntry:
    match: str
    response: str
    is_regex: bool = False

    def matches(self, prompt: str) -> bool:
        if self.is_regex:
            return re.search(self.match, prompt) is not None
        return self.match in prompt


@dataclass(frozen=True)
class ScriptedPolicy:
    """Ordered matcher list; the first matching entry wins."""

    entries: tuple[PolicyEntry, ...] = ()
    default: str | None = None


class ScriptedProvider:
    """Pure, deterministic stand-in for a live model."""

    def __init__(self, policy: ScriptedPolicy):
        self.policy = policy

    def complete(self, request: CompletionRequest) -> str:
        prompt = request.rendered_prompt()
        _check_size(prompt)
        for entry in self.policy.entries:
            if entry.matches(prompt):
                return entry.response
        if self.policy.default is not None:
            return self.policy.default
        raise ScriptError(
            "no policy entry matched the prompt and no default is set; "
            f"prompt started with: {prompt[:160]!r}"
        )


def load_policy(path) -> ScriptedPolicy:
    """Load a scripted policy file: {"entries": [{match, response, is_regex}], "default"?}."""
    with open(path, encoding="utf-8") as handle:
        raw = handle.read()
    try:
        data = json.loads(raw) if raw.strip() else {}
    except json.JSONDecodeError as exc:
        raise PolicyFileError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise PolicyFileError(f"{path}: policy file must hold a JSON object")

    entries = []
    for index, item in enumerate(data.get("entries", [])):
        if not isinstance(item, dict) or "match" not in item or "response" not in item:
            raise PolicyFileError(
                f"{path}: entry {index} must be an object with 'match' and 'response'"
            )
        entries.append(
            PolicyEntry(
                match=str(item["match"]),
                response=str(item["response"]),
                is_regex=bool(item.get("is_regex", False)),
            )
        )
    default = data.get("default")
    if default is not None:
        default = str(default)
    return ScriptedPolicy(entries=tuple(entries), default=default)


def _check_size(prompt: str) -> None:
    if len(prompt) > MAX_REQUEST_CHARS:
        raise RequestTooLarge(
            f"rendered request is {len(prompt)} chars, over the "
            f"{MAX_REQUEST_CHARS}-char limit"
        )


class LiveProvider:
    """Client for any chat-completions-compatible HTTP endpoint.

    Retries transport failures and 5xx responses with exponential backoff;
    4xx responses are rejected immediately and never retried. Configuration
    comes from PROVIDER_BASE_URL, PROVIDER_API_KEY and PROVIDER_MODEL unless
    passed explicitly.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        retries: int = 3,
        backoff_base: float = 1.0,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.base_url = (base_url or os.environ.get("PROVIDER_BASE_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("PROVIDER_API_KEY", "")
        self.model = model or os.environ.get("PROVIDER_MODEL", "")
        if not self.base_url:
            raise ProviderUnavailable("PROVIDER_BASE_URL is not configured")
        if not self.model:
            raise ProviderUnavailable("PROVIDER_MODEL is not configured")
        self.retries = retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, request: CompletionRequest) -> str:
        _check_size(request.rendered_prompt())
        body = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.stop:
            body["stop"] = list(request.stop)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        url = f"{self.base_url}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._session.post(
                    url, json=body, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if 200 <= response.status_code < 300:
                    return self._extract_content(response)
                if 400 <= response.status_code < 500:
                    raise ProviderRejected(response.status_code, response.text[:500])
                last_error = ProviderUnavailable(
                    f"HTTP {response.status_code}: {response.text[:200]}"
                )
            if attempt < self.retries:
                time.sleep(self.backoff_base * (2**attempt))
        raise ProviderUnavailable(
            f"endpoint unreachable after {self.retries + 1} attempts: {last_error}"
        )

    @staticmethod
    def _extract_content(response: requests.Response) -> str:
        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(
                f"malformed completion response: {response.text[:200]!r}"
            ) from exc
        if not isinstance(content, str):
            raise ProviderUnavailable("completion content is not a string")
        return content


class RecordingProvider:
    """Wrapper that logs every (prompt, response) pair; used by tests and the
    replay tooling to assert on exactly what the model was shown."""

    def __init__(self, inner):
        self._inner = inner
        self._lock = threading.Lock()
        self.calls: list[tuple[str, str]] = []

    def complete(self, request: CompletionRequest) -> str:
        response = self._inner.complete(request)
        with self._lock:
            self.calls.append((request.rendered_prompt(), response))
        return response

    def prompts(self) -> list[str]:
        with self._lock:
            return [prompt for prompt, _ in self.calls]

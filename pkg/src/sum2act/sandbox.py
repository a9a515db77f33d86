"""Deterministic simulated open-world API environment, plus a live HTTP tool
invoker.

A Scenario is an immutable value: instruction, tools, per-tool ordered
behavior lists and a pass condition over the final answer. Sessions hold the
per-episode consumption cursors, so concurrent episodes over one shared
Scenario never interfere. Tool responses model the messiness of real APIs:
failures, timeouts and verbose payloads that bury the relevant fragment in
filler.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass

import requests

from .core import Episode, Instruction, Observation, ParamSpec, ToolSpec
from .errors import ConfigurationError, ScenarioError

BEHAVIOR_KINDS = ("success", "error", "timeout", "verbose")
REPEAT_MODES = ("once", "forever")

_FILLER_CHUNK = (
    "Auxiliary diagnostic records, pagination cursors, locale metadata and "
    "unrelated catalog entries follow; none of it concerns the request. "
)


@dataclass(frozen=True)
class Behavior:
    kind: str
    payload: str = ""
    code: int | None = None
    message: str = ""
    filler_chars: int = 0
    repeat: str = "once"

    def __post_init__(self):
        if self.kind not in BEHAVIOR_KINDS:
            raise ScenarioError(f"unknown behavior kind: {self.kind!r}")
        if self.repeat not in REPEAT_MODES:
            raise ScenarioError(f"unknown repeat mode: {self.repeat!r}")
        if self.kind == "verbose" and self.filler_chars < len(self.payload):
            raise ScenarioError(
                "verbose behavior filler_chars must be >= payload length"
            )


@dataclass(frozen=True)
class PassCondition:
    """Deterministic predicate over the final answer: contains-all substrings,
    a regex, or an exact match."""

    kind: str
    values: tuple[str, ...] = ()
    pattern: str = ""

    def __post_init__(self):
        if self.kind not in ("contains_all", "regex", "exact"):
            raise ScenarioError(f"unknown pass condition kind: {self.kind!r}")

    def evaluate(self, answer: str) -> bool:
        if self.kind == "contains_all":
            return all(value in answer for value in self.values)
        if self.kind == "regex":
            return re.search(self.pattern, answer) is not None
        return answer == self.pattern


@dataclass(frozen=True)
class Scenario:
    id: str
    instruction: Instruction
    tools: tuple[ToolSpec, ...]
    behaviors: dict
    pass_condition: PassCondition

    def __post_init__(self):
        tool_names = {tool.name for tool in self.tools}
        for name, behavior_list in self.behaviors.items():
            if name not in tool_names:
                raise ScenarioError(f"behavior declared for unknown tool: {name!r}")
            if not behavior_list:
                raise ScenarioError(f"behavior list for {name!r} must be non-empty")


def _parse_behavior(data: dict) -> Behavior:
    return Behavior(
        kind=data.get("kind", ""),
        payload=data.get("payload", ""),
        code=data.get("code"),
        message=data.get("message", ""),
        filler_chars=int(data.get("filler_chars", 0)),
        repeat=data.get("repeat", "once"),
    )


def _parse_pass_condition(data: dict) -> PassCondition:
    if "contains_all" in data:
        return PassCondition(
            kind="contains_all", values=tuple(str(v) for v in data["contains_all"])
        )
    if "regex" in data:
        return PassCondition(kind="regex", pattern=str(data["regex"]))
    if "exact" in data:
        return PassCondition(kind="exact", pattern=str(data["exact"]))
    raise ScenarioError(
        "pass_condition must define one of: contains_all, regex, exact"
    )


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as handle:
        raw = handle.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        instruction_data = data["instruction"]
        instruction = Instruction(
            id=instruction_data["id"],
            text=instruction_data["text"],
            subset_label=instruction_data.get("subset_label"),
        )
        tools = tuple(
            ToolSpec(
                name=t["name"],
                description=t.get("description", ""),
                params=tuple(
                    ParamSpec(
                        name=p["name"],
                        type_tag=p.get("type", "string"),
                        required=bool(p.get("required", False)),
                        description=p.get("description", ""),
                    )
                    for p in t.get("params", [])
                ),
                category=t.get("category"),
            )
            for t in data["tools"]
        )
        behaviors = {
            name: tuple(_parse_behavior(b) for b in behavior_list)
            for name, behavior_list in data.get("behaviors", {}).items()
        }
        return Scenario(
            id=data["id"],
            instruction=instruction,
            tools=tools,
            behaviors=behaviors,
            pass_condition=_parse_pass_condition(data["pass_condition"]),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ConfigurationError) as exc:
        raise ScenarioError(f"{path}: malformed scenario: {exc}") from exc


def embed_in_filler(payload: str, total_chars: int) -> str:
    """Embed the relevant payload near the middle of deterministic filler so
    the observation is exactly ``total_chars`` long."""
    if total_chars < len(payload):
        raise ScenarioError("filler length must be >= payload length")
    pad = total_chars - len(payload)
    prefix_len = pad // 2
    suffix_len = pad - prefix_len
    filler = _FILLER_CHUNK * (total_chars // len(_FILLER_CHUNK) + 2)
    return filler[:prefix_len] + payload + filler[:suffix_len]


class ScenarioSession:
    """Per-episode executor over one scenario; deterministic given the call
    order. Once-behaviors advance the cursor, forever-behaviors persist."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._tools = {tool.name: tool for tool in scenario.tools}
        self._cursors = {name: 0 for name in scenario.behaviors}
        self._lock = threading.Lock()

    def invoke(self, tool_name: str, args: dict) -> Observation:
        tool = self._tools.get(tool_name)
        if tool is None:
            return Observation(
                status="ToolError",
                payload="",
                tool_name=tool_name,
                args_echo=dict(args),
                error=f"unknown tool: {tool_name}",
            )
        for param in tool.required_params():
            if param.name not in args:
                # Validation failures do not consume a behavior.
                return Observation(
                    status="ToolError",
                    payload="",
                    tool_name=tool_name,
                    args_echo=dict(args),
                    error=f"missing required parameter: {param.name}",
                )
        with self._lock:
            queue = self.scenario.behaviors.get(tool_name, ())
            cursor = self._cursors.get(tool_name, 0)
            if cursor >= len(queue):
                return Observation(
                    status="ToolError",
                    payload="",
                    tool_name=tool_name,
                    args_echo=dict(args),
                    error=f"behavior queue exhausted for tool: {tool_name}",
                )
            behavior = queue[cursor]
            if behavior.repeat == "once":
                self._cursors[tool_name] = cursor + 1
        return self._observe(behavior, tool_name, dict(args))

    @staticmethod
    def _observe(behavior: Behavior, tool_name: str, args: dict) -> Observation:
        if behavior.kind == "success":
            return Observation(
                status="Success", payload=behavior.payload,
                tool_name=tool_name, args_echo=args,
            )
        if behavior.kind == "verbose":
            return Observation(
                status="Success",
                payload=embed_in_filler(behavior.payload, behavior.filler_chars),
                tool_name=tool_name, args_echo=args,
            )
        if behavior.kind == "timeout":
            return Observation(
                status="Timeout", payload="",
                tool_name=tool_name, args_echo=args,
                error=behavior.message or "simulated timeout",
            )
        descriptor = behavior.message or "tool error"
        if behavior.code is not None:
            descriptor = f"HTTP {behavior.code}: {descriptor}"
        return Observation(
            status="ToolError", payload="",
            tool_name=tool_name, args_echo=args, error=descriptor,
        )


def check_pass(scenario: Scenario, episode: Episode) -> bool:
    """True iff the episode Finished and its answer satisfies the scenario's
    pass condition."""
    if episode.terminal is None:
        raise ConfigurationError("check_pass requires a terminal episode")
    if episode.terminal.status != "Finished":
        return False
    return scenario.pass_condition.evaluate(episode.terminal.answer or "")


# ---------------------------------------------------------------------------
# Live HTTP tools
# ---------------------------------------------------------------------------

LIVE_TIMEOUT_SECONDS = 15.0


def load_endpoint_spec(path) -> dict:
    """Endpoint spec file: map of tool name to {url, method, auth_env?, timeout?}.
    The URL may carry {param} placeholders filled from the call args; leftover
    args go to the query string (GET) or the JSON body (POST)."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: endpoint spec must be a JSON object")
    for name, entry in data.items():
        if not isinstance(entry, dict) or "url" not in entry:
            raise ConfigurationError(f"{path}: endpoint {name!r} must define a url")
    return data


def invoke_live(
    endpoint_spec: dict,
    tool_name: str,
    args: dict,
    timeout: float = LIVE_TIMEOUT_SECONDS,
    session: requests.Session | None = None,
) -> Observation:
    """Execute one HTTP tool call, mapping every failure mode onto an
    Observation status; nothing raises into the engine. No retries here: the
    agent loop itself is the retry mechanism."""
    import os

    entry = endpoint_spec.get(tool_name)
    if entry is None:
        return Observation(
            status="ToolError", payload="", tool_name=tool_name,
            args_echo=dict(args), error=f"unknown tool: {tool_name}",
        )
    url = entry["url"]
    remaining = dict(args)
    for key in list(remaining):
        placeholder = "{" + key + "}"
        if placeholder in url:
            url = url.replace(placeholder, str(remaining.pop(key)))
    method = entry.get("method", "GET").upper()
    headers = {}
    auth_env = entry.get("auth_env")
    if auth_env and os.environ.get(auth_env):
        headers["Authorization"] = os.environ[auth_env]

    http = session or requests
    started = time.perf_counter()
    try:
        if method == "GET":
            response = http.request(
                "GET", url, params=remaining, headers=headers,
                timeout=entry.get("timeout", timeout),
            )
        else:
            response = http.request(
                method, url, json=remaining, headers=headers,
                timeout=entry.get("timeout", timeout),
            )
    except requests.Timeout as exc:
        return Observation(
            status="Timeout", payload="", tool_name=tool_name,
            args_echo=dict(args), latency=time.perf_counter() - started,
            error=f"timeout: {exc}",
        )
    except requests.RequestException as exc:
        return Observation(
            status="ToolError", payload="", tool_name=tool_name,
            args_echo=dict(args), latency=time.perf_counter() - started,
            error=f"transport error: {exc}",
        )
    latency = time.perf_counter() - started
    try:
        body = response.text
    except Exception as exc:
        return Observation(
            status="MalformedResponse", payload="", tool_name=tool_name,
            args_echo=dict(args), latency=latency,
            error=f"undecodable response body: {exc}",
        )
    if 200 <= response.status_code < 300:
        return Observation(
            status="Success", payload=body, tool_name=tool_name,
            args_echo=dict(args), latency=latency,
        )
    return Observation(
        status="ToolError", payload="", tool_name=tool_name,
        args_echo=dict(args), latency=latency,
        error=f"HTTP {response.status_code}: {body[:200]}",
    )

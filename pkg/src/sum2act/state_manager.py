"""Summarization stage: judge each observation, register results or deduce
failure reasons, and keep the rendered state within a length cap.

The state renders to a fixed two-section layout ("Current results:" then
"Failure history:"); that rendering is the contract the router prompt
consumes. Success/failure verdicts are delegated to the provider, with a
mechanical fallback keyed on the observation status so an update can never
abort an episode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .core import (
    FailureEntry,
    Instruction,
    Observation,
    ResultEntry,
    State,
    args_digest,
)
from .errors import (
    ConfigurationError,
    MalformedOutput,
    RequestTooLarge,
    ScriptError,
)
from .parsing import extract_first_json_object, fill_template, truncate_with_marker
from .provider import user_request
from .templates_loader import load_template

logger = logging.getLogger(__name__)

OBSERVATION_WINDOW_CHARS = 4096
STATE_CAP_CHARS = 4096
FAILURE_REASON_CAP_CHARS = 120

# Mechanical-fallback and compression sizing.
_FALLBACK_SUMMARY_CHARS = 200
_MERGED_ENTRY_CHARS = 240

EMPTY_STATE_TEXT = "Current results: (none). Failure history: (none)."


def render_state(state: State) -> str:
    """Canonical two-section rendering consumed by the router prompt."""
    if not state.current_results and not state.failure_history:
        return EMPTY_STATE_TEXT
    lines = []
    if state.current_results:
        lines.append("Current results:")
        for index, entry in enumerate(state.current_results, 1):
            lines.append(f"  {index}. [step {entry.step_index}] {entry.text}")
    else:
        lines.append("Current results: (none).")
    if state.failure_history:
        lines.append("Failure history:")
        for index, entry in enumerate(state.failure_history, 1):
            lines.append(
                f"  {index}. [step {entry.step_index}] "
                f"{entry.tool_name}({entry.args_digest}): {entry.reason}"
            )
    else:
        lines.append("Failure history: (none).")
    return "\n".join(lines)


def rendered_state_length(state: State) -> int:
    return len(render_state(state))


def render_observation(observation: Observation, window: int = OBSERVATION_WINDOW_CHARS) -> str:
    lines = [
        f"tool: {observation.tool_name}",
        f"status: {observation.status}",
    ]
    if observation.error:
        lines.append(f"error: {observation.error}")
    lines.append(f"payload: {truncate_with_marker(observation.payload, window)}")
    return "\n".join(lines)


def build_state_prompt(
    instruction: Instruction,
    state: State,
    observation: Observation,
    window: int = OBSERVATION_WINDOW_CHARS,
    templates_dir: str | None = None,
) -> str:
    """Deterministic prompt: instruction, full current state, and the
    observation payload clipped to the observation window."""
    return fill_template(
        load_template("state", templates_dir),
        instruction=instruction.text,
        state=render_state(state),
        observation=render_observation(observation, window),
    )


@dataclass(frozen=True)
class StateUpdate:
    verdict: str
    result_entry: str | None = None
    failure_entry: tuple[str, str, str] | None = None  # (tool, digest, reason)

    def __post_init__(self):
        if self.verdict not in ("Success", "Failure"):
            raise ConfigurationError(f"unknown verdict: {self.verdict!r}")
        if self.verdict == "Success" and self.result_entry is None:
            raise ConfigurationError("Success verdict requires a result entry")
        if self.verdict == "Failure" and self.failure_entry is None:
            raise ConfigurationError("Failure verdict requires a failure entry")


def _parse_verdict(output: str) -> tuple[str, str]:
    obj = extract_first_json_object(output, required_key="verdict")
    if obj is None:
        raise MalformedOutput("no verdict object found in state-manager output")
    verdict = obj.get("verdict")
    if verdict not in ("Success", "Failure"):
        raise MalformedOutput(f"verdict must be Success or Failure, got {verdict!r}")
    key = "summary" if verdict == "Success" else "reason"
    text = obj.get(key)
    if not isinstance(text, str) or not text:
        raise MalformedOutput(f"{verdict} verdict requires a non-empty {key!r}")
    return verdict, text


def _mechanical_update(observation: Observation) -> StateUpdate:
    """Status-keyed fallback used when the provider output stays unparseable."""
    if observation.status == "Success":
        return StateUpdate(
            verdict="Success",
            result_entry=observation.payload[:_FALLBACK_SUMMARY_CHARS],
        )
    reason = observation.error or f"tool returned status {observation.status}"
    return StateUpdate(
        verdict="Failure",
        failure_entry=(
            observation.tool_name,
            args_digest(observation.args_echo),
            reason,
        ),
    )


def judge_observation(
    provider,
    instruction: Instruction,
    state: State,
    observation: Observation,
    window: int = OBSERVATION_WINDOW_CHARS,
    retries: int = 2,
    templates_dir: str | None = None,
) -> StateUpdate:
    """Ask the provider for a verdict; fall back mechanically after retries."""
    base_prompt = build_state_prompt(instruction, state, observation, window, templates_dir)
    prompt = base_prompt
    last_error: Exception | None = None
    for _ in range(retries + 1):
        try:
            output = provider.complete(user_request(prompt))
            verdict, text = _parse_verdict(output)
        except (MalformedOutput, ScriptError, RequestTooLarge) as exc:
            last_error = exc
            prompt = base_prompt + (
                f"\n\nYour previous reply could not be used: {exc}. Reply with "
                'exactly one JSON object holding "verdict" and a "summary" or '
                '"reason".'
            )
            continue
        if verdict == "Success":
            return StateUpdate(verdict="Success", result_entry=text)
        return StateUpdate(
            verdict="Failure",
            failure_entry=(
                observation.tool_name,
                args_digest(observation.args_echo),
                text,
            ),
        )
    logger.warning("state verdict unparseable, using mechanical fallback: %s", last_error)
    return _mechanical_update(observation)


def apply_update(state: State, update_value: StateUpdate, step_index: int) -> State:
    """Pure application of a verdict to a state; duplicates merge."""
    if update_value.verdict == "Success":
        entry = ResultEntry(text=update_value.result_entry, step_index=step_index)
        return State(
            current_results=state.current_results + (entry,),
            failure_history=state.failure_history,
        )
    tool_name, digest, reason = update_value.failure_entry
    if state.has_failure(tool_name, digest):
        return state
    entry = FailureEntry(
        tool_name=tool_name, args_digest=digest, reason=reason, step_index=step_index
    )
    return State(
        current_results=state.current_results,
        failure_history=state.failure_history + (entry,),
    )


def update(
    provider,
    instruction: Instruction,
    state: State,
    observation: Observation,
    step_index: int,
    window: int = OBSERVATION_WINDOW_CHARS,
    retries: int = 2,
    templates_dir: str | None = None,
) -> State:
    """Judge one observation and return a new State; the input is unchanged."""
    verdict = judge_observation(
        provider, instruction, state, observation, window, retries, templates_dir
    )
    return apply_update(state, verdict, step_index)


# ---------------------------------------------------------------------------
# Length-cap enforcement
# ---------------------------------------------------------------------------


def _merge_texts(provider, older: ResultEntry, newer: ResultEntry) -> str:
    if provider is not None:
        prompt = (
            "Merge these two progress notes into one concise note of at most "
            f"{_MERGED_ENTRY_CHARS} characters, keeping every concrete fact. "
            "Reply with the note text only.\n"
            f"1) {older.text}\n2) {newer.text}"
        )
        try:
            merged = provider.complete(user_request(prompt)).strip()
            if merged:
                return merged[:_MERGED_ENTRY_CHARS]
        except (ScriptError, MalformedOutput, RequestTooLarge):
            pass
    return f"{older.text}; {newer.text}"[:_MERGED_ENTRY_CHARS]


def enforce_cap(
    state: State,
    cap_chars: int = STATE_CAP_CHARS,
    provider=None,
    templates_dir: str | None = None,
) -> State:
    """Bound the rendered state length.

    Oldest result entries are merged first (via the provider when available,
    mechanically otherwise), then failure reasons are shortened to at most
    120 chars each (entries are never dropped), and as a last resort the
    single remaining result entry is hard-truncated. When the shortened
    failure section alone exceeds the cap, the state is returned at its
    minimum achievable length.
    """
    if cap_chars < 512:
        raise ConfigurationError(f"state cap must be >= 512 chars, got {cap_chars}")
    if rendered_state_length(state) <= cap_chars:
        return state

    results = list(state.current_results)
    failures = list(state.failure_history)

    def current_length() -> int:
        return rendered_state_length(State(tuple(results), tuple(failures)))

    while len(results) > 1 and current_length() > cap_chars:
        merged = _merge_texts(provider, results[0], results[1])
        results[:2] = [ResultEntry(text=merged, step_index=results[1].step_index)]

    if current_length() > cap_chars:
        failures = [
            f
            if len(f.reason) <= FAILURE_REASON_CAP_CHARS
            else replace(f, reason=f.reason[: FAILURE_REASON_CAP_CHARS - 3] + "...")
            for f in failures
        ]

    if current_length() > cap_chars and results:
        overflow = current_length() - cap_chars
        keep = max(0, len(results[0].text) - overflow)
        results = [ResultEntry(text=results[0].text[:keep], step_index=results[0].step_index)]

    return State(tuple(results), tuple(failures))

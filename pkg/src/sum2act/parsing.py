"""Text utilities shared by the prompt builders and output parsers."""

from __future__ import annotations

import json
import re

# Known placeholder names; any other brace content in a template is literal,
# so JSON examples inside rule blocks never need escaping.
_PLACEHOLDER = re.compile(
    r"\{(instruction|state|tools|rules|observation|transcript|attempted)\}"
)


def fill_template(template: str, **values: str) -> str:
    """Substitute ``{name}`` placeholders, leaving all other braces alone."""

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise KeyError(f"template placeholder {{{name}}} has no value")
        return values[name]

    return _PLACEHOLDER.sub(_sub, template)


def truncate_with_marker(text: str, cap: int) -> str:
    """Clip to ``cap`` chars, appending an explicit ``[truncated N chars]`` marker."""
    if len(text) <= cap:
        return text
    return text[:cap] + f"[truncated {len(text) - cap} chars]"


def extract_first_json_object(text: str, required_key: str | None = None):
    """Return the first well-formed JSON object embedded in ``text``.

    Tolerates leading/trailing prose. When ``required_key`` is given, objects
    lacking that key are skipped so prose containing incidental braces does
    not shadow the real payload. Returns None when nothing parses.
    """
    for start in _brace_positions(text):
        candidate = _balanced_slice(text, start)
        if candidate is None:
            continue
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        if required_key is not None and required_key not in obj:
            continue
        return obj
    return None


def _brace_positions(text: str):
    for index, char in enumerate(text):
        if char == "{":
            yield index


def _balanced_slice(text: str, start: int) -> str | None:
    depth = 0
    in_string = False
    escaped = False
    for index in range(start, len(text)):
        char = text[index]
        if escaped:
            escaped = False
            continue
        if char == "\\":
            escaped = True
            continue
        if char == '"':
            in_string = not in_string
            continue
        if in_string:
            continue
        if char == "{":
            depth += 1
        elif char == "}":
            depth -= 1
            if depth == 0:
                return text[start : index + 1]
    return None

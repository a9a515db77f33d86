"""Action proposal stage: build the router prompt, invoke the provider, and
parse the output into an Action; optionally prepend a one-shot task
decomposition.

The output contract is one JSON object with keys ``thought``, ``action`` and
``args``; ``action`` is either a tool name or the reserved ``Finish``, whose
args carry the final answer under ``Answer``. Tool arguments are not
schema-validated here; the executor validates them so schema mistakes land in
the failure history instead of crashing the proposal."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .core import Action, Instruction, State, ToolSpec, normalize_arg_value
from .errors import ConfigurationError, MalformedOutput, ScriptError
from .parsing import extract_first_json_object, fill_template
from .provider import user_request
from .state_manager import render_state
from .templates_loader import load_template

logger = logging.getLogger(__name__)

PARSE_RETRIES = 2

ROUTER_RULES = """\
- Propose exactly one action per reply.
- Never repeat a (tool, arguments) combination listed in the failure history;
  change the tool or the arguments instead.
- Use only the tools listed above. When the task is complete, use the special
  action "Finish" and put the final answer in args under the key "Answer".
- Reply with exactly one JSON object and nothing else:
  {"thought": "<brief reasoning>", "action": "<tool name or Finish>", "args": {"<param>": "<value>"}}"""


@dataclass(frozen=True)
class RouterPrompt:
    user_instruction_block: str
    state_block: str
    rules_block: str
    tools_block: str
    text: str


@dataclass(frozen=True)
class Task:
    """A decomposed target task with optional subtasks, attached to router
    prompts as guidance."""

    target: str
    subtasks: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.target:
            raise ConfigurationError("task target must be non-empty")


def render_tools_block(tools) -> str:
    lines = []
    for tool in tools:
        lines.append(f"- {tool.name}: {tool.description}")
        for param in tool.params:
            required = "required" if param.required else "optional"
            suffix = f": {param.description}" if param.description else ""
            lines.append(f"    {param.name} ({param.type_tag}, {required}){suffix}")
    return "\n".join(lines)


def _instruction_block(instruction: Instruction, decomposition: Task | None) -> str:
    if decomposition is None:
        return instruction.text
    lines = [instruction.text, f"Target task: {decomposition.target}"]
    for index, subtask in enumerate(decomposition.subtasks, 1):
        lines.append(f"  {index}. {subtask}")
    return "\n".join(lines)


def build_router_prompt(
    instruction: Instruction,
    state: State,
    tools: list[ToolSpec] | tuple[ToolSpec, ...],
    decomposition: Task | None = None,
    templates_dir: str | None = None,
) -> RouterPrompt:
    """Deterministic rendering of the four prompt blocks; every failure
    history entry is rendered, none omitted."""
    if not tools:
        raise ConfigurationError("router prompt requires a non-empty tool list")
    instruction_block = _instruction_block(instruction, decomposition)
    state_block = render_state(state)
    tools_block = render_tools_block(tools)
    text = fill_template(
        load_template("router", templates_dir),
        instruction=instruction_block,
        state=state_block,
        tools=tools_block,
        rules=ROUTER_RULES,
    )
    return RouterPrompt(
        user_instruction_block=instruction_block,
        state_block=state_block,
        rules_block=ROUTER_RULES,
        tools_block=tools_block,
        text=text,
    )


def parse_action(model_output: str) -> Action:
    """Extract the first well-formed action object, tolerating surrounding
    prose. Raises MalformedOutput when nothing usable is found."""
    obj = extract_first_json_object(model_output, required_key="action")
    if obj is None:
        raise MalformedOutput("no action object found in model output")
    action_name = obj.get("action")
    if not isinstance(action_name, str) or not action_name:
        raise MalformedOutput("'action' must be a non-empty string")
    args = obj.get("args", {})
    if args is None:
        args = {}
    if not isinstance(args, dict):
        raise MalformedOutput("'args' must be a map")
    args = {str(key): normalize_arg_value(value) for key, value in args.items()}
    thought = obj.get("thought")
    if thought is not None:
        thought = str(thought)

    if action_name == "Finish":
        if "Answer" not in args:
            raise MalformedOutput("Finish action is missing the 'Answer' arg")
        answer = str(args["Answer"])
        if not answer:
            raise MalformedOutput("Finish answer must be non-empty")
        args["Answer"] = answer
        return Action(kind="Finish", args=args, thought=thought)
    return Action(kind="ToolCall", tool_name=action_name, args=args, thought=thought)


def _corrective_suffix(error: Exception) -> str:
    return (
        f"\n\nYour previous reply could not be parsed: {error}. Reply with "
        'exactly one JSON object with the keys "thought", "action" and "args".'
    )


def propose_from_prompt(provider, prompt_text: str, retries: int = PARSE_RETRIES) -> Action:
    """Run one proposal round-trip with corrective re-asks on parse failures.

    The returned action records how many re-asks were needed."""
    last_error: MalformedOutput | None = None
    for attempt in range(retries + 1):
        prompt = prompt_text if attempt == 0 else prompt_text + _corrective_suffix(last_error)
        output = provider.complete(user_request(prompt))
        try:
            action = parse_action(output)
        except MalformedOutput as exc:
            last_error = exc
            continue
        return replace(action, retry_count=attempt)
    raise MalformedOutput(
        f"model output stayed unparseable after {retries} retries: {last_error}"
    )


def propose(
    provider,
    instruction: Instruction,
    state: State,
    tools,
    decomposition: Task | None = None,
    retries: int = PARSE_RETRIES,
    templates_dir: str | None = None,
) -> Action:
    prompt = build_router_prompt(instruction, state, tools, decomposition, templates_dir)
    return propose_from_prompt(provider, prompt.text, retries=retries)


def decompose(
    provider,
    instruction: Instruction,
    tools,
    retries: int = PARSE_RETRIES,
    templates_dir: str | None = None,
) -> Task | None:
    """One-shot task decomposition, run before the loop. Unparseable output
    is logged and the episode proceeds without guidance."""
    if not tools:
        raise ConfigurationError("decomposition requires a non-empty tool list")
    base_prompt = fill_template(
        load_template("decompose", templates_dir),
        instruction=instruction.text,
        tools=render_tools_block(tools),
    )
    prompt = base_prompt
    last_error: Exception | None = None
    for _ in range(retries + 1):
        try:
            output = provider.complete(user_request(prompt))
        except ScriptError as exc:
            last_error = exc
            break
        obj = extract_first_json_object(output, required_key="target")
        if obj is not None:
            target = obj.get("target")
            subtasks = obj.get("subtasks", [])
            if (
                isinstance(target, str)
                and target
                and isinstance(subtasks, list)
                and all(isinstance(s, str) for s in subtasks)
            ):
                return Task(target=target, subtasks=tuple(subtasks))
        last_error = MalformedOutput(f"no task object in output: {output[:120]!r}")
        prompt = base_prompt + _corrective_suffix(last_error)
    logger.warning("task decomposition failed, continuing without it: %s", last_error)
    return None

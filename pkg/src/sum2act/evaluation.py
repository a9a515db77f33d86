"""Pass-rate and pairwise win-rate computation with tie-splitting, judge
abstractions, and table-style report aggregation.

Rounding policy: internal arithmetic stays full precision; half-up rounding
to one decimal happens at presentation (and in ``pass_rate``, which is a
reported value by contract). ``win_rate`` splits ties evenly, so the rates of
the two sides of any judgment multiset sum to exactly 100.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .core import Episode, Instruction
from .errors import ConfigurationError, MalformedOutput
from .parsing import extract_first_json_object
from .provider import user_request

logger = logging.getLogger(__name__)

OUTCOMES = ("AWins", "BWins", "Tie")

JUDGE_RETRIES = 2

_JUDGE_PROMPT = """\
You compare two solution paths for the same user instruction and pick the
better one, weighing total execution steps, the quality of the final answer,
and the diversity of tools used.

## Instruction
{instruction}

## Path A ({label_a})
{summary_a}

## Path B ({label_b})
{summary_b}

## Rules
- Reply with exactly one JSON object and nothing else:
  {{"winner": "A" | "B" | "Tie", "rationale": "<one sentence>"}}
"""


def round_half_up(value: float, ndigits: int = 1) -> float:
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class PairJudgment:
    instruction_id: str
    method_a: str
    method_b: str
    outcome: str
    rationale: str = ""

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ConfigurationError(f"unknown judgment outcome: {self.outcome!r}")
        if self.method_a == self.method_b:
            raise ConfigurationError("judgment sides must carry distinct labels")


@dataclass(frozen=True)
class SubsetReport:
    subset_label: str
    pass_rate: float
    n: int
    win_rate: float | None = None

    def __post_init__(self):
        if not 0 <= self.pass_rate <= 100:
            raise ConfigurationError("pass_rate must be within [0, 100]")
        if self.win_rate is not None and not 0 <= self.win_rate <= 100:
            raise ConfigurationError("win_rate must be within [0, 100]")
        if self.n < 1:
            raise ConfigurationError("subset count must be >= 1")


def pass_rate(episodes: list[tuple[Episode, bool]]) -> float:
    """Percentage of passing episodes, reported to one decimal."""
    if not episodes:
        raise ConfigurationError("pass rate requires at least one episode")
    passes = sum(1 for _, passed in episodes if passed)
    return round_half_up(100.0 * passes / len(episodes), 1)


def win_rate(judgments: list[PairJudgment], for_method: str) -> float:
    """Tie-split win rate: 100 * (wins + ties/2) / total, full precision."""
    if not judgments:
        raise ConfigurationError("win rate requires at least one judgment")
    wins = 0
    ties = 0
    for judgment in judgments:
        if for_method == judgment.method_a:
            wins += judgment.outcome == "AWins"
            ties += judgment.outcome == "Tie"
        elif for_method == judgment.method_b:
            wins += judgment.outcome == "BWins"
            ties += judgment.outcome == "Tie"
        else:
            raise ConfigurationError(
                f"judgment over ({judgment.method_a}, {judgment.method_b}) "
                f"does not involve {for_method!r}"
            )
    return 50.0 * (2 * wins + ties) / len(judgments)


def side_labels(episode_a: Episode, episode_b: Episode) -> tuple[str, str]:
    """Distinct labels for the two sides, qualified when the method labels
    coincide (self-comparison is legal and must land on all ties)."""
    label_a = episode_a.method_label or "a"
    label_b = episode_b.method_label or "b"
    if label_a == label_b:
        return f"{label_a}:a", f"{label_b}:b"
    return label_a, label_b


class RuleJudge:
    """Deterministic judge: a passing path beats a failing one; between two
    passing paths the shorter one wins; everything else ties."""

    def __init__(self, passed):
        self._passed = passed

    def judge(self, instruction: Instruction, episode_a: Episode, episode_b: Episode) -> PairJudgment:
        label_a, label_b = side_labels(episode_a, episode_b)
        pass_a = self._passed(episode_a)
        pass_b = self._passed(episode_b)
        if pass_a and pass_b:
            if len(episode_a.steps) < len(episode_b.steps):
                outcome, why = "AWins", "both pass; A used fewer steps"
            elif len(episode_b.steps) < len(episode_a.steps):
                outcome, why = "BWins", "both pass; B used fewer steps"
            else:
                outcome, why = "Tie", "both pass with equal steps"
        elif pass_a:
            outcome, why = "AWins", "only A passed"
        elif pass_b:
            outcome, why = "BWins", "only B passed"
        else:
            outcome, why = "Tie", "neither passed"
        return PairJudgment(
            instruction_id=instruction.id,
            method_a=label_a,
            method_b=label_b,
            outcome=outcome,
            rationale=why,
        )


def _episode_summary(episode: Episode) -> str:
    tools_used = sorted(
        {s.action.tool_name for s in episode.steps if s.action.kind == "ToolCall"}
    )
    terminal = episode.terminal.status if episode.terminal else "(running)"
    answer = episode.terminal.answer if episode.terminal else None
    return (
        f"terminal: {terminal}\n"
        f"final answer: {answer if answer is not None else '(none)'}\n"
        f"steps used: {len(episode.steps)}\n"
        f"distinct tools used: {', '.join(tools_used) if tools_used else '(none)'}"
    )


class LlmJudge:
    """Provider-backed judge; unparseable verdicts degrade to a logged tie."""

    def __init__(self, provider, retries: int = JUDGE_RETRIES):
        self._provider = provider
        self._retries = retries

    def judge(self, instruction: Instruction, episode_a: Episode, episode_b: Episode) -> PairJudgment:
        label_a, label_b = side_labels(episode_a, episode_b)
        base_prompt = _JUDGE_PROMPT.format(
            instruction=instruction.text,
            label_a=label_a,
            summary_a=_episode_summary(episode_a),
            label_b=label_b,
            summary_b=_episode_summary(episode_b),
        )
        prompt = base_prompt
        last_error = None
        for _ in range(self._retries + 1):
            output = self._provider.complete(user_request(prompt))
            obj = extract_first_json_object(output, required_key="winner")
            winner = obj.get("winner") if obj else None
            if winner in ("A", "B", "Tie"):
                outcome = {"A": "AWins", "B": "BWins", "Tie": "Tie"}[winner]
                rationale = str(obj.get("rationale", ""))
                return PairJudgment(
                    instruction_id=instruction.id,
                    method_a=label_a,
                    method_b=label_b,
                    outcome=outcome,
                    rationale=rationale,
                )
            last_error = MalformedOutput(f"no winner in judge output: {output[:120]!r}")
            prompt = base_prompt + (
                f"\n\nYour previous reply could not be parsed: {last_error}. "
                'Reply with exactly one JSON object holding "winner".'
            )
        logger.warning("judge output unparseable, recording a tie: %s", last_error)
        return PairJudgment(
            instruction_id=instruction.id,
            method_a=label_a,
            method_b=label_b,
            outcome="Tie",
            rationale="judge output unparseable; recorded as tie",
        )


def judge_pair(judge, instruction: Instruction, episode_a: Episode, episode_b: Episode) -> PairJudgment:
    if episode_a.instruction.id != instruction.id or episode_b.instruction.id != instruction.id:
        raise ConfigurationError("both episodes must belong to the judged instruction")
    return judge.judge(instruction, episode_a, episode_b)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def aggregate(reports: list[SubsetReport]) -> tuple[str, dict]:
    """Per-subset columns plus an unweighted-mean Average column to one
    decimal; returns the monospace table and its machine-readable mirror."""
    if not reports:
        raise ConfigurationError("aggregate requires at least one subset report")
    seen = set()
    for report in reports:
        if report.subset_label in seen:
            raise ConfigurationError(f"duplicate subset label: {report.subset_label!r}")
        seen.add(report.subset_label)

    with_win = [r for r in reports if r.win_rate is not None]
    if with_win and len(with_win) != len(reports):
        raise ConfigurationError("win_rate must be present for all subsets or none")

    average_pass = round_half_up(sum(r.pass_rate for r in reports) / len(reports), 1)
    average_win = None
    if with_win:
        average_win = round_half_up(sum(r.win_rate for r in reports) / len(reports), 1)

    labels = [r.subset_label for r in reports] + ["Average"]
    rows = [["Pass rate"] + [f"{round_half_up(r.pass_rate, 1):.1f}" for r in reports] + [f"{average_pass:.1f}"]]
    if with_win:
        rows.append(
            ["Win rate"] + [f"{round_half_up(r.win_rate, 1):.1f}" for r in reports] + [f"{average_win:.1f}"]
        )
    rows.append(["n"] + [str(r.n) for r in reports] + [str(sum(r.n for r in reports))])
    table = format_table(["Subset"] + labels, rows)

    machine = {
        "subsets": [
            {
                "label": r.subset_label,
                "pass_rate": r.pass_rate,
                "win_rate": r.win_rate,
                "n": r.n,
            }
            for r in reports
        ],
        "average": {"pass_rate": average_pass, "win_rate": average_win},
    }
    return table, machine


def format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for index, cell in enumerate(row):
            widths[index] = max(widths[index], len(cell))

    def fmt(cells: list[str]) -> str:
        parts = [cells[0].ljust(widths[0])]
        parts += [cell.rjust(width) for cell, width in zip(cells[1:], widths[1:])]
        return "  ".join(parts).rstrip()

    return "\n".join([fmt(headers)] + [fmt(row) for row in rows])

"""Command-line entry points: run one instruction, run a benchmark suite,
compare two trace sets, replay traces.

Exit codes: 0 = episode Finished (or command succeeded), 1 = episode
non-success, 2 = configuration/parse failure. Flag values override config-file
keys, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .core import Instruction, State, deserialize_episode, serialize_episode
from .engine import (
    DFSDT_STEP_BUDGET,
    EngineConfig,
    METHOD_LABELS,
    SUM2ACT_STEP_BUDGET,
    run_episode,
)
from .errors import ConfigurationError, Sum2ActError
from .evaluation import (
    LlmJudge,
    RuleJudge,
    SubsetReport,
    aggregate,
    format_table,
    judge_pair,
    pass_rate,
    round_half_up,
    win_rate,
)
from .provider import LiveProvider, ScriptedProvider, load_policy
from .retriever import load_catalog, rank
from .sandbox import ScenarioSession, check_pass, invoke_live, load_endpoint_spec, load_scenario
from .state_manager import render_state

EXIT_OK = 0
EXIT_EPISODE_FAILURE = 1
EXIT_CONFIG = 2

_LIVE_ENV_VARS = ("PROVIDER_BASE_URL", "PROVIDER_MODEL")


@dataclass
class RunManifest:
    """Resolved execution settings for one command invocation."""

    provider_mode: str
    policy_path: str | None
    out_dir: Path
    method: str = "sum2act"
    overrides: dict | None = None

    def validate(self) -> None:
        if self.provider_mode not in ("scripted", "live"):
            raise ConfigurationError(f"unknown provider mode: {self.provider_mode!r}")
        if self.provider_mode == "scripted":
            if not self.policy_path:
                raise ConfigurationError("scripted provider requires --policy")
            if not Path(self.policy_path).exists():
                raise ConfigurationError(f"policy file not found: {self.policy_path}")
        else:
            missing = [name for name in _LIVE_ENV_VARS if not os.environ.get(name)]
            if missing:
                raise ConfigurationError(
                    f"live provider requires env vars: {', '.join(missing)}"
                )

    def make_provider(self, policy_path: str | None = None):
        if self.provider_mode == "scripted":
            return ScriptedProvider(load_policy(policy_path or self.policy_path))
        return LiveProvider()


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: config file must hold a JSON object")
    return data


def _resolve(cli_value, config: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    if key in config:
        return config[key]
    return default


def _engine_config(method: str, args, config: dict) -> EngineConfig:
    default_budget = DFSDT_STEP_BUDGET if method == "dfsdt" else SUM2ACT_STEP_BUDGET
    return EngineConfig(
        step_budget=int(_resolve(args.budget, config, "budget", default_budget)),
        state_cap_chars=int(_resolve(args.state_cap, config, "state_cap", 4096)),
        observation_window_chars=int(
            _resolve(args.observation_window, config, "observation_window", 4096)
        ),
        use_decomposition=bool(_resolve(args.decompose, config, "decompose", False)),
        react_memory_window_chars=int(
            _resolve(args.react_window, config, "react_window", 4096)
        ),
        dfsdt_max_children=int(_resolve(args.max_children, config, "max_children", 3)),
        templates_dir=_resolve(args.templates_dir, config, "templates_dir", None),
    )


def _manifest(args, config: dict, method: str = "sum2act") -> RunManifest:
    manifest = RunManifest(
        provider_mode=_resolve(args.provider, config, "provider", "scripted"),
        policy_path=_resolve(args.policy, config, "policy", None),
        out_dir=Path(_resolve(args.out, config, "out", "runs")),
        method=method,
    )
    manifest.validate()
    return manifest


def _write_episode(path: Path, episode) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_episode(episode) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    config = _load_config_file(args.config)
    method = _resolve(args.method, config, "method", "sum2act")
    manifest = _manifest(args, config, method)

    scenario = None
    if args.scenario:
        scenario = load_scenario(args.scenario)
        instruction = scenario.instruction
        tools = list(scenario.tools)
        executor = ScenarioSession(scenario).invoke
    elif args.instruction and args.tools:
        catalog = load_catalog(args.tools)
        instruction = Instruction(id=args.instruction_id or "cli", text=args.instruction)
        if args.top_k:
            tools = [ranked.tool for ranked in rank(instruction.text, catalog, args.top_k)]
        else:
            tools = catalog
        if not args.endpoint_spec:
            raise ConfigurationError("running against live tools requires --endpoint-spec")
        endpoints = load_endpoint_spec(args.endpoint_spec)

        def executor(tool_name, call_args):
            return invoke_live(endpoints, tool_name, call_args)

    else:
        raise ConfigurationError("provide --scenario, or --instruction with --tools")

    provider = manifest.make_provider()
    engine_config = _engine_config(method, args, config)
    episode = run_episode(method, provider, instruction, tools, engine_config, executor)

    trace_path = manifest.out_dir / f"{method}__{instruction.id}.jsonl"
    _write_episode(trace_path, episode)

    if episode.terminal.status == "Finished":
        print(f"answer: {episode.terminal.answer}")
    else:
        print(f"terminal: {episode.terminal.status}")
    if scenario is not None:
        print(f"pass: {check_pass(scenario, episode)}")
    print(f"trace: {trace_path}")
    return EXIT_OK if episode.terminal.status == "Finished" else EXIT_EPISODE_FAILURE


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _discover_scenarios(scenario_dir: str) -> list[Path]:
    root = Path(scenario_dir)
    if not root.is_dir():
        raise ConfigurationError(f"scenario directory not found: {scenario_dir}")
    paths = sorted(root.glob("**/*.scenario.json"))
    if not paths:
        raise ConfigurationError(f"no *.scenario.json files under {scenario_dir}")
    return paths


def _sibling_policy(scenario_path: Path) -> Path:
    return scenario_path.with_name(
        scenario_path.name.replace(".scenario.json", ".policy.json")
    )


def cmd_bench(args) -> int:
    config = _load_config_file(args.config)
    methods = [m.strip() for m in _resolve(args.methods, config, "methods", "sum2act").split(",") if m.strip()]
    for method in methods:
        if method not in METHOD_LABELS:
            raise ConfigurationError(f"unknown method {method!r}")
    manifest = RunManifest(
        provider_mode=_resolve(args.provider, config, "provider", "scripted"),
        policy_path=_resolve(args.policy, config, "policy", None),
        out_dir=Path(_resolve(args.out, config, "out", "bench-out")),
    )
    concurrency = int(_resolve(args.concurrency, config, "concurrency", 1))
    if concurrency < 1:
        raise ConfigurationError("concurrency must be >= 1")

    # Fail fast: every scenario (and its policy, in scripted mode) must load
    # before anything runs.
    scenario_paths = _discover_scenarios(args.scenario_dir)
    loaded = []
    for path in scenario_paths:
        scenario = load_scenario(path)
        policy_path = None
        if manifest.provider_mode == "scripted":
            policy_path = Path(manifest.policy_path) if manifest.policy_path else _sibling_policy(path)
            if not policy_path.exists():
                raise ConfigurationError(
                    f"no policy for scenario {scenario.id!r}: expected {policy_path}"
                )
            load_policy(policy_path)
        loaded.append((scenario, policy_path))
    if manifest.provider_mode == "live":
        manifest.validate()

    def run_pair(method: str, scenario, policy_path):
        provider = manifest.make_provider(policy_path)
        engine_config = _engine_config(method, args, config)
        episode = run_episode(
            method, provider, scenario.instruction, list(scenario.tools),
            engine_config, ScenarioSession(scenario).invoke,
        )
        trace_path = manifest.out_dir / "traces" / method / f"{scenario.id}.jsonl"
        _write_episode(trace_path, episode)
        return method, scenario, episode, check_pass(scenario, episode)

    pairs = [(method, scenario, policy) for method in methods for scenario, policy in loaded]
    if concurrency == 1:
        results = [run_pair(*pair) for pair in pairs]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            results = list(pool.map(lambda pair: run_pair(*pair), pairs))
    results.sort(key=lambda item: (item[0], item[1].id))

    report_sections = []
    machine: dict = {"methods": {}, "episodes": []}
    method_rows = []
    for method in methods:
        by_subset: dict[str, list] = {}
        for result_method, scenario, episode, passed in results:
            if result_method != method:
                continue
            subset = scenario.instruction.subset_label or "default"
            by_subset.setdefault(subset, []).append((episode, passed))
            machine["episodes"].append(
                {
                    "method": method,
                    "scenario": scenario.id,
                    "subset": subset,
                    "pass": passed,
                    "terminal": episode.terminal.status,
                    "steps": len(episode.steps),
                }
            )
        reports = [
            SubsetReport(subset_label=label, pass_rate=pass_rate(items), n=len(items))
            for label, items in sorted(by_subset.items())
        ]
        table, mirror = aggregate(reports)
        report_sections.append(f"## {method}\n{table}")
        machine["methods"][method] = mirror
        method_rows.append(
            [method]
            + [f"{round_half_up(r.pass_rate, 1):.1f}" for r in reports]
            + [f"{mirror['average']['pass_rate']:.1f}"]
        )

    subset_labels = sorted({s["subset"] for s in machine["episodes"]})
    combined = format_table(["Method"] + subset_labels + ["Average"], method_rows)

    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    (manifest.out_dir / "report.txt").write_text(
        combined + "\n\n" + "\n\n".join(report_sections) + "\n", encoding="utf-8"
    )
    (manifest.out_dir / "report.json").write_text(
        json.dumps(machine, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(combined)
    print(f"report: {manifest.out_dir / 'report.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _load_trace_set(path_text: str) -> dict:
    path = Path(path_text)
    if path.is_dir():
        files = sorted(path.glob("**/*.jsonl"))
    elif path.exists():
        files = [path]
    else:
        raise ConfigurationError(f"trace path not found: {path_text}")
    episodes: dict = {}
    for file_path in files:
        with open(file_path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                episode = deserialize_episode(line)
                if episode.instruction.id in episodes:
                    raise ConfigurationError(
                        f"duplicate instruction id in trace set: {episode.instruction.id!r}"
                    )
                episodes[episode.instruction.id] = episode
    if not episodes:
        raise ConfigurationError(f"no episodes found under {path_text}")
    return episodes


def cmd_compare(args) -> int:
    config = _load_config_file(args.config)
    side_a = _load_trace_set(args.traces_a)
    side_b = _load_trace_set(args.traces_b)

    missing_in_b = sorted(set(side_a) - set(side_b))
    missing_in_a = sorted(set(side_b) - set(side_a))
    if missing_in_a or missing_in_b:
        details = []
        if missing_in_b:
            details.append(f"missing from B: {', '.join(missing_in_b)}")
        if missing_in_a:
            details.append(f"missing from A: {', '.join(missing_in_a)}")
        raise ConfigurationError(f"trace sets cover different instructions; {'; '.join(details)}")

    judge_mode = _resolve(args.judge, config, "judge", "rule")
    if judge_mode == "rule":
        if not args.scenario_dir:
            raise ConfigurationError("the rule judge requires --scenario-dir to evaluate passes")
        scenarios = {}
        for path in _discover_scenarios(args.scenario_dir):
            scenario = load_scenario(path)
            scenarios[scenario.instruction.id] = scenario

        def passed(episode):
            if episode.instruction.id not in scenarios:
                raise ConfigurationError(
                    f"no scenario found for instruction {episode.instruction.id!r}"
                )
            return check_pass(scenarios[episode.instruction.id], episode)

        judge = RuleJudge(passed)
    elif judge_mode == "llm":
        manifest = RunManifest(
            provider_mode=_resolve(args.provider, config, "provider", "live"),
            policy_path=_resolve(args.policy, config, "policy", None),
            out_dir=Path(_resolve(args.out, config, "out", "compare-out")),
        )
        manifest.validate()
        judge = LlmJudge(manifest.make_provider())
    else:
        raise ConfigurationError(f"unknown judge mode: {judge_mode!r}")

    judgments_by_subset: dict[str, list] = {}
    all_judgments = []
    for instruction_id in sorted(side_a):
        episode_a = side_a[instruction_id]
        episode_b = side_b[instruction_id]
        judgment = judge_pair(judge, episode_a.instruction, episode_a, episode_b)
        subset = episode_a.instruction.subset_label or "default"
        judgments_by_subset.setdefault(subset, []).append(judgment)
        all_judgments.append(judgment)

    label_a = all_judgments[0].method_a
    label_b = all_judgments[0].method_b
    subset_rates = {
        subset: win_rate(judgments, label_a)
        for subset, judgments in sorted(judgments_by_subset.items())
    }
    average = round_half_up(sum(subset_rates.values()) / len(subset_rates), 1)

    headers = ["Method"] + list(subset_rates) + ["Average"]
    row = [f"{label_a} vs {label_b}"] + [
        f"{round_half_up(rate, 1):.1f}" for rate in subset_rates.values()
    ] + [f"{average:.1f}"]
    table = format_table(headers, [row])

    machine = {
        "method_a": label_a,
        "method_b": label_b,
        "subsets": {subset: rate for subset, rate in subset_rates.items()},
        "average": average,
        "judgments": [
            {
                "instruction_id": j.instruction_id,
                "outcome": j.outcome,
                "rationale": j.rationale,
            }
            for j in all_judgments
        ],
    }
    out_dir = Path(_resolve(args.out, config, "out", "compare-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "winrate.txt").write_text(table + "\n", encoding="utf-8")
    (out_dir / "winrate.json").write_text(
        json.dumps(machine, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(table)
    print(f"report: {out_dir / 'winrate.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def _state_diff(previous, current) -> list[str]:
    lines = []
    for entry in current.current_results[len(previous.current_results):]:
        lines.append(f"    + result: {entry.text}")
    for entry in current.failure_history[len(previous.failure_history):]:
        lines.append(f"    + failure: {entry.tool_name}({entry.args_digest}): {entry.reason}")
    return lines or ["    (state unchanged)"]


def cmd_replay(args) -> int:
    path = Path(args.trace)
    if not path.exists():
        raise ConfigurationError(f"trace file not found: {args.trace}")
    lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise ConfigurationError(f"trace file is empty: {args.trace}")
    for line in lines:
        episode = deserialize_episode(line)
        print(f"=== {episode.method_label} :: {episode.instruction.id} "
              f"(budget {episode.step_budget}) ===")
        print(f"instruction: {episode.instruction.text}")
        previous_state = State.empty()
        for index, step in enumerate(episode.steps, 1):
            if step.action.kind == "Finish":
                print(f"step {index}: Finish")
            else:
                print(f"step {index}: {step.action.tool_name}({json.dumps(step.action.args, sort_keys=True)})")
            if step.observation is not None:
                print(f"    observation: {step.observation.status}")
            for line_text in _state_diff(previous_state, step.state):
                print(line_text)
            previous_state = step.state
        print(f"terminal: {episode.terminal.status}"
              + (f" answer: {episode.terminal.answer}" if episode.terminal.answer else ""))
        print(f"final state:\n{render_state(episode.steps[-1].state if episode.steps else State.empty())}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--provider", choices=["scripted", "live"], default=None)
    parser.add_argument("--policy", default=None, help="scripted policy file")
    parser.add_argument("--method", choices=list(METHOD_LABELS), default=None)
    parser.add_argument("--budget", type=int, default=None)
    parser.add_argument("--state-cap", dest="state_cap", type=int, default=None)
    parser.add_argument(
        "--observation-window", dest="observation_window", type=int, default=None
    )
    parser.add_argument("--react-window", dest="react_window", type=int, default=None)
    parser.add_argument("--max-children", dest="max_children", type=int, default=None)
    parser.add_argument(
        "--decompose", action=argparse.BooleanOptionalAction, default=None,
        help="run one task-decomposition call before the loop",
    )
    parser.add_argument("--templates-dir", dest="templates_dir", default=None)
    parser.add_argument("--config", default=None, help="JSON config file; flags override it")
    parser.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sum2act",
        description="Tool-invocation agent loops with a deterministic sandbox and benchmark harness",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="run one instruction")
    run_parser.add_argument("--scenario", default=None, help="sandbox scenario file")
    run_parser.add_argument("--instruction", default=None, help="instruction text (live tools)")
    run_parser.add_argument("--instruction-id", dest="instruction_id", default=None)
    run_parser.add_argument("--tools", default=None, help="tool catalog file (live tools)")
    run_parser.add_argument("--endpoint-spec", dest="endpoint_spec", default=None)
    run_parser.add_argument("--top-k", dest="top_k", type=int, default=None,
                            help="rank the catalog and keep the top k tools")
    _add_common_flags(run_parser)
    run_parser.set_defaults(func=cmd_run)

    bench_parser = subparsers.add_parser("bench", help="run a scenario suite")
    bench_parser.add_argument("--scenario-dir", dest="scenario_dir", required=True)
    bench_parser.add_argument("--methods", default=None, help="comma-separated method labels")
    bench_parser.add_argument("--concurrency", type=int, default=None)
    _add_common_flags(bench_parser)
    bench_parser.set_defaults(func=cmd_bench)

    compare_parser = subparsers.add_parser("compare", help="pairwise win rate of two trace sets")
    compare_parser.add_argument("--traces-a", dest="traces_a", required=True)
    compare_parser.add_argument("--traces-b", dest="traces_b", required=True)
    compare_parser.add_argument("--judge", choices=["rule", "llm"], default=None)
    compare_parser.add_argument("--scenario-dir", dest="scenario_dir", default=None,
                                help="scenario files for the rule judge's pass checks")
    _add_common_flags(compare_parser)
    compare_parser.set_defaults(func=cmd_compare)

    replay_parser = subparsers.add_parser("replay", help="print a step-by-step trace rendering")
    replay_parser.add_argument("trace", help="episode trace file")
    replay_parser.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Sum2ActError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

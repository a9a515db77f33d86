from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from sum2act.cli import main
from sum2act.core import read_trace


def _copy_pair(src_dir: Path, name: str, dst: Path) -> None:
    dst.mkdir(parents=True, exist_ok=True)
    for suffix in (".scenario.json", ".policy.json"):
        shutil.copy(src_dir / f"{name}{suffix}", dst / f"{name}{suffix}")


@pytest.fixture
def core_dir(scenarios_root) -> Path:
    return scenarios_root / "core"


class TestRun:
    def test_happy_path(self, core_dir, tmp_path, capsys):
        code = main([
            "run",
            "--scenario", str(core_dir / "weather_miami.scenario.json"),
            "--policy", str(core_dir / "weather_miami.policy.json"),
            "--out", str(tmp_path),
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "answer:" in out
        assert "pass: True" in out
        trace_path = tmp_path / "sum2act__weather_miami.jsonl"
        assert trace_path.exists()
        episodes = read_trace(trace_path)
        assert len(episodes) == 1
        assert episodes[0].terminal.status == "Finished"

    def test_never_finish_exits_1(self, scenarios_root, tmp_path, capsys):
        adversarial = scenarios_root / "adversarial"
        code = main([
            "run",
            "--scenario", str(adversarial / "never_finish.scenario.json"),
            "--policy", str(adversarial / "never_finish.policy.json"),
            "--out", str(tmp_path),
        ])
        out = capsys.readouterr().out
        assert code == 1
        assert "BudgetExhausted" in out

    def test_missing_policy_exits_2(self, core_dir, tmp_path, capsys):
        code = main([
            "run",
            "--scenario", str(core_dir / "weather_miami.scenario.json"),
            "--policy", str(tmp_path / "nope.policy.json"),
            "--out", str(tmp_path),
        ])
        assert code == 2

    def test_no_input_exits_2(self, tmp_path, capsys):
        code = main(["run", "--policy", str(tmp_path), "--out", str(tmp_path)])
        assert code == 2

    def test_method_flag_selects_engine(self, core_dir, tmp_path):
        code = main([
            "run",
            "--scenario", str(core_dir / "weather_miami.scenario.json"),
            "--policy", str(core_dir / "weather_miami.policy.json"),
            "--method", "react",
            "--out", str(tmp_path),
        ])
        assert code == 0
        assert (tmp_path / "react__weather_miami.jsonl").exists()

    def test_live_tools_with_scripted_provider(self, http_stub, tmp_path):
        # Endpoint-spec execution path end to end, driven by a scripted
        # provider against a local HTTP stub.
        stub = http_stub([(200, '{"status": "fresh data STUB-OK"}')])
        tools_path = tmp_path / "catalog.json"
        tools_path.write_text(json.dumps([
            {"name": "fetch_page", "description": "Fetch the status page.", "params": []},
        ]))
        endpoints_path = tmp_path / "endpoints.json"
        endpoints_path.write_text(json.dumps({
            "fetch_page": {"url": stub.url + "/status", "method": "GET"},
        }))
        policy_path = tmp_path / "policy.json"
        policy_path.write_text(json.dumps({
            "entries": [
                {"match": "(?s)STUB-OK", "is_regex": True,
                 "response": json.dumps({"thought": "done", "action": "Finish",
                                         "args": {"Answer": "The page holds fresh data."}})},
            ],
            "default": json.dumps({"thought": "fetch", "action": "fetch_page", "args": {}}),
        }))
        code = main([
            "run",
            "--instruction", "Check the status page and summarize it.",
            "--tools", str(tools_path),
            "--endpoint-spec", str(endpoints_path),
            "--policy", str(policy_path),
            "--out", str(tmp_path / "out"),
        ])
        assert code == 0
        assert stub.calls == 1

    def test_config_file_provides_defaults(self, core_dir, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "policy": str(core_dir / "weather_miami.policy.json"),
            "out": str(tmp_path / "from-config"),
        }))
        code = main([
            "run",
            "--scenario", str(core_dir / "weather_miami.scenario.json"),
            "--config", str(config_path),
        ])
        assert code == 0
        assert (tmp_path / "from-config" / "sum2act__weather_miami.jsonl").exists()


class TestBench:
    def test_counting_contract(self, core_dir, tmp_path, capsys):
        suite = tmp_path / "suite"
        for name in ("weather_miami", "flight_bos_sfo", "quote_copper"):
            _copy_pair(core_dir, name, suite)
        out_dir = tmp_path / "out"
        code = main([
            "bench", "--scenario-dir", str(suite),
            "--methods", "sum2act,react", "--out", str(out_dir),
        ])
        assert code == 0
        traces = sorted((out_dir / "traces").glob("*/*.jsonl"))
        assert len(traces) == 6  # 3 scenarios x 2 methods
        table = capsys.readouterr().out
        assert "sum2act" in table and "react" in table
        report = json.loads((out_dir / "report.json").read_text())
        assert set(report["methods"]) == {"sum2act", "react"}
        assert report["methods"]["sum2act"]["average"]["pass_rate"] == 100.0

    def test_average_equals_recomputed_mean(self, scenarios_root, tmp_path):
        suite = tmp_path / "suite"
        _copy_pair(scenarios_root / "core", "weather_miami", suite)
        _copy_pair(scenarios_root / "differential", "vault_1", suite)
        out_dir = tmp_path / "out"
        code = main([
            "bench", "--scenario-dir", str(suite),
            "--methods", "react", "--out", str(out_dir),
        ])
        assert code == 0
        report = json.loads((out_dir / "report.json").read_text())
        subsets = report["methods"]["react"]["subsets"]
        rates = [entry["pass_rate"] for entry in subsets]
        recomputed = sum(rates) / len(rates)
        assert report["methods"]["react"]["average"]["pass_rate"] == pytest.approx(
            recomputed, abs=0.05
        )
        # react passes the plain weather scenario but not the long-horizon one
        assert sorted(rates) == [0.0, 100.0]

    def test_concurrency_produces_identical_trace_sets(self, core_dir, tmp_path):
        suite = tmp_path / "suite"
        for name in ("weather_miami", "flight_bos_sfo", "quote_copper", "track_pkt4821"):
            _copy_pair(core_dir, name, suite)
        out_serial = tmp_path / "serial"
        out_parallel = tmp_path / "parallel"
        assert main(["bench", "--scenario-dir", str(suite), "--methods", "sum2act,react",
                     "--out", str(out_serial)]) == 0
        assert main(["bench", "--scenario-dir", str(suite), "--methods", "sum2act,react",
                     "--out", str(out_parallel), "--concurrency", "4"]) == 0
        serial_files = sorted(p.relative_to(out_serial) for p in (out_serial / "traces").glob("*/*.jsonl"))
        parallel_files = sorted(p.relative_to(out_parallel) for p in (out_parallel / "traces").glob("*/*.jsonl"))
        assert serial_files == parallel_files
        for relative in serial_files:
            assert (out_serial / relative).read_bytes() == (out_parallel / relative).read_bytes()

    def test_fail_fast_on_corrupt_scenario(self, core_dir, tmp_path, capsys):
        suite = tmp_path / "suite"
        _copy_pair(core_dir, "weather_miami", suite)
        (suite / "broken.scenario.json").write_text("{nope")
        out_dir = tmp_path / "out"
        code = main(["bench", "--scenario-dir", str(suite), "--out", str(out_dir)])
        assert code == 2
        assert not (out_dir / "traces").exists()

    def test_missing_sibling_policy_fails(self, core_dir, tmp_path):
        suite = tmp_path / "suite"
        suite.mkdir()
        shutil.copy(core_dir / "weather_miami.scenario.json", suite / "weather_miami.scenario.json")
        code = main(["bench", "--scenario-dir", str(suite), "--out", str(tmp_path / "out")])
        assert code == 2


class TestCompare:
    def _bench(self, suite: Path, out: Path, methods: str) -> None:
        assert main(["bench", "--scenario-dir", str(suite), "--methods", methods,
                     "--out", str(out)]) == 0

    def test_identical_sets_tie_everywhere(self, core_dir, tmp_path, capsys):
        suite = tmp_path / "suite"
        for name in ("weather_miami", "flight_bos_sfo"):
            _copy_pair(core_dir, name, suite)
        out = tmp_path / "bench"
        self._bench(suite, out, "sum2act")
        code = main([
            "compare",
            "--traces-a", str(out / "traces" / "sum2act"),
            "--traces-b", str(out / "traces" / "sum2act"),
            "--judge", "rule", "--scenario-dir", str(suite),
            "--out", str(tmp_path / "cmp"),
        ])
        assert code == 0
        report = json.loads((tmp_path / "cmp" / "winrate.json").read_text())
        assert report["average"] == 50.0
        assert all(rate == 50.0 for rate in report["subsets"].values())
        assert all(j["outcome"] == "Tie" for j in report["judgments"])

    def test_all_pass_beats_all_fail(self, scenarios_root, tmp_path):
        suite = tmp_path / "suite"
        for k in range(1, 6):
            _copy_pair(scenarios_root / "differential", f"vault_{k}", suite)
        out = tmp_path / "bench"
        self._bench(suite, out, "sum2act,react")
        code = main([
            "compare",
            "--traces-a", str(out / "traces" / "sum2act"),
            "--traces-b", str(out / "traces" / "react"),
            "--judge", "rule", "--scenario-dir", str(suite),
            "--out", str(tmp_path / "cmp"),
        ])
        assert code == 0
        report = json.loads((tmp_path / "cmp" / "winrate.json").read_text())
        assert report["average"] == 100.0
        assert report["method_a"] == "sum2act"

    def test_mismatched_ids_error_names_them(self, core_dir, tmp_path, capsys):
        suite_a = tmp_path / "suite_a"
        suite_b = tmp_path / "suite_b"
        _copy_pair(core_dir, "weather_miami", suite_a)
        _copy_pair(core_dir, "flight_bos_sfo", suite_b)
        out_a = tmp_path / "ba"
        out_b = tmp_path / "bb"
        self._bench(suite_a, out_a, "sum2act")
        self._bench(suite_b, out_b, "sum2act")
        code = main([
            "compare",
            "--traces-a", str(out_a / "traces" / "sum2act"),
            "--traces-b", str(out_b / "traces" / "sum2act"),
            "--judge", "rule", "--scenario-dir", str(suite_a),
            "--out", str(tmp_path / "cmp"),
        ])
        err = capsys.readouterr().err
        assert code == 2
        assert "weather_miami" in err
        assert "flight_bos_sfo" in err

    def test_llm_judge_with_scripted_provider(self, core_dir, tmp_path):
        suite = tmp_path / "suite"
        _copy_pair(core_dir, "weather_miami", suite)
        out = tmp_path / "bench"
        self._bench(suite, out, "sum2act,react")
        judge_policy = tmp_path / "judge.policy.json"
        judge_policy.write_text(json.dumps({
            "entries": [],
            "default": json.dumps({"winner": "A", "rationale": "A was cleaner"}),
        }))
        code = main([
            "compare",
            "--traces-a", str(out / "traces" / "sum2act"),
            "--traces-b", str(out / "traces" / "react"),
            "--judge", "llm", "--provider", "scripted", "--policy", str(judge_policy),
            "--out", str(tmp_path / "cmp"),
        ])
        assert code == 0
        report = json.loads((tmp_path / "cmp" / "winrate.json").read_text())
        assert report["average"] == 100.0


class TestReplay:
    def _trace(self, core_dir, tmp_path) -> Path:
        assert main([
            "run",
            "--scenario", str(core_dir / "weather_miami.scenario.json"),
            "--policy", str(core_dir / "weather_miami.policy.json"),
            "--out", str(tmp_path),
        ]) == 0
        return tmp_path / "sum2act__weather_miami.jsonl"

    def test_renders_every_step(self, core_dir, tmp_path, capsys):
        trace = self._trace(core_dir, tmp_path)
        capsys.readouterr()
        assert main(["replay", str(trace)]) == 0
        out = capsys.readouterr().out
        step_lines = [line for line in out.splitlines() if line.startswith("step ")]
        assert len(step_lines) == 3
        assert "terminal: Finished" in out

    def test_stable_across_runs(self, core_dir, tmp_path, capsys):
        trace = self._trace(core_dir, tmp_path)
        capsys.readouterr()
        main(["replay", str(trace)])
        first = capsys.readouterr().out
        main(["replay", str(trace)])
        second = capsys.readouterr().out
        assert first == second

    def test_empty_trace_exits_2(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert main(["replay", str(empty)]) == 2

    def test_corrupt_trace_exits_2(self, tmp_path):
        corrupt = tmp_path / "corrupt.jsonl"
        corrupt.write_text("{broken\n")
        assert main(["replay", str(corrupt)]) == 2

from __future__ import annotations

import json

import pytest

from sum2act.errors import (
    PolicyFileError,
    ProviderRejected,
    ProviderUnavailable,
    RequestTooLarge,
    ScriptError,
)
from sum2act.provider import (
    MAX_REQUEST_CHARS,
    ChatMessage,
    CompletionRequest,
    LiveProvider,
    PolicyEntry,
    ScriptedPolicy,
    ScriptedProvider,
    load_policy,
    user_request,
)


def _chat_body(content: str) -> str:
    return json.dumps({"choices": [{"message": {"content": content}}]})


class TestScriptedProvider:
    def test_first_match_wins(self):
        policy = ScriptedPolicy(
            entries=(
                PolicyEntry(match="weather", response='{"action":"get_weather","args":{}}'),
                PolicyEntry(match="weather", response="second"),
            )
        )
        provider = ScriptedProvider(policy)
        out = provider.complete(user_request("what is the weather like"))
        assert out == '{"action":"get_weather","args":{}}'

    def test_default_when_nothing_matches(self):
        policy = ScriptedPolicy(entries=(PolicyEntry(match="nope", response="n"),), default="X")
        assert ScriptedProvider(policy).complete(user_request("hello")) == "X"

    def test_no_match_no_default_raises(self):
        provider = ScriptedProvider(ScriptedPolicy())
        with pytest.raises(ScriptError):
            provider.complete(user_request("anything"))

    def test_deterministic(self):
        policy = ScriptedPolicy(entries=(PolicyEntry(match="a", response="r"),), default="d")
        provider = ScriptedProvider(policy)
        request = user_request("aaa")
        assert provider.complete(request) == provider.complete(request)

    def test_regex_entry(self):
        policy = ScriptedPolicy(
            entries=(PolicyEntry(match=r"(?s)start.*end", response="ok", is_regex=True),)
        )
        provider = ScriptedProvider(policy)
        assert provider.complete(user_request("start\nmiddle\nend")) == "ok"

    def test_matcher_sees_all_messages(self):
        request = CompletionRequest(
            messages=(
                ChatMessage(role="system", content="sys part"),
                ChatMessage(role="user", content="user part"),
            )
        )
        policy = ScriptedPolicy(entries=(PolicyEntry(match="sys part", response="seen"),))
        assert ScriptedProvider(policy).complete(request) == "seen"

    def test_over_long_request_raises(self):
        provider = ScriptedProvider(ScriptedPolicy(default="x"))
        with pytest.raises(RequestTooLarge):
            provider.complete(user_request("y" * (MAX_REQUEST_CHARS + 1)))


class TestRequestValidation:
    def test_requires_messages(self):
        with pytest.raises(ValueError):
            CompletionRequest(messages=())

    def test_user_content_non_empty(self):
        with pytest.raises(ValueError):
            ChatMessage(role="user", content="")

    def test_unknown_role(self):
        with pytest.raises(ValueError):
            ChatMessage(role="robot", content="x")


class TestLoadPolicy:
    def test_file_order_preserved(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({
            "entries": [
                {"match": "one", "response": "1"},
                {"match": "two", "response": "2", "is_regex": True},
                {"match": "three", "response": "3"},
            ]
        }))
        policy = load_policy(path)
        assert [e.match for e in policy.entries] == ["one", "two", "three"]
        assert policy.entries[1].is_regex

    def test_empty_file_gives_empty_policy(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text("")
        policy = load_policy(path)
        assert policy.entries == ()
        assert policy.default is None
        with pytest.raises(ScriptError):
            ScriptedProvider(policy).complete(user_request("anything"))

    def test_duplicate_matchers_earlier_wins(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({
            "entries": [
                {"match": "same", "response": "first"},
                {"match": "same", "response": "second"},
            ]
        }))
        policy = load_policy(path)
        assert len(policy.entries) == 2
        assert ScriptedProvider(policy).complete(user_request("same same")) == "first"

    def test_malformed_file_reports_line(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('{\n  "entries": [,]\n}')
        with pytest.raises(PolicyFileError, match="line"):
            load_policy(path)

    def test_entry_missing_keys(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"entries": [{"match": "x"}]}))
        with pytest.raises(PolicyFileError, match="entry 0"):
            load_policy(path)


class TestLiveProvider:
    def test_success_response(self, http_stub):
        stub = http_stub([(200, _chat_body("hello back"))])
        provider = LiveProvider(base_url=stub.url, api_key="k", model="m", retries=0)
        assert provider.complete(user_request("hi")) == "hello back"
        assert stub.calls == 1

    def test_retries_5xx_then_succeeds(self, http_stub):
        stub = http_stub([(500, "boom"), (503, "boom"), (200, _chat_body("ok"))])
        provider = LiveProvider(
            base_url=stub.url, api_key="k", model="m", retries=3, backoff_base=0.01
        )
        assert provider.complete(user_request("hi")) == "ok"
        assert stub.calls == 3

    def test_4xx_rejected_without_retry(self, http_stub):
        stub = http_stub([(404, "missing")])
        provider = LiveProvider(
            base_url=stub.url, api_key="k", model="m", retries=3, backoff_base=0.01
        )
        with pytest.raises(ProviderRejected):
            provider.complete(user_request("hi"))
        assert stub.calls == 1

    def test_unreachable_after_retries(self):
        provider = LiveProvider(
            base_url="http://127.0.0.1:9", api_key="k", model="m",
            retries=1, backoff_base=0.01, timeout=0.2,
        )
        with pytest.raises(ProviderUnavailable):
            provider.complete(user_request("hi"))

    def test_exhausted_retries_on_5xx(self, http_stub):
        stub = http_stub([(500, "down")])
        provider = LiveProvider(
            base_url=stub.url, api_key="k", model="m", retries=2, backoff_base=0.01
        )
        with pytest.raises(ProviderUnavailable):
            provider.complete(user_request("hi"))
        assert stub.calls == 3

    def test_malformed_body_surfaces(self, http_stub):
        stub = http_stub([(200, '{"nope": true}')])
        provider = LiveProvider(base_url=stub.url, api_key="k", model="m", retries=0)
        with pytest.raises(ProviderUnavailable, match="malformed"):
            provider.complete(user_request("hi"))

    def test_missing_configuration(self, monkeypatch):
        monkeypatch.delenv("PROVIDER_BASE_URL", raising=False)
        monkeypatch.delenv("PROVIDER_MODEL", raising=False)
        with pytest.raises(ProviderUnavailable):
            LiveProvider()

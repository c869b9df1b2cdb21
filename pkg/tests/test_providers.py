import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from mirror.errors import ProviderError
from mirror.providers import (
    GenerationParams,
    HttpProvider,
    ScriptedProvider,
    strip_stops,
)


class TestGenerationParams:
    def test_defaults_valid(self):
        params = GenerationParams()
        assert params.temperature == 0.2
        assert params.top_p == 1.0

    @pytest.mark.parametrize("kwargs", [
        {"temperature": -0.1},
        {"top_p": 0.0},
        {"top_p": 1.5},
        {"max_output_tokens": 0},
    ])
    def test_invalid_ranges(self, kwargs):
        with pytest.raises(ValueError):
            GenerationParams(**kwargs)

    def test_with_temperature(self):
        params = GenerationParams(top_p=0.9).with_temperature(0.8)
        assert params.temperature == 0.8
        assert params.top_p == 0.9


class TestScriptedProvider:
    def test_prompt_hash_style_match(self):
        provider = ScriptedProvider([("players", "SELECT 1")])
        response = provider.complete("question about players", GenerationParams())
        assert response.text == "SELECT 1"
        assert response.finish_reason == "stop"

    def test_exhausted_transcript(self):
        provider = ScriptedProvider([(None, "only one")])
        provider.complete("x", GenerationParams())
        with pytest.raises(ProviderError) as err:
            provider.complete("x", GenerationParams())
        assert err.value.reason == "malformed-response"

    def test_call_log_ordered(self):
        provider = ScriptedProvider([(None, "a"), (None, "b"), (None, "c")])
        params = GenerationParams()
        for _ in range(3):
            provider.complete("p", params)
        assert [c.response for c in provider.call_log] == ["a", "b", "c"]
        assert len(provider.call_log) == 3

    def test_substring_match_selects_first(self):
        provider = ScriptedProvider([
            ("alpha", "A"), ("beta", "B"), (None, "fallback"),
        ])
        assert provider.complete("about beta things", GenerationParams()).text == "B"
        assert provider.complete("about beta again", GenerationParams()).text == "fallback"

    def test_deterministic_replay(self):
        transcript = [("q", "one"), (None, "two")]
        runs = []
        for _ in range(2):
            provider = ScriptedProvider(list(transcript))
            out = [provider.complete("q please", GenerationParams()).text,
                   provider.complete("other", GenerationParams()).text]
            runs.append(out)
        assert runs[0] == runs[1] == ["one", "two"]

    def test_edit_instruction_from_example(self):
        original = "SELECT name, ppg FROM players"
        revised = "SELECT name, ppg FROM players WHERE retired = 0"
        provider = ScriptedProvider([("Exclude players who have retired", revised)])
        response = provider.edit(original, "Exclude players who have retired",
                                 GenerationParams())
        assert response.text == revised
        assert "WHERE" in response.text

    def test_edit_empty_instruction_rejected(self):
        provider = ScriptedProvider([(None, "x")])
        with pytest.raises(ValueError):
            provider.edit("SELECT 1", "", GenerationParams())
        assert provider.call_log == []

    def test_identity_edit_script(self):
        sql = "SELECT 1"
        provider = ScriptedProvider([(None, sql)])
        assert provider.edit(sql, "keep as is", GenerationParams()).text == sql

    def test_empty_prompt_rejected(self):
        provider = ScriptedProvider([(None, "x")])
        with pytest.raises(ValueError):
            provider.complete("", GenerationParams())

    def test_from_file(self, tmp_path):
        path = tmp_path / "transcript.json"
        path.write_text(json.dumps([
            "bare string",
            ["match", "paired"],
            {"match": None, "response": "object"},
        ]), encoding="utf-8")
        provider = ScriptedProvider.from_file(path)
        assert provider.complete("anything", GenerationParams()).text == "bare string"
        assert provider.complete("match here", GenerationParams()).text == "paired"
        assert provider.complete("x", GenerationParams()).text == "object"

    def test_stop_sequences_stripped(self):
        provider = ScriptedProvider([(None, "SELECT 1\n###\ntrailing")])
        params = GenerationParams(stop_sequences=("###",))
        assert provider.complete("p", params).text == "SELECT 1\n"


class TestStripStops:
    def test_earliest_stop_wins(self):
        assert strip_stops("abcXdefY", ("Y", "X")) == "abc"

    def test_no_stop(self):
        assert strip_stops("abc", ("Z",)) == "abc"


class _StubHandler(BaseHTTPRequestHandler):
    canned = {"text": "SELECT 42"}
    status = 200
    requests_seen = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        type(self).requests_seen.append(
            {"path": self.path, "body": body,
             "auth": self.headers.get("Authorization")})
        payload = json.dumps(type(self).canned).encode("utf-8")
        self.send_response(type(self).status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    _StubHandler.requests_seen = []
    _StubHandler.canned = {"text": "SELECT 42"}
    _StubHandler.status = 200
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


class TestHttpProvider:
    def test_canned_body_round_trip(self, stub_server):
        provider = HttpProvider(endpoint=stub_server + "/complete")
        response = provider.complete("say something", GenerationParams())
        assert response.text == "SELECT 42"
        assert response.provider_id == "http"
        sent = _StubHandler.requests_seen[0]["body"]
        assert sent["prompt"] == "say something"
        assert sent["temperature"] == 0.2

    def test_openai_style_choices_parsed(self, stub_server):
        _StubHandler.canned = {"choices": [{"text": "SELECT 7"}]}
        provider = HttpProvider(endpoint=stub_server)
        assert provider.complete("p", GenerationParams()).text == "SELECT 7"

    def test_chat_style_message_parsed(self, stub_server):
        _StubHandler.canned = {"choices": [{"message": {"content": "SELECT 8"}}]}
        provider = HttpProvider(endpoint=stub_server)
        assert provider.complete("p", GenerationParams()).text == "SELECT 8"

    def test_auth_error_not_retryable(self, stub_server):
        _StubHandler.status = 401
        provider = HttpProvider(endpoint=stub_server)
        with pytest.raises(ProviderError) as err:
            provider.complete("p", GenerationParams())
        assert err.value.reason == "auth"
        assert not err.value.retryable

    def test_rate_limit_retryable(self, stub_server):
        _StubHandler.status = 429
        provider = HttpProvider(endpoint=stub_server)
        with pytest.raises(ProviderError) as err:
            provider.complete("p", GenerationParams())
        assert err.value.reason == "rate-limit"
        assert err.value.retryable

    def test_no_internal_retries(self, stub_server):
        _StubHandler.status = 500
        provider = HttpProvider(endpoint=stub_server)
        with pytest.raises(ProviderError):
            provider.complete("p", GenerationParams())
        assert len(_StubHandler.requests_seen) == 1

    def test_missing_text_malformed(self, stub_server):
        _StubHandler.canned = {"unexpected": True}
        provider = HttpProvider(endpoint=stub_server)
        with pytest.raises(ProviderError) as err:
            provider.complete("p", GenerationParams())
        assert err.value.reason == "malformed-response"

    def test_api_key_sent_as_bearer(self, stub_server):
        provider = HttpProvider(endpoint=stub_server, api_key="sekrit")
        provider.complete("p", GenerationParams())
        assert _StubHandler.requests_seen[0]["auth"] == "Bearer sekrit"

    def test_edit_posts_instruction(self, stub_server):
        _StubHandler.canned = {"text": "SELECT 1 WHERE 1"}
        provider = HttpProvider(endpoint=stub_server + "/c",
                                edit_endpoint=stub_server + "/edit")
        response = provider.edit("SELECT 1", "add where", GenerationParams())
        assert response.text == "SELECT 1 WHERE 1"
        sent = _StubHandler.requests_seen[0]
        assert sent["path"] == "/edit"
        assert sent["body"]["instruction"] == "add where"
        assert sent["body"]["input"] == "SELECT 1"

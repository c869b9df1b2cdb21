"""Generation-service abstraction: completion and instruction-based editing.

Two implementations ship here: an HTTP provider speaking a configurable
completion-style JSON endpoint, and a scripted provider that replays a fixed
transcript so the whole pipeline is testable offline and deterministically.
Retry policy deliberately lives in the orchestrator, never in a provider.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .errors import ProviderError
from .prompting import RenderedPrompt

__all__ = [
    "GenerationParams",
    "ProviderResponse",
    "Provider",
    "ScriptedProvider",
    "HttpProvider",
    "CallRecord",
    "strip_stops",
]


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.2
    top_p: float = 1.0
    max_output_tokens: int = 512
    stop_sequences: tuple[str, ...] = ()
    seed_hint: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")

    def with_temperature(self, temperature: float) -> "GenerationParams":
        return GenerationParams(temperature, self.top_p, self.max_output_tokens,
                                self.stop_sequences, self.seed_hint)


@dataclass(frozen=True)
class ProviderResponse:
    text: str
    finish_reason: str  # "stop" | "length" | "error"
    latency: float
    provider_id: str

    def __post_init__(self):
        assert self.finish_reason != "error" or self.text == ""


class Provider:
    """Base interface; subclasses implement _complete/_edit."""

    provider_id = "base"

    def complete(self, prompt: RenderedPrompt | str,
                 params: GenerationParams) -> ProviderResponse:
        text = prompt.text if isinstance(prompt, RenderedPrompt) else prompt
        if not text:
            raise ValueError("prompt must be non-empty")
        return self._complete(text, params)

    def edit(self, input_text: str, instruction: str,
             params: GenerationParams) -> ProviderResponse:
        if not input_text or not instruction:
            raise ValueError("input_text and instruction must be non-empty")
        return self._edit(input_text, instruction, params)

    def _complete(self, text: str, params: GenerationParams) -> ProviderResponse:
        raise NotImplementedError

    def _edit(self, input_text: str, instruction: str,
              params: GenerationParams) -> ProviderResponse:
        raise NotImplementedError


def strip_stops(text: str, stop_sequences: tuple[str, ...]) -> str:
    cut = len(text)
    for stop in stop_sequences:
        idx = text.find(stop)
        if idx >= 0:
            cut = min(cut, idx)
    return text[:cut]


@dataclass
class CallRecord:
    kind: str  # "complete" | "edit"
    prompt: str
    instruction: str | None
    params: GenerationParams
    response: str


class ScriptedProvider(Provider):
    """Deterministic test double replaying (match_key, response) entries.

    Each call consumes the first not-yet-used entry whose match key is a
    substring of the call's text (None/"" matches anything). A call with no
    matching entry left raises ProviderError{malformed-response}.
    """

    provider_id = "scripted"

    def __init__(self, transcript: list[tuple[str | None, str]]):
        if not transcript:
            raise ValueError("transcript must be non-empty")
        self._entries: list[tuple[str | None, str, bool]] = [
            (key, response, False) for key, response in transcript]
        self._lock = threading.Lock()
        self.call_log: list[CallRecord] = []
        self.calls_made = 0  # includes calls that raised (exhausted transcript)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        """Load a JSON transcript: a list of strings, [match, response]
        pairs, or {"match":..., "response":...} objects."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries: list[tuple[str | None, str]] = []
        for item in raw:
            if isinstance(item, str):
                entries.append((None, item))
            elif isinstance(item, list) and len(item) == 2:
                entries.append((item[0], item[1]))
            elif isinstance(item, dict):
                entries.append((item.get("match"), item["response"]))
            else:
                raise ValueError(f"bad transcript entry: {item!r}")
        return cls(entries)

    def _take(self, text: str) -> str:
        with self._lock:
            for idx, (key, response, used) in enumerate(self._entries):
                if used:
                    continue
                if not key or key in text:
                    self._entries[idx] = (key, response, True)
                    return response
        raise ProviderError("malformed-response",
                            "scripted transcript exhausted or no entry matches",
                            retryable=False)

    def _complete(self, text: str, params: GenerationParams) -> ProviderResponse:
        with self._lock:
            self.calls_made += 1
        response = self._take(text)
        with self._lock:
            self.call_log.append(CallRecord("complete", text, None, params, response))
        return ProviderResponse(strip_stops(response, params.stop_sequences),
                                "stop", 0.0, self.provider_id)

    def _edit(self, input_text: str, instruction: str,
              params: GenerationParams) -> ProviderResponse:
        with self._lock:
            self.calls_made += 1
        text = instruction + "\n" + input_text
        response = self._take(text)
        with self._lock:
            self.call_log.append(
                CallRecord("edit", input_text, instruction, params, response))
        return ProviderResponse(strip_stops(response, params.stop_sequences),
                                "stop", 0.0, self.provider_id)

    def calls(self, kind: str | None = None) -> list[CallRecord]:
        if kind is None:
            return list(self.call_log)
        return [c for c in self.call_log if c.kind == kind]


class HttpProvider(Provider):
    """Completion-style JSON endpoint client. Never retries internally."""

    provider_id = "http"

    def __init__(self, endpoint: str, edit_endpoint: str | None = None,
                 api_key: str | None = None, model: str | None = None,
                 timeout_s: float = 60.0):
        self.endpoint = endpoint
        self.edit_endpoint = edit_endpoint or endpoint
        self.api_key = api_key
        self.model = model
        self.timeout_s = timeout_s

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, url: str, body: dict) -> tuple[dict, float]:
        started = time.monotonic()
        try:
            response = httpx.post(url, json=body, headers=self._headers(),
                                  timeout=self.timeout_s)
        except httpx.TimeoutException as exc:
            raise ProviderError("timeout", str(exc), retryable=True) from None
        except httpx.HTTPError as exc:
            raise ProviderError("malformed-response", str(exc),
                                retryable=True) from None
        latency = time.monotonic() - started
        if response.status_code in (401, 403):
            raise ProviderError("auth", response.text, retryable=False)
        if response.status_code == 429:
            raise ProviderError("rate-limit", response.text, retryable=True)
        if response.status_code >= 400:
            raise ProviderError("malformed-response",
                                f"HTTP {response.status_code}: {response.text}",
                                retryable=True)
        try:
            return response.json(), latency
        except ValueError as exc:
            raise ProviderError("malformed-response", str(exc),
                                retryable=True) from None

    @staticmethod
    def _extract_text(payload: dict) -> str:
        if isinstance(payload.get("text"), str):
            return payload["text"]
        choices = payload.get("choices")
        if isinstance(choices, list) and choices:
            first = choices[0]
            if isinstance(first, dict):
                if isinstance(first.get("text"), str):
                    return first["text"]
                message = first.get("message")
                if isinstance(message, dict) and isinstance(message.get("content"), str):
                    return message["content"]
        raise ProviderError("malformed-response",
                            "no text field in provider response", retryable=True)

    def _complete(self, text: str, params: GenerationParams) -> ProviderResponse:
        body = {
            "prompt": text,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_output_tokens,
        }
        if params.stop_sequences:
            body["stop"] = list(params.stop_sequences)
        if self.model:
            body["model"] = self.model
        if params.seed_hint is not None:
            body["seed"] = params.seed_hint
        payload, latency = self._post(self.endpoint, body)
        out = strip_stops(self._extract_text(payload), params.stop_sequences)
        finish = payload.get("finish_reason")
        if finish not in ("stop", "length"):
            finish = "stop"
        return ProviderResponse(out, finish, latency, self.provider_id)

    def _edit(self, input_text: str, instruction: str,
              params: GenerationParams) -> ProviderResponse:
        body = {
            "input": input_text,
            "instruction": instruction,
            "temperature": params.temperature,
            "top_p": params.top_p,
        }
        if self.model:
            body["model"] = self.model
        payload, latency = self._post(self.edit_endpoint, body)
        out = strip_stops(self._extract_text(payload), params.stop_sequences)
        return ProviderResponse(out, "stop", latency, self.provider_id)

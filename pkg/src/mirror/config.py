"""Server configuration: one JSON file, env override for the API key."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .datasource import (
    DEFAULT_ROW_LIMIT,
    DEFAULT_TIMEOUT_S,
    DataSourceConfig,
    SourceKind,
)
from .orchestrator import DEFAULT_MAX_CHART_RETRIES, DEFAULT_MAX_RETRIES
from .prompting import DEFAULT_PROMPT_ROW_CAP
from .providers import GenerationParams, HttpProvider, Provider, ScriptedProvider

__all__ = ["ProviderConfig", "ServerConfig", "load_config"]

API_KEY_ENV = "MIRROR_API_KEY"


@dataclass
class ProviderConfig:
    kind: str = "http"  # "http" | "scripted"
    endpoint: str = ""
    edit_endpoint: str | None = None
    api_key: str | None = None
    model: str | None = None
    timeout_s: float = 60.0
    transcript_path: str | None = None

    def build(self) -> Provider:
        if self.kind == "scripted":
            if not self.transcript_path:
                raise ValueError("scripted provider requires transcript_path")
            return ScriptedProvider.from_file(self.transcript_path)
        if self.kind == "http":
            if not self.endpoint:
                raise ValueError("http provider requires endpoint")
            key = os.environ.get(API_KEY_ENV) or self.api_key
            return HttpProvider(self.endpoint, self.edit_endpoint, key,
                                self.model, self.timeout_s)
        raise ValueError(f"unknown provider kind {self.kind!r}")


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    store_path: str = "mirror-sessions.db"
    cors_origins: list[str] = field(default_factory=list)
    bearer_token: str | None = None
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    datasources: list[DataSourceConfig] = field(default_factory=list)
    max_retries: int = DEFAULT_MAX_RETRIES
    max_chart_retries: int = DEFAULT_MAX_CHART_RETRIES
    row_limit: int = DEFAULT_ROW_LIMIT
    prompt_row_cap: int = DEFAULT_PROMPT_ROW_CAP
    chart_row_cap: int = 500
    query_timeout_s: float = DEFAULT_TIMEOUT_S
    temperature: float = 0.2
    top_p: float = 1.0
    max_output_tokens: int = 512

    def base_params(self) -> GenerationParams:
        return GenerationParams(temperature=self.temperature, top_p=self.top_p,
                                max_output_tokens=self.max_output_tokens)


def load_config(path: str | Path) -> ServerConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    provider = ProviderConfig(**doc.get("provider", {}))
    datasources = [
        DataSourceConfig(
            id=d["id"],
            kind=SourceKind(d["kind"]),
            location=d["location"],
            read_only=d.get("read_only", True),
            row_limit=d.get("row_limit", doc.get("row_limit", DEFAULT_ROW_LIMIT)),
            timeout_s=d.get("timeout_s", doc.get("query_timeout_s", DEFAULT_TIMEOUT_S)),
        )
        for d in doc.get("datasources", [])
    ]
    known = {
        "host", "port", "store_path", "cors_origins", "bearer_token",
        "max_retries", "max_chart_retries", "row_limit", "prompt_row_cap",
        "chart_row_cap", "query_timeout_s", "temperature", "top_p",
        "max_output_tokens",
    }
    kwargs = {k: v for k, v in doc.items() if k in known}
    return ServerConfig(provider=provider, datasources=datasources, **kwargs)

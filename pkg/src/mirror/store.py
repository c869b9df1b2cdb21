"""Session serialization and the embedded on-disk session store.

Records are plain JSON documents keyed by session id in a sqlite file, so a
restarted server serves exactly the bytes it persisted. Serialization is
canonical (sorted keys) to make round-trip identity checkable.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path

from .chartspec import ChartSpec
from .datasource import ResultTable
from .orchestrator import (
    ChartAttempt,
    ErrorInfo,
    GenerationAttempt,
    QuerySession,
    SessionStatus,
)
from .providers import GenerationParams
from .sqlguard import Reason, ValidationVerdict

__all__ = ["SessionStore", "session_to_dict", "session_from_dict",
           "canonical_json"]


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def _encode_cell(cell):
    if isinstance(cell, bytes):
        return {"$bytes": cell.hex()}
    return cell


def _decode_cell(cell):
    if isinstance(cell, dict) and "$bytes" in cell:
        return bytes.fromhex(cell["$bytes"])
    return cell


def _params_to_dict(params: GenerationParams) -> dict:
    return {
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_output_tokens": params.max_output_tokens,
        "stop_sequences": list(params.stop_sequences),
        "seed_hint": params.seed_hint,
    }


def _params_from_dict(doc: dict) -> GenerationParams:
    return GenerationParams(
        temperature=doc["temperature"],
        top_p=doc["top_p"],
        max_output_tokens=doc["max_output_tokens"],
        stop_sequences=tuple(doc.get("stop_sequences") or ()),
        seed_hint=doc.get("seed_hint"),
    )


def _verdict_to_dict(verdict: ValidationVerdict | None) -> dict | None:
    if verdict is None:
        return None
    return {
        "accepted": verdict.accepted,
        "reason": verdict.reason.value,
        "referenced_tables": sorted(verdict.referenced_tables),
        "detail": verdict.detail,
    }


def _verdict_from_dict(doc: dict | None) -> ValidationVerdict | None:
    if doc is None:
        return None
    return ValidationVerdict(
        accepted=doc["accepted"],
        reason=Reason(doc["reason"]),
        referenced_tables=frozenset(doc.get("referenced_tables") or ()),
        detail=doc.get("detail", ""),
    )


def _error_to_dict(err: ErrorInfo | None) -> dict | None:
    if err is None:
        return None
    return {"reason": err.reason, "message": err.message}


def _error_from_dict(doc: dict | None) -> ErrorInfo | None:
    if doc is None:
        return None
    return ErrorInfo(doc["reason"], doc["message"])


def _attempt_to_dict(attempt: GenerationAttempt) -> dict:
    return {
        "index": attempt.index,
        "prompt_fingerprint": attempt.prompt_fingerprint,
        "raw_output": attempt.raw_output,
        "extracted_sql": attempt.extracted_sql,
        "verdict": _verdict_to_dict(attempt.verdict),
        "params_used": _params_to_dict(attempt.params_used),
        "execution_error": _error_to_dict(attempt.execution_error),
        "provider_error": _error_to_dict(attempt.provider_error),
        "prompt_text": attempt.prompt_text,
    }


def _attempt_from_dict(doc: dict) -> GenerationAttempt:
    return GenerationAttempt(
        index=doc["index"],
        prompt_fingerprint=doc["prompt_fingerprint"],
        raw_output=doc["raw_output"],
        extracted_sql=doc["extracted_sql"],
        verdict=_verdict_from_dict(doc.get("verdict")),
        params_used=_params_from_dict(doc["params_used"]),
        execution_error=_error_from_dict(doc.get("execution_error")),
        provider_error=_error_from_dict(doc.get("provider_error")),
        prompt_text=doc.get("prompt_text", ""),
    )


def table_to_dict(table: ResultTable | None) -> dict | None:
    if table is None:
        return None
    return {
        "columns": [list(c) for c in table.columns],
        "rows": [[_encode_cell(cell) for cell in row] for row in table.rows],
        "truncated": table.truncated,
    }


def table_from_dict(doc: dict | None) -> ResultTable | None:
    if doc is None:
        return None
    return ResultTable(
        columns=tuple((c[0], c[1]) for c in doc["columns"]),
        rows=tuple(tuple(_decode_cell(cell) for cell in row)
                   for row in doc["rows"]),
        truncated=doc["truncated"],
    )


def chart_to_dict(chart: ChartSpec | None) -> dict | None:
    if chart is None:
        return None
    return {
        "mark": chart.mark,
        "encodings": [list(e) for e in chart.encodings],
        "inline_data": [dict(r) for r in chart.inline_data],
        "title": chart.title,
    }


def chart_from_dict(doc: dict | None) -> ChartSpec | None:
    if doc is None:
        return None
    return ChartSpec(
        mark=doc["mark"],
        encodings=tuple((e[0], e[1], e[2]) for e in doc["encodings"]),
        inline_data=tuple(doc["inline_data"]),
        title=doc.get("title"),
    )


def _chart_attempt_to_dict(attempt: ChartAttempt) -> dict:
    return {
        "index": attempt.index,
        "raw_output": attempt.raw_output,
        "error": _error_to_dict(attempt.error),
    }


def _chart_attempt_from_dict(doc: dict) -> ChartAttempt:
    return ChartAttempt(
        index=doc["index"],
        raw_output=doc["raw_output"],
        error=_error_from_dict(doc.get("error")),
    )


def session_to_dict(session: QuerySession) -> dict:
    return {
        "id": session.id,
        "datasource_id": session.datasource_id,
        "question": session.question,
        "status": session.status.value,
        "attempts": [_attempt_to_dict(a) for a in session.attempts],
        "edit_attempts": [_attempt_to_dict(a) for a in session.edit_attempts],
        "final_sql": session.final_sql,
        "table": table_to_dict(session.table),
        "summary": session.summary,
        "summary_error": _error_to_dict(session.summary_error),
        "chart": chart_to_dict(session.chart),
        "chart_attempts": [_chart_attempt_to_dict(a)
                           for a in session.chart_attempts],
        "last_error": session.last_error,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }


def session_from_dict(doc: dict) -> QuerySession:
    return QuerySession(
        id=doc["id"],
        datasource_id=doc["datasource_id"],
        question=doc["question"],
        status=SessionStatus(doc["status"]),
        attempts=[_attempt_from_dict(a) for a in doc["attempts"]],
        edit_attempts=[_attempt_from_dict(a)
                       for a in doc.get("edit_attempts", [])],
        final_sql=doc.get("final_sql"),
        table=table_from_dict(doc.get("table")),
        summary=doc.get("summary"),
        summary_error=_error_from_dict(doc.get("summary_error")),
        chart=chart_from_dict(doc.get("chart")),
        chart_attempts=[_chart_attempt_from_dict(a)
                        for a in doc.get("chart_attempts", [])],
        last_error=doc.get("last_error"),
        created_at=doc["created_at"],
        updated_at=doc["updated_at"],
    )


class SessionStore:
    """sqlite-backed JSON document store keyed by session id."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        self._lock = threading.Lock()
        conn = self._connect()
        try:
            conn.execute(
                "CREATE TABLE IF NOT EXISTS sessions ("
                "id TEXT PRIMARY KEY, record TEXT NOT NULL, "
                "updated_at TEXT NOT NULL)")
            conn.commit()
        finally:
            conn.close()

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.path)
        return conn

    def put(self, record: dict) -> None:
        body = canonical_json(record)
        with self._lock:
            conn = self._connect()
            try:
                conn.execute(
                    "INSERT INTO sessions (id, record, updated_at) VALUES (?, ?, ?) "
                    "ON CONFLICT(id) DO UPDATE SET record=excluded.record, "
                    "updated_at=excluded.updated_at",
                    (record["id"], body, record.get("updated_at", "")))
                conn.commit()
            finally:
                conn.close()

    def get(self, session_id: str) -> dict | None:
        with self._lock:
            conn = self._connect()
            try:
                row = conn.execute(
                    "SELECT record FROM sessions WHERE id = ?",
                    (session_id,)).fetchone()
            finally:
                conn.close()
        return json.loads(row[0]) if row else None

    def get_raw(self, session_id: str) -> str | None:
        with self._lock:
            conn = self._connect()
            try:
                row = conn.execute(
                    "SELECT record FROM sessions WHERE id = ?",
                    (session_id,)).fetchone()
            finally:
                conn.close()
        return row[0] if row else None

    def ids(self) -> list[str]:
        with self._lock:
            conn = self._connect()
            try:
                rows = conn.execute(
                    "SELECT id FROM sessions ORDER BY updated_at").fetchall()
            finally:
                conn.close()
        return [r[0] for r in rows]

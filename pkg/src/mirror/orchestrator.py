"""The pipeline state machine.

Stage one turns a question into executed SQL under a bounded retry loop:
render prompt, complete, extract SQL, validate, execute. Stage two runs
automatically whenever stage one produced a result table and generates the
prose summary and the chart description (the latter with its own retry
budget). Manual SQL edits and instruction-driven edits re-enter stage two on
success and never touch the session's existing results on failure.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from . import chartspec, sqlguard
from .chartspec import ChartSpec
from .datasource import DataSourceHandle, ResultTable
from .errors import (
    ExecutionError,
    ExtractionError,
    ProviderError,
    SessionStateError,
    ValidationRejected,
)
from .prompting import (
    DEFAULT_PROMPT_ROW_CAP,
    PromptTemplate,
    TemplateKind,
    default_template,
    render_generation_prompt,
    render_summarization_prompt,
    render_visualization_prompt,
)
from .providers import GenerationParams, Provider
from .sqlguard import ValidationVerdict

__all__ = [
    "SessionStatus",
    "ErrorInfo",
    "GenerationAttempt",
    "ChartAttempt",
    "QuerySession",
    "Orchestrator",
    "extract_sql",
    "EMPTY_TABLE_SUMMARY",
    "DEFAULT_MAX_RETRIES",
    "DEFAULT_MAX_CHART_RETRIES",
]

DEFAULT_MAX_RETRIES = 3
DEFAULT_MAX_CHART_RETRIES = 3
TEMPERATURE_STEP = 0.3
TEMPERATURE_CAP = 1.0
SUMMARY_TEMPERATURE = 0.0
EMPTY_TABLE_SUMMARY = "The query returned no rows."


class SessionStatus(str, Enum):
    PENDING = "pending"
    SQL_FAILED = "sql-failed"
    SUCCEEDED = "succeeded"
    SUMMARIZING = "summarizing"
    COMPLETE = "complete"


@dataclass(frozen=True)
class ErrorInfo:
    reason: str
    message: str

    @classmethod
    def of(cls, exc) -> "ErrorInfo":
        return cls(getattr(exc, "reason", "error"), str(exc))


@dataclass
class GenerationAttempt:
    index: int  # 1-based
    prompt_fingerprint: str
    raw_output: str
    extracted_sql: str
    verdict: ValidationVerdict | None
    params_used: GenerationParams
    execution_error: ErrorInfo | None = None
    provider_error: ErrorInfo | None = None
    prompt_text: str = ""  # exposed over HTTP only behind the debug flag

    def succeeded(self) -> bool:
        return (self.verdict is not None and self.verdict.accepted
                and self.execution_error is None and self.provider_error is None)


@dataclass
class ChartAttempt:
    index: int
    raw_output: str
    error: ErrorInfo | None = None  # None means the spec was accepted


@dataclass
class QuerySession:
    id: str
    datasource_id: str
    question: str
    status: SessionStatus = SessionStatus.PENDING
    attempts: list[GenerationAttempt] = field(default_factory=list)
    edit_attempts: list[GenerationAttempt] = field(default_factory=list)
    final_sql: str | None = None
    table: ResultTable | None = None
    summary: str | None = None
    summary_error: ErrorInfo | None = None
    chart: ChartSpec | None = None
    chart_attempts: list[ChartAttempt] = field(default_factory=list)
    last_error: str | None = None
    created_at: str = ""
    updated_at: str = ""

    def touch(self):
        self.updated_at = _now()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


_SQL_START_RE = re.compile(r"\b(select|with)\b", re.IGNORECASE)
_WITH_CLAUSE_RE = re.compile(
    r"with\s+(recursive\s+)?[\w\"`\[]+\s*(\([^)]*\))?\s*as\s*\(", re.IGNORECASE)
_FENCE_RE = re.compile(r"```[a-zA-Z]*[ \t]*\n(.*?)```", re.DOTALL)


def extract_sql(raw_output: str) -> str:
    """Pull one SQL statement out of model output.

    Strips code fences, drops prose before the first SELECT (or a WITH that
    actually opens a CTE), and cuts trailing commentary after the statement's
    terminating semicolon. Raises ExtractionError when no SQL is present.
    """
    text = raw_output
    blocks = _FENCE_RE.findall(text)
    if blocks:
        with_sql = [b for b in blocks if _SQL_START_RE.search(b)]
        text = with_sql[0] if with_sql else blocks[0]

    start = None
    for m in _SQL_START_RE.finditer(text):
        if m.group(1).lower() == "select":
            start = m.start()
            break
        if _WITH_CLAUSE_RE.match(text, m.start()):
            start = m.start()
            break
    if start is None:
        m = _SQL_START_RE.search(text)
        if m is None:
            raise ExtractionError()
        start = m.start()
    text = text[start:]

    cut = _first_unquoted_semicolon(text)
    if cut is not None:
        text = text[:cut + 1]
    return text.strip()


def _first_unquoted_semicolon(text: str) -> int | None:
    quote = None
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == quote:
                if i + 1 < len(text) and text[i + 1] == quote:
                    i += 2
                    continue
                quote = None
        elif ch in ("'", '"', "`"):
            quote = ch
        elif ch == "-" and text.startswith("--", i):
            nl = text.find("\n", i)
            if nl < 0:
                return None
            i = nl
        elif ch == ";":
            return i
        i += 1
    return None


class Orchestrator:
    """Runs sessions against one provider with fixed retry budgets."""

    def __init__(self, provider: Provider,
                 templates: dict[TemplateKind, PromptTemplate] | None = None,
                 *, max_retries: int = DEFAULT_MAX_RETRIES,
                 max_chart_retries: int = DEFAULT_MAX_CHART_RETRIES,
                 base_params: GenerationParams | None = None,
                 prompt_row_cap: int = DEFAULT_PROMPT_ROW_CAP,
                 chart_row_cap: int = chartspec.DEFAULT_CHART_ROW_CAP):
        self.provider = provider
        self.templates = dict(templates or {})
        for kind in TemplateKind:
            self.templates.setdefault(kind, default_template(kind))
        self.max_retries = max_retries
        self.max_chart_retries = max_chart_retries
        self.base_params = base_params or GenerationParams()
        self.prompt_row_cap = prompt_row_cap
        self.chart_row_cap = chart_row_cap

    # -- parameter schedule --------------------------------------------

    def _attempt_params(self, index: int) -> GenerationParams:
        temp = min(self.base_params.temperature + TEMPERATURE_STEP * (index - 1),
                   TEMPERATURE_CAP)
        return self.base_params.with_temperature(temp)

    def _template(self, kind: TemplateKind,
                  overrides: dict[TemplateKind, PromptTemplate] | None) -> PromptTemplate:
        if overrides and kind in overrides:
            return overrides[kind]
        return self.templates[kind]

    # -- stage one -------------------------------------------------------

    def new_session(self, datasource_id: str, question: str) -> QuerySession:
        now = _now()
        return QuerySession(id=uuid.uuid4().hex, datasource_id=datasource_id,
                            question=question, created_at=now, updated_at=now)

    def run_query(self, source: DataSourceHandle, question: str,
                  templates: dict[TemplateKind, PromptTemplate] | None = None,
                  session: QuerySession | None = None,
                  observer=None) -> QuerySession:
        """Full pipeline: bounded generation loop, then stage two on success."""
        session = session or self.new_session(source.id, question)
        notify = _notifier(session, observer)
        notify()
        meta = source.introspect()
        gen_template = self._template(TemplateKind.GENERATION, templates)

        for index in range(1, self.max_retries + 1):
            params = self._attempt_params(index)
            prompt = render_generation_prompt(gen_template, meta, question)
            attempt = GenerationAttempt(
                index=index, prompt_fingerprint=prompt.inputs_fingerprint,
                raw_output="", extracted_sql="", verdict=None,
                params_used=params, prompt_text=prompt.text)
            try:
                response = self.provider.complete(prompt, params)
            except ProviderError as exc:
                attempt.provider_error = ErrorInfo.of(exc)
                session.attempts.append(attempt)
                notify()
                if not exc.retryable:
                    session.status = SessionStatus.SQL_FAILED
                    session.last_error = str(exc)
                    notify()
                    raise
                continue
            attempt.raw_output = response.text
            try:
                attempt.extracted_sql = extract_sql(response.text)
            except ExtractionError:
                attempt.extracted_sql = ""
            attempt.verdict = sqlguard.validate(attempt.extracted_sql)
            if attempt.verdict.accepted:
                try:
                    table = source.execute(attempt.extracted_sql)
                except (ExecutionError, ValidationRejected) as exc:
                    attempt.execution_error = ErrorInfo.of(exc)
                    session.attempts.append(attempt)
                    notify()
                    continue
                session.attempts.append(attempt)
                session.final_sql = attempt.extracted_sql
                session.table = table
                session.status = SessionStatus.SUCCEEDED
                notify()
                return self.run_stage_two(session, templates, observer)
            session.attempts.append(attempt)
            notify()

        session.status = SessionStatus.SQL_FAILED
        session.last_error = "all generation attempts failed"
        notify()
        return session

    # -- stage two -------------------------------------------------------

    def run_stage_two(self, session: QuerySession,
                      templates: dict[TemplateKind, PromptTemplate] | None = None,
                      observer=None) -> QuerySession:
        """Summarize and chart the session's table; requires a table."""
        if session.table is None:
            raise SessionStateError("stage two requires a result table")
        notify = _notifier(session, observer)
        table = session.table
        session.status = SessionStatus.SUMMARIZING
        notify()

        if table.is_empty():
            session.summary = EMPTY_TABLE_SUMMARY
            session.chart = None
            session.status = SessionStatus.COMPLETE
            notify()
            return session

        sum_template = self._template(TemplateKind.SUMMARIZATION, templates)
        sum_params = self.base_params.with_temperature(SUMMARY_TEMPERATURE)
        prompt = render_summarization_prompt(sum_template, session.question,
                                             table, self.prompt_row_cap)
        try:
            response = self.provider.complete(prompt, sum_params)
            session.summary = response.text.strip()
            session.summary_error = None
        except ProviderError as exc:
            session.summary_error = ErrorInfo.of(exc)
        notify()

        viz_template = self._template(TemplateKind.VISUALIZATION, templates)
        for index in range(1, self.max_chart_retries + 1):
            params = self._attempt_params(index)
            prompt = render_visualization_prompt(viz_template, session.question,
                                                 table, self.prompt_row_cap)
            try:
                response = self.provider.complete(prompt, params)
            except ProviderError as exc:
                session.chart_attempts.append(
                    ChartAttempt(index, "", ErrorInfo.of(exc)))
                notify()
                if not exc.retryable:
                    break
                continue
            try:
                spec = chartspec.parse_and_validate(response.text, table,
                                                    self.chart_row_cap)
            except Exception as exc:
                session.chart_attempts.append(
                    ChartAttempt(index, response.text, ErrorInfo.of(exc)))
                notify()
                continue
            session.chart = spec
            session.chart_attempts.append(ChartAttempt(index, response.text))
            break

        session.status = SessionStatus.COMPLETE
        notify()
        return session

    # -- human-in-the-loop edits ------------------------------------------

    def rerun_sql(self, session: QuerySession, source: DataSourceHandle,
                  sql: str,
                  templates: dict[TemplateKind, PromptTemplate] | None = None,
                  observer=None) -> QuerySession:
        """Manually edited SQL: validate, execute, re-enter stage two.

        Rejection and execution errors propagate and leave the session
        untouched; manual edits are never auto-retried.
        """
        verdict = sqlguard.validate(sql)
        if not verdict.accepted:
            raise ValidationRejected(verdict.reason.value, verdict.detail,
                                     verdict=verdict)
        table = source.execute(sql)
        self._replace_result(session, sql, table)
        _notifier(session, observer)()
        return self.run_stage_two(session, templates, observer)

    def edit_with_instruction(self, session: QuerySession,
                              source: DataSourceHandle, instruction: str,
                              templates: dict[TemplateKind, PromptTemplate] | None = None,
                              observer=None) -> QuerySession:
        """Instructed edit of the current SQL via the provider's edit call."""
        if not instruction or not instruction.strip():
            raise ValueError("instruction must be non-empty")
        if session.final_sql is None:
            raise SessionStateError("session has no SQL to edit")
        notify = _notifier(session, observer)
        original_sql = session.final_sql

        for index in range(1, self.max_retries + 1):
            params = self._attempt_params(index)
            attempt = GenerationAttempt(
                index=index, prompt_fingerprint="", raw_output="",
                extracted_sql="", verdict=None, params_used=params)
            try:
                response = self.provider.edit(original_sql, instruction, params)
            except ProviderError as exc:
                attempt.provider_error = ErrorInfo.of(exc)
                session.edit_attempts.append(attempt)
                notify()
                if not exc.retryable:
                    session.last_error = str(exc)
                    notify()
                    raise
                continue
            attempt.raw_output = response.text
            try:
                attempt.extracted_sql = extract_sql(response.text)
            except ExtractionError:
                attempt.extracted_sql = ""
            attempt.verdict = sqlguard.validate(attempt.extracted_sql)
            if attempt.verdict.accepted:
                try:
                    table = source.execute(attempt.extracted_sql)
                except (ExecutionError, ValidationRejected) as exc:
                    attempt.execution_error = ErrorInfo.of(exc)
                    session.edit_attempts.append(attempt)
                    notify()
                    continue
                session.edit_attempts.append(attempt)
                self._replace_result(session, attempt.extracted_sql, table)
                notify()
                return self.run_stage_two(session, templates, observer)
            session.edit_attempts.append(attempt)
            notify()

        session.last_error = "all edit attempts failed; session unchanged"
        notify()
        return session

    @staticmethod
    def _replace_result(session: QuerySession, sql: str, table: ResultTable):
        session.final_sql = sql
        session.table = table
        session.summary = None
        session.summary_error = None
        session.chart = None
        session.chart_attempts = []
        session.last_error = None
        session.status = SessionStatus.SUCCEEDED


def _notifier(session: QuerySession, observer):
    def notify():
        session.touch()
        if observer is not None:
            observer(session)
    return notify

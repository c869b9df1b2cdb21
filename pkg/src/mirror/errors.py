"""Exception taxonomy shared across the pipeline.

Every error that crosses a module boundary carries a machine-readable
``reason`` code so the retry loop, the HTTP layer, and the UI can react
without parsing prose.
"""

from __future__ import annotations


class MirrorError(Exception):
    """Base class for all errors raised by this package."""

    reason: str = "error"

    def __init__(self, reason: str, message: str = ""):
        self.reason = reason
        self.message = message or reason
        super().__init__(self.message)


class DataSourceError(MirrorError):
    """Registration or ingestion failure.

    Reasons: ``unreachable``, ``parse-failure``, ``duplicate-id``,
    ``ragged-rows``, ``empty-file``, ``unknown-id``.
    """


class ExecutionError(MirrorError):
    """SQL execution failure; ``message`` is the engine's text verbatim.

    Reasons: ``syntax``, ``missing-relation``, ``type-error``, ``timeout``.
    """


class ValidationRejected(MirrorError):
    """SQL refused by the read-only guard before reaching the engine."""

    def __init__(self, reason: str, message: str = "", verdict=None):
        super().__init__(reason, message)
        self.verdict = verdict


class ParseError(MirrorError):
    """Input SQL could not be tokenized."""

    def __init__(self, message: str):
        super().__init__("unparseable", message)


class TemplateError(MirrorError):
    """Malformed prompt template.

    Reasons: ``missing-slot``, ``duplicate-slot``, ``unknown-slot``,
    ``bad-header``.
    """


class VisualizationSkipped(MirrorError):
    """No chart prompt is produced for an empty result table."""

    def __init__(self, message: str = "empty result table"):
        super().__init__("empty-table", message)


class ProviderError(MirrorError):
    """Generation service failure.

    Reasons: ``timeout``, ``auth``, ``rate-limit``, ``malformed-response``.
    ``retryable`` tells the orchestrator whether another attempt is worth it.
    """

    def __init__(self, reason: str, message: str = "", retryable: bool = True):
        super().__init__(reason, message)
        self.retryable = retryable


class ExtractionError(MirrorError):
    """Model output contains no SQL statement to extract."""

    def __init__(self, message: str = "no SELECT or WITH found in output"):
        super().__init__("no-sql", message)


class VegaInvalid(MirrorError):
    """Chart description rejected by the validator.

    Reasons: ``not-json``, ``bad-mark``, ``unknown-field``, ``no-encoding``.
    """


class GenerationExhausted(MirrorError):
    """All retry attempts failed; carried in session status, raised by the CLI."""

    def __init__(self, message: str = "all generation attempts failed"):
        super().__init__("exhausted", message)


class SessionStateError(MirrorError):
    """Operation not valid for the session's current state."""

    def __init__(self, message: str):
        super().__init__("bad-state", message)

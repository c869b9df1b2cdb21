"""Command-line entry points: serve, query, introspect, validate-sql.

Exit codes: 0 success, 1 domain failure, 2 usage/config error,
3 generation exhausted.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import sqlguard
from .config import ProviderConfig, ServerConfig, load_config
from .datasource import (
    DataSourceConfig,
    DataSourceError,
    DataSourceRegistry,
    ResultTable,
    SourceKind,
)
from .errors import MirrorError
from .orchestrator import Orchestrator, SessionStatus
from .prompting import serialize_schema
from .providers import Provider

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_EXHAUSTED = 3


@click.group()
def main():
    """Natural-language data querying with validated read-only SQL."""


def _resolve_source(ds: str, config: ServerConfig | None) -> DataSourceConfig:
    path = Path(ds)
    if path.exists():
        kind = SourceKind.CSV if path.suffix.lower() == ".csv" else SourceKind.EMBEDDED_FILE
        return DataSourceConfig(id=path.stem or "cli", kind=kind, location=str(path))
    if config is not None:
        for candidate in config.datasources:
            if candidate.id == ds:
                return candidate
    raise click.UsageError(f"data source {ds!r} is neither a file nor a configured id")


def _build_provider(spec: str | None, config: ServerConfig | None) -> Provider:
    if spec:
        kind, sep, rest = spec.partition(":")
        if not sep:
            raise click.UsageError("provider must look like scripted:<path> or http:<url>")
        if kind == "scripted":
            return ProviderConfig(kind="scripted", transcript_path=rest).build()
        if kind == "http":
            return ProviderConfig(kind="http", endpoint=rest).build()
        raise click.UsageError(f"unknown provider kind {kind!r}")
    if config is not None:
        return config.provider.build()
    raise click.UsageError("no provider: pass --provider or a --config with one")


def _format_table(table: ResultTable) -> str:
    header = table.column_names
    rendered = [[_cell(c) for c in row] for row in table.rows]
    widths = [len(h) for h in header]
    for row in rendered:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rendered:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    if table.truncated:
        lines.append("(truncated at row limit)")
    return "\n".join(lines)


def _cell(cell) -> str:
    if cell is None:
        return "NULL"
    if isinstance(cell, float):
        return f"{cell:.6g}"
    return str(cell)


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default=None, help="Override the configured host.")
@click.option("--port", default=None, type=int, help="Override the configured port.")
def serve(config_path, host, port):
    """Start the HTTP service."""
    import uvicorn

    from .server import create_app

    config = load_config(config_path)
    app = create_app(config)
    try:
        uvicorn.run(app, host=host or config.host, port=port or config.port,
                    log_level="info")
    except OSError as exc:
        click.echo(f"cannot listen: {exc}", err=True)
        sys.exit(EXIT_DOMAIN)
    except SystemExit as exc:
        # uvicorn signals startup failure (e.g. port in use) with its own code
        if exc.code not in (0, None):
            click.echo("server failed to start", err=True)
            sys.exit(EXIT_DOMAIN)
        raise


@main.command()
@click.option("--ds", required=True, help="Data source id (with --config) or file path.")
@click.option("--question", required=True)
@click.option("--provider", "provider_spec", default=None,
              help="Provider, e.g. scripted:<transcript.json> or http:<url>.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--chart-out", default="mirror-chart.json",
              type=click.Path(dir_okay=False, writable=True))
def query(ds, question, provider_spec, config_path, chart_out):
    """Run the full pipeline once: SQL, table, summary, chart document."""
    config = load_config(config_path) if config_path else None
    source_config = _resolve_source(ds, config)
    provider = _build_provider(provider_spec, config)

    registry = DataSourceRegistry()
    try:
        handle = registry.register(source_config)
    except DataSourceError as exc:
        click.echo(f"data source error: {exc.message}", err=True)
        sys.exit(EXIT_USAGE if exc.reason == "unreachable" else EXIT_DOMAIN)

    orchestrator = Orchestrator(
        provider,
        max_retries=config.max_retries if config else 3,
        max_chart_retries=config.max_chart_retries if config else 3,
        base_params=config.base_params() if config else None,
        prompt_row_cap=config.prompt_row_cap if config else 20,
        chart_row_cap=config.chart_row_cap if config else 500,
    )
    try:
        session = orchestrator.run_query(handle, question)
    except MirrorError as exc:
        click.echo(f"pipeline error: {exc.message}", err=True)
        sys.exit(EXIT_DOMAIN)

    if session.status is SessionStatus.SQL_FAILED:
        click.echo("all generation attempts failed:", err=True)
        for attempt in session.attempts:
            reason = ""
            if attempt.provider_error:
                reason = f"provider: {attempt.provider_error.message}"
            elif attempt.execution_error:
                reason = f"execution: {attempt.execution_error.message}"
            elif attempt.verdict and not attempt.verdict.accepted:
                reason = f"rejected: {attempt.verdict.reason.value}"
            click.echo(f"  attempt {attempt.index}: {reason}", err=True)
            if attempt.raw_output:
                click.echo(f"    output: {attempt.raw_output!r}", err=True)
        sys.exit(EXIT_EXHAUSTED)

    click.echo("SQL:")
    click.echo(session.final_sql or "")
    click.echo("")
    click.echo(_format_table(session.table))
    click.echo("")
    click.echo(f"Summary: {session.summary or '(no summary)'}")
    if session.chart is not None:
        from .chartspec import emit
        Path(chart_out).write_text(emit(session.chart), encoding="utf-8")
        click.echo(f"Chart written to {chart_out}")
    else:
        click.echo("No chart produced.")


@main.command()
@click.option("--ds", required=True, help="Data source id (with --config) or file path.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
def introspect(ds, config_path):
    """Print the schema exactly as it fills the generation prompt."""
    config = load_config(config_path) if config_path else None
    source_config = _resolve_source(ds, config)
    registry = DataSourceRegistry()
    try:
        handle = registry.register(source_config)
        meta = handle.introspect()
    except DataSourceError as exc:
        click.echo(f"data source error: {exc.message}", err=True)
        sys.exit(EXIT_USAGE)
    click.echo(serialize_schema(meta))


@main.command(name="validate-sql")
@click.argument("sql_file", required=False,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--stdin", "from_stdin", is_flag=True, help="Read SQL from stdin.")
def validate_sql(sql_file, from_stdin):
    """Validate one statement; exit 0 when accepted, 1 when rejected."""
    if from_stdin:
        sql = sys.stdin.read()
    elif sql_file:
        sql = Path(sql_file).read_text(encoding="utf-8")
    else:
        raise click.UsageError("pass a SQL file or --stdin")
    verdict = sqlguard.validate(sql)
    click.echo(verdict.reason.value)
    if verdict.detail and not verdict.accepted:
        click.echo(verdict.detail, err=True)
    sys.exit(EXIT_OK if verdict.accepted else EXIT_DOMAIN)


if __name__ == "__main__":
    main()

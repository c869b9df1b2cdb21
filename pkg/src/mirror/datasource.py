"""Data source management: registration, CSV ingestion, introspection, execution.

Embedded and CSV-backed sources run on sqlite3 with read-only connections;
networked relational sources go through SQLAlchemy with the same read-only
discipline. Every execution path re-checks the SQL guard, so no unvalidated
statement can reach an engine even if a caller skips its own validation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
import sqlite3
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import sqlguard
from .errors import DataSourceError, ExecutionError, ValidationRejected

__all__ = [
    "SourceKind",
    "DataSourceConfig",
    "TableMeta",
    "SchemaMetadata",
    "ResultTable",
    "DataSourceHandle",
    "DataSourceRegistry",
    "ingest_csv",
    "infer_column_types",
    "sanitize_table_name",
    "canonical_type",
]

DEFAULT_ROW_LIMIT = 1000
DEFAULT_TIMEOUT_S = 30.0


class SourceKind(str, Enum):
    EMBEDDED_FILE = "embedded-file"
    NETWORKED = "networked-relational"
    CSV = "csv"


@dataclass(frozen=True)
class DataSourceConfig:
    id: str
    kind: SourceKind
    location: str
    read_only: bool = True
    row_limit: int = DEFAULT_ROW_LIMIT
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self):
        if self.row_limit <= 0:
            raise ValueError("row_limit must be positive")


@dataclass(frozen=True)
class TableMeta:
    name: str
    columns: tuple[tuple[str, str, bool], ...]  # (name, type tag, nullable)
    primary_key: tuple[str, ...] = ()
    foreign_keys: tuple[tuple[str, str, str], ...] = ()  # (local, table, column)

    def column_names(self) -> list[str]:
        return [c[0] for c in self.columns]


@dataclass(frozen=True)
class SchemaMetadata:
    tables: tuple[TableMeta, ...]

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    def serialize(self) -> str:
        doc = [
            {
                "name": t.name,
                "columns": [list(c) for c in t.columns],
                "primary_key": list(t.primary_key),
                "foreign_keys": [list(fk) for fk in t.foreign_keys],
            }
            for t in self.tables
        ]
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def identifiers(self) -> set[str]:
        names = {t.name for t in self.tables}
        for t in self.tables:
            names.update(t.column_names())
        return names


# Type-tag lattice used for ResultTable conformance: INTEGER and REAL are
# exact, TEXT is the top type and accepts any scalar.
_TAG_CONFORMS = {
    "INTEGER": (int,),
    "REAL": (int, float),
    "BLOB": (bytes,),
}


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[tuple[str, str], ...]  # (name, type tag)
    rows: tuple[tuple, ...]
    truncated: bool = False

    def __post_init__(self):
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise ValueError("row width does not match column count")
        for idx, (_, tag) in enumerate(self.columns):
            expected = _TAG_CONFORMS.get(tag)
            if expected is None:
                continue
            for row in self.rows:
                cell = row[idx]
                if cell is not None and not isinstance(cell, expected):
                    raise ValueError(f"cell {cell!r} does not conform to {tag}")

    @property
    def column_names(self) -> list[str]:
        return [c[0] for c in self.columns]

    def is_empty(self) -> bool:
        return not self.rows

    def records(self) -> list[dict]:
        names = self.column_names
        return [dict(zip(names, row)) for row in self.rows]

    def content_hash(self) -> str:
        doc = json.dumps(
            {"columns": [list(c) for c in self.columns],
             "rows": [list(r) for r in self.rows]},
            sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def result_table_from_cursor(names: list[str], rows: list[tuple],
                             truncated: bool) -> ResultTable:
    tags = [_infer_result_tag(rows, i) for i in range(len(names))]
    return ResultTable(
        columns=tuple(zip(names, tags)),
        rows=tuple(tuple(r) for r in rows),
        truncated=truncated,
    )


def _infer_result_tag(rows: list[tuple], idx: int) -> str:
    cells = [r[idx] for r in rows if r[idx] is not None]
    if not cells:
        return "TEXT"
    if all(isinstance(c, int) for c in cells):
        return "INTEGER"
    if all(isinstance(c, (int, float)) for c in cells):
        return "REAL"
    if all(isinstance(c, bytes) for c in cells):
        return "BLOB"
    return "TEXT"


def canonical_type(declared: str | None) -> str:
    """Map a declared SQL type to a canonical tag via affinity-style rules."""
    if not declared:
        return "TEXT"
    d = declared.upper()
    if "INT" in d or d in ("BIGSERIAL", "SERIAL", "BOOLEAN", "BOOL"):
        return "INTEGER"
    if any(s in d for s in ("CHAR", "CLOB", "TEXT", "STRING", "UUID", "JSON",
                            "DATE", "TIME", "ENUM")):
        return "TEXT"
    if "BLOB" in d or "BYTEA" in d or "BINARY" in d:
        return "BLOB"
    if any(s in d for s in ("REAL", "FLOA", "DOUB")):
        return "REAL"
    return "NUMERIC"


# --------------------------------------------------------------------------
# CSV ingestion

_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def infer_column_types(columns: list[list[str]]) -> list[str]:
    """Infer one tag per column: INTEGER if every non-empty cell is a decimal
    integer, else REAL if every non-empty cell is a decimal float, else TEXT.
    """
    tags = []
    for cells in columns:
        non_empty = [c for c in cells if c != ""]
        if all(_INT_RE.match(c) for c in non_empty):
            tags.append("INTEGER")
        elif all(_FLOAT_RE.match(c) for c in non_empty):
            tags.append("REAL")
        else:
            tags.append("TEXT")
    return tags


def convert_cell(raw: str, tag: str):
    if raw == "":
        return None
    if tag == "INTEGER":
        return int(raw)
    if tag == "REAL":
        return float(raw)
    return raw


def sanitize_table_name(stem: str) -> str:
    name = re.sub(r"[^A-Za-z0-9_]", "_", stem)
    if not name or not re.match(r"[A-Za-z_]", name[0]):
        name = "_" + name
    return name


def _read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    p = Path(path)
    if not p.exists():
        raise DataSourceError("unreachable", f"no such file: {p}")
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataSourceError("empty-file", f"{p} has no header row") from None
        except csv.Error as exc:
            raise DataSourceError("parse-failure", str(exc)) from None
        if not header or all(h == "" for h in header):
            raise DataSourceError("empty-file", f"{p} has an empty header row")
        rows = []
        try:
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DataSourceError(
                        "ragged-rows",
                        f"line {lineno}: expected {len(header)} cells, got {len(row)}")
                rows.append(row)
        except csv.Error as exc:
            raise DataSourceError("parse-failure", str(exc)) from None
    return header, rows


class EmbeddedInstance:
    """Temporary sqlite database that CSV files are ingested into."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        sqlite3.connect(self.path).close()

    def table_names(self) -> list[str]:
        conn = sqlite3.connect(self.path)
        try:
            cur = conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table'")
            return [r[0] for r in cur.fetchall()]
        finally:
            conn.close()

    def ingest(self, csv_path: str | Path, table_name: str | None = None) -> str:
        """Create one table from ``csv_path``; returns the final table name
        (collisions get a _2, _3, ... suffix)."""
        header, rows = _read_csv(csv_path)
        tags = infer_column_types(
            [[row[i] for row in rows] for i in range(len(header))])
        base = sanitize_table_name(table_name or Path(csv_path).stem)
        existing = set(self.table_names())
        name = base
        suffix = 2
        while name in existing:
            name = f"{base}_{suffix}"
            suffix += 1
        cols = [sanitize_table_name(h) for h in header]
        ddl = "CREATE TABLE {} ({})".format(
            _quote_ident(name),
            ", ".join(f"{_quote_ident(c)} {t}" for c, t in zip(cols, tags)))
        conn = sqlite3.connect(self.path)
        try:
            conn.execute(ddl)
            placeholders = ", ".join("?" for _ in cols)
            conn.executemany(
                f"INSERT INTO {_quote_ident(name)} VALUES ({placeholders})",
                [tuple(convert_cell(c, t) for c, t in zip(row, tags))
                 for row in rows])
            conn.commit()
        finally:
            conn.close()
        return name


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def ingest_csv(path: str | Path, table_name: str | None = None,
               db_path: str | Path | None = None) -> EmbeddedInstance:
    """Convert a CSV file into a temporary embedded database instance."""
    if db_path is None:
        import tempfile
        fd = tempfile.NamedTemporaryFile(suffix=".db", delete=False)
        fd.close()
        db_path = fd.name
    instance = EmbeddedInstance(db_path)
    instance.ingest(path, table_name)
    return instance


# --------------------------------------------------------------------------
# Handles

class DataSourceHandle:
    """A registered data source; introspection and guarded execution."""

    def __init__(self, config: DataSourceConfig):
        self.config = config

    @property
    def id(self) -> str:
        return self.config.id

    def introspect(self) -> SchemaMetadata:
        raise NotImplementedError

    def execute(self, sql: str, row_limit: int | None = None) -> ResultTable:
        raise NotImplementedError


class SqliteHandle(DataSourceHandle):
    def __init__(self, config: DataSourceConfig, db_path: str):
        super().__init__(config)
        self.db_path = db_path

    def _connect_ro(self) -> sqlite3.Connection:
        uri = f"file:{self.db_path}?mode=ro"
        try:
            return sqlite3.connect(uri, uri=True)
        except sqlite3.OperationalError as exc:
            raise DataSourceError("unreachable", str(exc)) from None

    def introspect(self) -> SchemaMetadata:
        conn = self._connect_ro()
        try:
            names = [r[0] for r in conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table' "
                "AND name NOT LIKE 'sqlite_%' ORDER BY name")]
            tables = []
            for name in names:
                cols, pk = [], []
                for _, cname, ctype, notnull, _, pk_pos in conn.execute(
                        f"PRAGMA table_info({_quote_ident(name)})"):
                    cols.append((cname, canonical_type(ctype), not notnull))
                    if pk_pos:
                        pk.append((pk_pos, cname))
                fks = []
                for row in conn.execute(
                        f"PRAGMA foreign_key_list({_quote_ident(name)})"):
                    # (id, seq, table, from, to, on_update, on_delete, match)
                    fks.append((row[3], row[2], row[4] or row[3]))
                tables.append(TableMeta(
                    name=name,
                    columns=tuple(cols),
                    primary_key=tuple(c for _, c in sorted(pk)),
                    foreign_keys=tuple(fks),
                ))
            return SchemaMetadata(tables=tuple(tables))
        finally:
            conn.close()

    def execute(self, sql: str, row_limit: int | None = None) -> ResultTable:
        _require_validated(sql)
        limit = row_limit or self.config.row_limit
        conn = self._connect_ro()
        timer = threading.Timer(self.config.timeout_s, conn.interrupt)
        timer.start()
        try:
            cur = conn.execute(sql)
            fetched = cur.fetchmany(limit + 1)
            names = [d[0] for d in cur.description] if cur.description else []
        except sqlite3.Error as exc:
            raise _map_sqlite_error(exc) from None
        finally:
            timer.cancel()
            conn.close()
        return result_table_from_cursor(names, fetched[:limit],
                                        truncated=len(fetched) > limit)


class SqlAlchemyHandle(DataSourceHandle):
    """Networked relational sources, addressed by connection string."""

    def __init__(self, config: DataSourceConfig):
        super().__init__(config)
        import sqlalchemy
        from sqlalchemy import event
        try:
            self.engine = sqlalchemy.create_engine(config.location)
        except Exception as exc:
            raise DataSourceError("unreachable", str(exc)) from None
        if self.engine.dialect.name == "sqlite":
            @event.listens_for(self.engine, "connect")
            def _ro(dbapi_conn, _record):
                dbapi_conn.execute("PRAGMA query_only=ON")
        elif self.engine.dialect.name == "postgresql":
            @event.listens_for(self.engine, "connect")
            def _ro_pg(dbapi_conn, _record):
                with dbapi_conn.cursor() as cur:
                    cur.execute("SET default_transaction_read_only = on")
        try:
            with self.engine.connect() as conn:
                conn.exec_driver_sql("SELECT 1")
        except Exception as exc:
            raise DataSourceError("unreachable", str(exc)) from None

    def introspect(self) -> SchemaMetadata:
        import sqlalchemy
        try:
            insp = sqlalchemy.inspect(self.engine)
            tables = []
            for name in sorted(insp.get_table_names()):
                cols = [(c["name"], canonical_type(str(c["type"])),
                         bool(c.get("nullable", True)))
                        for c in insp.get_columns(name)]
                pk = tuple(insp.get_pk_constraint(name).get("constrained_columns") or ())
                fks = []
                for fk in insp.get_foreign_keys(name):
                    for local, remote in zip(fk.get("constrained_columns", []),
                                             fk.get("referred_columns", [])):
                        fks.append((local, fk.get("referred_table", ""), remote))
                tables.append(TableMeta(name=name, columns=tuple(cols),
                                        primary_key=pk, foreign_keys=tuple(fks)))
            return SchemaMetadata(tables=tuple(tables))
        except DataSourceError:
            raise
        except Exception as exc:
            raise DataSourceError("unreachable", str(exc)) from None

    def execute(self, sql: str, row_limit: int | None = None) -> ResultTable:
        _require_validated(sql)
        limit = row_limit or self.config.row_limit
        try:
            with self.engine.connect() as conn:
                trans = conn.begin()
                try:
                    cur = conn.exec_driver_sql(sql)
                    names = list(cur.keys())
                    fetched = cur.fetchmany(limit + 1)
                finally:
                    trans.rollback()
        except Exception as exc:
            raise _map_engine_error(exc) from None
        rows = [tuple(r) for r in fetched[:limit]]
        return result_table_from_cursor(names, rows,
                                        truncated=len(fetched) > limit)


def _require_validated(sql: str) -> None:
    verdict = sqlguard.validate(sql)
    if not verdict.accepted:
        raise ValidationRejected(verdict.reason.value, verdict.detail,
                                 verdict=verdict)


def _map_sqlite_error(exc: sqlite3.Error) -> ExecutionError:
    msg = str(exc)
    lower = msg.lower()
    if "interrupt" in lower:
        return ExecutionError("timeout", msg)
    if "no such table" in lower or "no such column" in lower:
        return ExecutionError("missing-relation", msg)
    if "syntax error" in lower or "unrecognized token" in lower \
            or "incomplete input" in lower:
        return ExecutionError("syntax", msg)
    return ExecutionError("type-error", msg)


def _map_engine_error(exc: Exception) -> ExecutionError:
    msg = str(getattr(exc, "orig", exc))
    lower = msg.lower()
    if "timeout" in lower or "interrupt" in lower or "canceling" in lower:
        return ExecutionError("timeout", msg)
    if "no such table" in lower or "no such column" in lower \
            or "does not exist" in lower or "undefined" in lower \
            or "unknown column" in lower or "unknown table" in lower:
        return ExecutionError("missing-relation", msg)
    if "syntax" in lower:
        return ExecutionError("syntax", msg)
    return ExecutionError("type-error", msg)


# --------------------------------------------------------------------------
# Registry

class DataSourceRegistry:
    """Registered handles keyed by id; registration is serialized."""

    def __init__(self):
        self._handles: dict[str, DataSourceHandle] = {}
        self._lock = threading.Lock()

    def register(self, config: DataSourceConfig) -> DataSourceHandle:
        with self._lock:
            if config.id in self._handles:
                raise DataSourceError("duplicate-id",
                                      f"data source {config.id!r} already registered")
            handle = self._open(config)
            self._handles[config.id] = handle
            return handle

    def _open(self, config: DataSourceConfig) -> DataSourceHandle:
        if config.kind is SourceKind.EMBEDDED_FILE:
            if not Path(config.location).exists():
                raise DataSourceError("unreachable",
                                      f"no such file: {config.location}")
            return SqliteHandle(config, config.location)
        if config.kind is SourceKind.CSV:
            instance = ingest_csv(config.location)
            return SqliteHandle(config, instance.path)
        if config.kind is SourceKind.NETWORKED:
            return SqlAlchemyHandle(config)
        raise DataSourceError("parse-failure", f"unknown kind {config.kind!r}")

    def get(self, source_id: str) -> DataSourceHandle:
        handle = self._handles.get(source_id)
        if handle is None:
            raise DataSourceError("unknown-id",
                                  f"data source {source_id!r} is not registered")
        return handle

    def ids(self) -> list[str]:
        return sorted(self._handles)

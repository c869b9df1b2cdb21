"""HTTP service: data sources, sessions, autocompletion, templates.

Query sessions run asynchronously on a worker pool and are observed through
polling; every observer update swaps an immutable record snapshot into place
and writes it through to the on-disk store, so readers never see a torn
record and a restarted server serves identical documents.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import chartspec
from .config import ServerConfig
from .datasource import (
    DataSourceConfig,
    DataSourceError,
    DataSourceRegistry,
    SourceKind,
)
from .errors import (
    ExecutionError,
    MirrorError,
    SessionStateError,
    TemplateError,
    ValidationRejected,
)
from .orchestrator import Orchestrator, QuerySession
from .prompting import PromptTemplate, TemplateKind, autocomplete, default_template
from .providers import Provider
from .store import SessionStore, session_to_dict

__all__ = ["MirrorService", "create_app"]


class MirrorService:
    """Shared state behind the HTTP surface; usable directly in tests."""

    def __init__(self, config: ServerConfig, provider: Provider | None = None):
        self.config = config
        self.registry = DataSourceRegistry()
        self.store = SessionStore(config.store_path)
        self.provider = provider or config.provider.build()
        self.orchestrator = Orchestrator(
            self.provider,
            max_retries=config.max_retries,
            max_chart_retries=config.max_chart_retries,
            base_params=config.base_params(),
            prompt_row_cap=config.prompt_row_cap,
            chart_row_cap=config.chart_row_cap,
        )
        self.sessions: dict[str, QuerySession] = {}
        self.records: dict[str, dict] = {}
        self.template_overrides: dict[tuple[str, TemplateKind], PromptTemplate] = {}
        self.session_meta: dict[str, dict] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._state_lock = threading.Lock()
        self.pool = ThreadPoolExecutor(max_workers=8)
        for ds in config.datasources:
            self.registry.register(ds)

    # -- data sources ---------------------------------------------------

    def register_datasource(self, config: DataSourceConfig) -> str:
        return self.registry.register(config).id

    def schema(self, datasource_id: str) -> dict:
        handle = self.registry.get(datasource_id)
        meta = handle.introspect()
        return {
            "fingerprint": meta.fingerprint,
            "tables": [
                {
                    "name": t.name,
                    "columns": [
                        {"name": c[0], "sql_type": c[1], "nullable": c[2]}
                        for c in t.columns
                    ],
                    "primary_key": list(t.primary_key),
                    "foreign_keys": [
                        {"column": fk[0], "foreign_table": fk[1],
                         "foreign_column": fk[2]}
                        for fk in t.foreign_keys
                    ],
                }
                for t in meta.tables
            ],
        }

    # -- templates --------------------------------------------------------

    def templates_for(self, datasource_id: str | None) -> dict[TemplateKind, PromptTemplate]:
        out = {}
        for kind in TemplateKind:
            override = self.template_overrides.get((datasource_id or "", kind))
            out[kind] = override or default_template(kind)
        return out

    def set_template(self, datasource_id: str, template: PromptTemplate) -> None:
        self.template_overrides[(datasource_id, template.kind)] = template

    # -- sessions ---------------------------------------------------------

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._state_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _observer(self, session: QuerySession):
        record = session_to_dict(session)
        record.update(self.session_meta.get(session.id, {}))
        self.records[session.id] = record
        self.store.put(record)

    def start_query(self, datasource_id: str, question: str,
                    template_id: str | None = None) -> dict:
        handle = self.registry.get(datasource_id)
        session = self.orchestrator.new_session(datasource_id, question)
        templates = self.templates_for(datasource_id)
        if template_id is not None:
            for kind in TemplateKind:
                override = self.template_overrides.get((datasource_id, kind))
                if override is not None and override.id == template_id:
                    templates[kind] = override
        meta = handle.introspect()
        self.session_meta[session.id] = {
            "schema_fingerprint": meta.fingerprint,
            "template_ids": {k.value: t.id for k, t in templates.items()},
        }
        with self._state_lock:
            self.sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        self._observer(session)

        def work():
            with self._lock_for(session.id):
                try:
                    self.orchestrator.run_query(
                        handle, question, templates,
                        session=session, observer=self._observer)
                except Exception as exc:
                    session.last_error = str(exc)
                    self._observer(session)

        self.pool.submit(work)
        return self.records[session.id]

    def get_record(self, session_id: str, debug: bool = False) -> dict:
        record = self.records.get(session_id) or self.store.get(session_id)
        if record is None:
            raise KeyError(session_id)
        return record if debug else _strip_debug(record)

    def _live_session(self, session_id: str) -> QuerySession:
        session = self.sessions.get(session_id)
        if session is None:
            record = self.store.get(session_id)
            if record is None:
                raise KeyError(session_id)
            from .store import session_from_dict
            session = session_from_dict(record)
            self.session_meta.setdefault(session_id, {
                k: record[k] for k in ("schema_fingerprint", "template_ids")
                if k in record})
            with self._state_lock:
                self.sessions[session_id] = session
        return session

    def rerun_sql(self, session_id: str, sql: str) -> dict:
        session = self._live_session(session_id)
        handle = self.registry.get(session.datasource_id)
        templates = self.templates_for(session.datasource_id)
        with self._lock_for(session_id):
            self.orchestrator.rerun_sql(session, handle, sql, templates,
                                        observer=self._observer)
        return self.records[session_id]

    def edit_with_instruction(self, session_id: str, instruction: str) -> dict:
        session = self._live_session(session_id)
        handle = self.registry.get(session.datasource_id)
        templates = self.templates_for(session.datasource_id)
        with self._lock_for(session_id):
            self.orchestrator.edit_with_instruction(
                session, handle, instruction, templates,
                observer=self._observer)
        return self.records[session_id]

    def autocomplete(self, datasource_id: str, text: str) -> list[dict]:
        handle = self.registry.get(datasource_id)
        meta = handle.introspect()
        return [
            {"completion": s.completion, "kind": s.kind,
             "source_table": s.source_table}
            for s in autocomplete(meta, text)
        ]

    def shutdown(self):
        self.pool.shutdown(wait=True)


def _strip_debug(record: dict) -> dict:
    out = json.loads(json.dumps(record))
    for key in ("attempts", "edit_attempts"):
        for attempt in out.get(key) or []:
            attempt.pop("prompt_text", None)
            attempt.pop("raw_output", None)
    return out


def _with_chart_document(record: dict) -> dict:
    chart = record.get("chart")
    if chart:
        from .store import chart_from_dict
        record = dict(record)
        record["chart_document"] = json.loads(
            chartspec.emit(chart_from_dict(chart)))
    return record


def create_app(config: ServerConfig, provider: Provider | None = None,
               service: MirrorService | None = None) -> FastAPI:
    service = service or MirrorService(config, provider)
    app = FastAPI(title="mirror", version="0.1.0")
    app.state.service = service

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    if config.bearer_token:
        @app.middleware("http")
        async def check_token(request: Request, call_next):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {config.bearer_token}":
                return JSONResponse({"reason": "unauthorized"}, status_code=401)
            return await call_next(request)

    @app.exception_handler(DataSourceError)
    async def _ds_error(_request, exc: DataSourceError):
        status = 404 if exc.reason == "unknown-id" else 400
        return JSONResponse({"reason": exc.reason, "message": exc.message},
                            status_code=status)

    @app.exception_handler(ValidationRejected)
    async def _rejected(_request, exc: ValidationRejected):
        return JSONResponse({"reason": exc.reason, "message": exc.message},
                            status_code=422)

    @app.exception_handler(ExecutionError)
    async def _exec_error(_request, exc: ExecutionError):
        return JSONResponse({"reason": exc.reason, "message": exc.message},
                            status_code=400)

    @app.exception_handler(TemplateError)
    async def _template_error(_request, exc: TemplateError):
        return JSONResponse({"reason": exc.reason, "message": exc.message},
                            status_code=422)

    @app.exception_handler(SessionStateError)
    async def _state_error(_request, exc: SessionStateError):
        return JSONResponse({"reason": exc.reason, "message": exc.message},
                            status_code=409)

    @app.exception_handler(MirrorError)
    async def _mirror_error(_request, exc: MirrorError):
        return JSONResponse({"reason": exc.reason, "message": exc.message},
                            status_code=500)

    @app.post("/api/datasources", status_code=201)
    async def register_datasource(request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("file")
            source_id = form.get("id")
            if upload is None or not source_id:
                raise HTTPException(400, detail="multipart needs 'id' and 'file'")
            import tempfile
            with tempfile.NamedTemporaryFile(suffix=".csv", delete=False) as fh:
                fh.write(await upload.read())
                path = fh.name
            stem = (upload.filename or "table").rsplit("/", 1)[-1]
            if stem.lower().endswith(".csv"):
                stem = stem[:-4]
            from .datasource import ingest_csv
            instance = ingest_csv(path, stem)
            config_obj = DataSourceConfig(
                id=str(source_id), kind=SourceKind.EMBEDDED_FILE,
                location=instance.path,
                row_limit=service.config.row_limit,
                timeout_s=service.config.query_timeout_s)
            return {"id": service.register_datasource(config_obj)}
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(400, detail="body must be JSON or multipart") from None
        try:
            config_obj = DataSourceConfig(
                id=body["id"],
                kind=SourceKind(body["kind"]),
                location=body["location"],
                read_only=body.get("read_only", True),
                row_limit=body.get("row_limit", service.config.row_limit),
                timeout_s=body.get("timeout_s", service.config.query_timeout_s),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, detail=str(exc)) from None
        return {"id": service.register_datasource(config_obj)}

    @app.get("/api/datasources")
    def list_datasources():
        return {"ids": service.registry.ids()}

    @app.get("/api/datasources/{datasource_id}/schema")
    def get_schema(datasource_id: str):
        return service.schema(datasource_id)

    @app.post("/api/query", status_code=202)
    def post_query(body: dict):
        question = (body.get("question") or "").strip()
        if not question:
            raise HTTPException(422, detail="question must be non-empty")
        datasource_id = body.get("datasource_id") or ""
        record = service.start_query(datasource_id, question,
                                     body.get("template_id"))
        return {"id": record["id"], "status": record["status"]}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str, debug: bool = False):
        try:
            record = service.get_record(session_id, debug=debug)
        except KeyError:
            raise HTTPException(404, detail="unknown session") from None
        return _with_chart_document(record)

    @app.post("/api/sessions/{session_id}/sql")
    def post_sql(session_id: str, body: dict):
        sql = body.get("sql") or ""
        if not sql.strip():
            raise HTTPException(422, detail="sql must be non-empty")
        try:
            record = service.rerun_sql(session_id, sql)
        except KeyError:
            raise HTTPException(404, detail="unknown session") from None
        return _with_chart_document(_strip_debug(record))

    @app.post("/api/sessions/{session_id}/edit")
    def post_edit(session_id: str, body: dict):
        instruction = (body.get("instruction") or "").strip()
        if not instruction:
            raise HTTPException(422, detail="instruction must be non-empty")
        try:
            record = service.edit_with_instruction(session_id, instruction)
        except KeyError:
            raise HTTPException(404, detail="unknown session") from None
        return _with_chart_document(_strip_debug(record))

    @app.get("/api/autocomplete")
    def get_autocomplete(datasource: str, q: str = ""):
        return {"suggestions": service.autocomplete(datasource, q)}

    @app.get("/api/templates")
    def get_templates(datasource: str = ""):
        templates = service.templates_for(datasource)
        return {
            "templates": [
                {"id": t.id, "kind": k.value, "body": t.body,
                 "instructions": t.instructions}
                for k, t in templates.items()
            ]
        }

    @app.put("/api/templates")
    def put_template(body: dict):
        try:
            kind = TemplateKind(body.get("kind") or "")
        except ValueError:
            raise HTTPException(422, detail="unknown template kind") from None
        template = PromptTemplate(
            id=body.get("id") or f"custom-{kind.value}",
            kind=kind,
            body=body.get("body") or "",
            instructions=body.get("instructions") or "",
        )
        service.set_template(body.get("datasource_id") or "", template)
        return {"id": template.id, "kind": kind.value}

    return app

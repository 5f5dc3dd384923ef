"""Local HTTP control service for the browser companion UI.

Exposes the pipeline over loopback: upload a file, review and adjust the
column mapping, define the extraction schema and prompts, start/steer runs,
watch live progress over server-sent events, edit results inline, and
export. All state is held in a single in-process session; the engine run
executes on a background thread while the control endpoints stay live.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, UploadFile
from fastapi.responses import HTMLResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import engine as eng
from . import export as exp
from .errors import LitxtractError, NoCredentialError, StaleCheckpointError
from .ingest import parse_csv, parse_workbook
from .mapping import FieldCategory, FieldMapping, default_rules, map_columns
from .providers import RequestSettings, chat, default_profiles
from .salvage import extract_json_block, validate
from .schema import (
    ExtractionField,
    PromptBundle,
    default_user_template,
    generate_system_prompt,
    interpolate,
    preset,
    unknown_placeholders,
)
from .store import ConfigStore


class SettingsDoc(BaseModel):
    provider: str = "custom"
    base_url: str | None = None
    model: str = ""
    api_key: str | None = None
    temperature: float | None = Field(default=None, ge=0, le=2)
    concurrency: int = Field(default=3, ge=1, le=10)
    interval_ms: int = Field(default=0, ge=0, le=10000)
    max_retries: int = Field(default=3, ge=0)
    retry_delay_ms: int = Field(default=1000, ge=0)
    typed_annotations: bool = False


class MappingDoc(BaseModel):
    entries: dict[str, str]


class SchemaFieldDoc(BaseModel):
    name: str
    description: str = ""
    type: str = "text"
    required: bool = True


class SchemaDoc(BaseModel):
    preset: str | None = None
    fields: list[SchemaFieldDoc] | None = None
    user_template: str | None = None


class RunRequest(BaseModel):
    resume: bool = True


class CellEdit(BaseModel):
    name: str
    value: str


class PromptTestRequest(BaseModel):
    row_index: int = 0


class Session:
    """All mutable service state; mutations are serialized by one lock."""

    def __init__(self, store: ConfigStore):
        self.lock = threading.RLock()
        self.store = store
        self.table = None
        self.mapping = FieldMapping(entries=[])
        self.fields: list[ExtractionField] = []
        self.user_template: str = ""
        self.settings = SettingsDoc()
        self.runner: eng.BatchRunner | None = None
        self.run_thread: threading.Thread | None = None
        self.results: dict[int, eng.RecordResult] = {}
        self.subscribers: list[queue.Queue] = []

    def publish(self, event: dict):
        with self.lock:
            listeners = list(self.subscribers)
        for q in listeners:
            q.put(event)

    def run_active(self) -> bool:
        return self.run_thread is not None and self.run_thread.is_alive()


def _result_doc(result: eng.RecordResult) -> dict:
    return asdict(result)


def _progress_doc(progress: eng.TaskProgress) -> dict:
    return asdict(progress)


def create_app(store: ConfigStore | None = None,
               frontend_dir: str | Path | None = None) -> FastAPI:
    store = store or ConfigStore()
    app = FastAPI(title="litxtract control service")
    session = Session(store)
    app.state.session = session

    def table_or_404():
        if session.table is None:
            raise HTTPException(status_code=409, detail="no file uploaded yet")
        return session.table

    def current_fields():
        if not session.fields:
            raise HTTPException(status_code=409, detail="no extraction schema defined")
        return session.fields

    def resolve_template() -> str:
        if session.user_template:
            return session.user_template
        return default_user_template(session.mapping, table_or_404().columns)

    def resolve_bundle() -> PromptBundle:
        system = generate_system_prompt(current_fields(),
                                        session.settings.typed_annotations)
        template = resolve_template()
        unknown = unknown_placeholders(template, table_or_404().columns)
        if unknown:
            raise HTTPException(
                status_code=409,
                detail=f"template references unknown columns: {unknown}")
        return PromptBundle(system_prompt=system, user_template=template)

    def resolve_profile():
        profiles = default_profiles()
        if session.settings.provider not in profiles:
            raise HTTPException(status_code=409,
                                detail=f"unknown provider {session.settings.provider!r}")
        profile = profiles[session.settings.provider]
        if session.settings.base_url:
            profile.base_url = session.settings.base_url
        return profile

    def resolve_request_settings() -> RequestSettings:
        s = session.settings
        model = s.model or (resolve_profile().models[0] if resolve_profile().models else "")
        if not model:
            raise HTTPException(status_code=409, detail="no model configured")
        return RequestSettings(
            model=model,
            temperature=s.temperature,
            concurrency=s.concurrency,
            interval_ms=s.interval_ms,
            max_retries=s.max_retries,
            retry_delay_ms=s.retry_delay_ms,
        )

    def resolve_api_key() -> str:
        try:
            return store.load_credential(session.settings.provider)
        except NoCredentialError:
            raise HTTPException(
                status_code=409,
                detail=f"no API key stored for provider {session.settings.provider!r}")

    def single_call(row_index: int) -> eng.RecordResult:
        table = table_or_404()
        if not 0 <= row_index < len(table.rows):
            raise HTTPException(status_code=404, detail=f"no row {row_index}")
        bundle = resolve_bundle()
        profile = resolve_profile()
        settings = resolve_request_settings()
        api_key = resolve_api_key()
        user_prompt = interpolate(bundle.user_template, table.rows[row_index])

        def call() -> eng.RecordResult:
            exchange = None
            try:
                exchange = chat(profile, settings, bundle.system_prompt, user_prompt, api_key)
                raw = extract_json_block(exchange.response_text)
                parsed = validate(json.loads(raw), session.fields)
            except LitxtractError as err:
                raise eng.ExtractionFailure(f"{type(err).__name__}: {err}", exchange) from err
            return eng.RecordResult(
                row_index=row_index,
                extracted=parsed.values,
                raw_response=exchange.response_text,
                input_chars=exchange.input_chars,
                output_chars=exchange.output_chars,
            )

        result = eng.attempt_with_retry(call, settings.max_retries,
                                        settings.retry_delay_ms, row_index=row_index)
        assert result is not None
        return result

    # --- configuration ---------------------------------------------------------

    @app.get("/providers")
    def providers():
        return {
            pid: {"base_url": p.base_url, "models": p.models, "mutation": p.mutation}
            for pid, p in default_profiles().items()
        }

    @app.get("/settings")
    def get_settings():
        doc = session.settings.model_dump()
        doc.pop("api_key", None)
        doc["has_credential"] = store.has_credential(session.settings.provider)
        return doc

    @app.put("/settings")
    def put_settings(doc: SettingsDoc):
        with session.lock:
            api_key = doc.api_key
            doc.api_key = None
            session.settings = doc
            if api_key:
                store.store_credential(doc.provider, api_key)
            persisted = doc.model_dump()
            persisted.pop("api_key", None)
            store.save_settings(persisted)
        return get_settings()

    @app.post("/clear")
    def clear():
        with session.lock:
            if session.run_active():
                raise HTTPException(status_code=409, detail="a run is in progress")
            store.clear_all_data()
            session.results.clear()
            session.runner = None
        return {"cleared": True}

    # --- data upload and mapping -------------------------------------------------

    @app.post("/upload")
    async def upload(file: UploadFile):
        data = await file.read()
        name = file.filename or "upload"
        try:
            if name.lower().endswith((".xlsx", ".xlsm")) or data[:2] == b"PK":
                table = parse_workbook(data, source_name=name)
            else:
                table = parse_csv(data, source_name=name)
        except LitxtractError as err:
            raise HTTPException(status_code=422, detail=str(err))
        with session.lock:
            if session.run_active():
                raise HTTPException(status_code=409, detail="a run is in progress")
            session.table = table
            session.mapping = map_columns(table.columns, default_rules())
            session.results.clear()
            session.runner = None
        return {
            "source_name": table.source_name,
            "columns": table.columns,
            "row_count": len(table.rows),
            "mapping": session.mapping.as_dict(),
            "preview": table.rows[:5],
        }

    @app.get("/table")
    def get_table():
        table = table_or_404()
        return {
            "source_name": table.source_name,
            "columns": table.columns,
            "row_count": len(table.rows),
            "preview": table.rows[:5],
        }

    @app.get("/mapping")
    def get_mapping():
        return {"entries": session.mapping.as_dict()}

    @app.put("/mapping")
    def put_mapping(doc: MappingDoc):
        table = table_or_404()
        entries = []
        for target, column in doc.entries.items():
            if column not in table.columns:
                raise HTTPException(status_code=422,
                                    detail=f"unknown column {column!r}")
            try:
                entries.append((column, FieldCategory(target)))
            except ValueError:
                raise HTTPException(status_code=422,
                                    detail=f"unknown category {target!r}")
        with session.lock:
            session.mapping = FieldMapping(entries=entries)
        return {"entries": session.mapping.as_dict()}

    # --- schema and prompts -----------------------------------------------------

    @app.get("/schema")
    def get_schema():
        return {
            "fields": [
                {"name": f.name, "description": f.description,
                 "type": f.data_type, "required": f.required}
                for f in session.fields
            ],
            "user_template": session.user_template,
        }

    @app.put("/schema")
    def put_schema(doc: SchemaDoc):
        with session.lock:
            if doc.preset is not None:
                try:
                    session.fields = preset(doc.preset)
                except LitxtractError as err:
                    raise HTTPException(status_code=422, detail=str(err))
            elif doc.fields is not None:
                try:
                    session.fields = [
                        ExtractionField(name=f.name, description=f.description,
                                        data_type=f.type, required=f.required)
                        for f in doc.fields
                    ]
                except ValueError as err:
                    raise HTTPException(status_code=422, detail=str(err))
            if doc.user_template is not None:
                session.user_template = doc.user_template
        return get_schema()

    @app.post("/prompt/preview")
    def prompt_preview(req: PromptTestRequest | None = None):
        table = table_or_404()
        bundle = resolve_bundle()
        row_index = req.row_index if req else 0
        if not 0 <= row_index < len(table.rows):
            raise HTTPException(status_code=404, detail=f"no row {row_index}")
        return {
            "system_prompt": bundle.system_prompt,
            "user_prompt": interpolate(bundle.user_template, table.rows[row_index]),
        }

    @app.post("/prompt/test")
    def prompt_test(req: PromptTestRequest):
        result = single_call(req.row_index)
        return _result_doc(result)

    # --- run control ---------------------------------------------------------

    @app.post("/run")
    def run(req: RunRequest | None = None):
        req = req or RunRequest()
        with session.lock:
            if session.run_active():
                raise HTTPException(status_code=409, detail="a run is already in progress")
            table = table_or_404()
            bundle = resolve_bundle()
            profile = resolve_profile()
            settings = resolve_request_settings()
            api_key = resolve_api_key()

            digest = eng.config_digest(session.fields, bundle.user_template,
                                       settings.model, profile.id)
            task_id = eng.table_task_id(table)
            resume_from = None
            if req.resume:
                try:
                    resume_from = eng.load_checkpoint(store.checkpoints_dir,
                                                      task_id, digest)
                except StaleCheckpointError:
                    resume_from = None

            def on_record(result: eng.RecordResult):
                session.results[result.row_index] = result
                progress = session.runner.progress if session.runner else eng.TaskProgress()
                session.publish({
                    "type": "record",
                    "row_index": result.row_index,
                    "status": result.status,
                    "attempts": result.attempts,
                    "processed": progress.processed,
                    "succeeded": progress.succeeded,
                    "failed": progress.failed,
                    "total": progress.total,
                })

            callbacks = eng.EngineCallbacks(
                on_record=on_record,
                on_state=lambda s: session.publish({"type": "state", "state": s}),
                on_warning=lambda m: session.publish({"type": "warning", "message": m}),
            )

            def request_fn(system: str, user: str):
                return chat(profile, settings, system, user, api_key)

            runner = eng.BatchRunner(
                table, session.mapping, session.fields, bundle, settings, request_fn,
                callbacks=callbacks, checkpoints_dir=store.checkpoints_dir,
                task_id=task_id, cfg_digest=digest, resume_from=resume_from,
            )
            session.runner = runner
            session.results = {r.row_index: r for r in runner.results()}

            thread = threading.Thread(target=runner.run, daemon=True,
                                      name="litxtract-run")
            session.run_thread = thread
            thread.start()
        return {"task_id": task_id, "total": len(table.rows),
                "resumed": len(session.results)}

    @app.post("/pause")
    def pause():
        if session.runner is None:
            raise HTTPException(status_code=409, detail="no run in progress")
        session.runner.pause()
        return _progress_doc(session.runner.progress)

    @app.post("/resume")
    def resume():
        if session.runner is None:
            raise HTTPException(status_code=409, detail="no run in progress")
        session.runner.resume()
        return _progress_doc(session.runner.progress)

    @app.post("/cancel")
    def cancel():
        if session.runner is None:
            raise HTTPException(status_code=409, detail="no run in progress")
        session.runner.cancel()
        return _progress_doc(session.runner.progress)

    @app.get("/progress")
    def progress():
        if session.runner is None:
            return _progress_doc(eng.TaskProgress(
                total=len(session.table.rows) if session.table else 0))
        return _progress_doc(session.runner.progress)

    @app.get("/events")
    def events():
        q: queue.Queue = queue.Queue()
        with session.lock:
            session.subscribers.append(q)

        def stream():
            try:
                while True:
                    try:
                        event = q.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps(event, ensure_ascii=False)}\n\n"
            finally:
                with session.lock:
                    if q in session.subscribers:
                        session.subscribers.remove(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    # --- results ---------------------------------------------------------------

    @app.get("/results")
    def results():
        with session.lock:
            ordered = sorted(session.results.values(), key=lambda r: r.row_index)
            return {"results": [_result_doc(r) for r in ordered]}

    @app.post("/results/{row_index}/retry")
    def retry_row(row_index: int):
        table = table_or_404()
        if not 0 <= row_index < len(table.rows):
            raise HTTPException(status_code=404, detail=f"no row {row_index}")
        if session.run_active():
            raise HTTPException(status_code=409, detail="a run is in progress")
        if row_index not in session.results:
            raise HTTPException(status_code=409,
                                detail=f"row {row_index} has not been processed")
        result = single_call(row_index)
        with session.lock:
            session.results[row_index] = result
            _rewrite_checkpoint()
        session.publish({"type": "record", "row_index": row_index,
                         "status": result.status, "attempts": result.attempts})
        return _result_doc(result)

    @app.put("/results/{row_index}/field")
    def edit_cell(row_index: int, edit: CellEdit):
        table = table_or_404()
        if not 0 <= row_index < len(table.rows):
            raise HTTPException(status_code=404, detail=f"no row {row_index}")
        if edit.name not in {f.name for f in session.fields}:
            raise HTTPException(status_code=422,
                                detail=f"unknown extraction field {edit.name!r}")
        with session.lock:
            result = session.results.get(row_index)
            if result is None or result.status not in (eng.SUCCESS, eng.FAILED):
                raise HTTPException(status_code=409,
                                    detail=f"row {row_index} is still pending")
            result.extracted[edit.name] = edit.value
            if result.status == eng.FAILED:
                result.status = eng.SUCCESS
                result.error = None
            _rewrite_checkpoint()
        return _result_doc(result)

    def _rewrite_checkpoint():
        # Inline edits must survive a service restart, so they are folded
        # into the checkpoint file immediately.
        if session.runner is None or session.table is None:
            return
        snapshot = eng.Checkpoint(
            task_id=session.runner.task_id,
            config_digest=session.runner.cfg_digest,
            results=sorted(
                (r for r in session.results.values()
                 if r.status in (eng.SUCCESS, eng.FAILED)),
                key=lambda r: r.row_index),
            saved_at=datetime.now(timezone.utc).isoformat(),
        )
        try:
            eng.save_checkpoint(store.checkpoints_dir, snapshot)
        except OSError:
            pass

    # --- export -----------------------------------------------------------------

    @app.get("/export")
    def do_export(mode: str = exp.MODE_ALL_COLUMNS, format: str = exp.FORMAT_CSV,
                  include_status: bool = False):
        table = table_or_404()
        try:
            job = exp.ExportJob(mode=mode, format=format, include_status=include_status)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err))
        ordered = sorted(session.results.values(), key=lambda r: r.row_index)
        try:
            payload = exp.export(table, ordered, current_fields(), job)
        except LitxtractError as err:
            raise HTTPException(status_code=409, detail=str(err))
        stem = Path(table.source_name).stem or "export"
        filename = f"{stem}_extracted.{format}"
        return Response(
            content=payload,
            media_type=exp.MEDIA_TYPES[format],
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    # --- companion UI -----------------------------------------------------------

    if frontend_dir is not None and Path(frontend_dir, "index.html").is_file():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True),
                  name="ui")

        @app.get("/", response_class=HTMLResponse, include_in_schema=False)
        def root():
            return '<meta http-equiv="refresh" content="0; url=/ui/">'

    return app

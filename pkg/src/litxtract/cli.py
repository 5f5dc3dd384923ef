"""Command-line interface: headless extraction plus utility commands."""

from __future__ import annotations

import json
import os
import signal
import sys
import threading
from pathlib import Path

import click

from . import engine as eng
from . import export as exp
from .errors import LitxtractError, NoCredentialError, StaleCheckpointError
from .ingest import parse_csv, parse_workbook
from .mapping import default_rules, map_columns, rules_from_json
from .providers import RequestSettings, chat, default_profiles
from .schema import (
    PromptBundle,
    default_user_template,
    generate_system_prompt,
    preset,
    schema_from_json,
    unknown_placeholders,
)
from .store import ConfigStore

API_KEY_ENV = "LITXTRACT_API_KEY"

EXIT_OK = 0
EXIT_SOME_FAILED = 1
EXIT_USAGE = 2
EXIT_CANCELLED = 3


def _fail(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(EXIT_USAGE)


def _load_table(path: Path):
    data = path.read_bytes()
    if path.suffix.lower() in (".xlsx", ".xlsm") or data[:2] == b"PK":
        return parse_workbook(data, source_name=path.name)
    return parse_csv(data, source_name=path.name)


def _load_fields(schema_path: str | None, preset_name: str | None):
    if schema_path and preset_name:
        raise _fail("use either --schema or --preset, not both")
    if schema_path:
        fields, template = schema_from_json(Path(schema_path).read_text(encoding="utf-8"))
        if not fields:
            raise _fail(f"schema file {schema_path} defines no fields")
        return fields, template
    if preset_name:
        return preset(preset_name), ""
    raise _fail("an extraction schema is required: pass --schema FILE or --preset NAME")


@click.group()
def main():
    """Schema-guided batch information extraction for literature exports."""


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="CSV or xlsx export to process.")
@click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON schema document with extraction fields.")
@click.option("--preset", "preset_name", type=click.Choice(["paper_info", "lit_review"]),
              help="Built-in extraction schema.")
@click.option("--template", help="User prompt template with {{column}} placeholders; "
                                 "defaults to one built from the detected mapping.")
@click.option("--typed-annotations", is_flag=True,
              help="Annotate schema fields with their declared types instead of string.")
@click.option("--provider", type=click.Choice(["deepseek", "openai", "qwen", "zhipu", "custom"]),
              default="custom", show_default=True)
@click.option("--base-url", help="Override the provider base URL (custom endpoints).")
@click.option("--model", help="Model name; defaults to the provider's first model.")
@click.option("--temperature", type=float)
@click.option("--concurrency", type=click.IntRange(1, 10), default=3, show_default=True)
@click.option("--interval-ms", type=click.IntRange(0, 10000), default=0, show_default=True)
@click.option("--retries", type=click.IntRange(0, 10), default=3, show_default=True)
@click.option("--retry-delay-ms", type=click.IntRange(0, 60000), default=1000, show_default=True)
@click.option("--timeout-s", type=float, default=120.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path),
              help="Output file; defaults next to the input.")
@click.option("--format", "format_", type=click.Choice(["csv", "json", "xlsx"]),
              default="csv", show_default=True)
@click.option("--mode", type=click.Choice(["all_columns", "extracted_only"]),
              default="all_columns", show_default=True)
@click.option("--include-status", is_flag=True, help="Add status/error columns.")
@click.option("--resume", is_flag=True, help="Resume from the task checkpoint.")
@click.option("--api-key-env", default=API_KEY_ENV, show_default=True,
              help="Environment variable holding the API key.")
@click.option("--quiet", is_flag=True, help="Suppress the progress line.")
def extract(input_path, schema_path, preset_name, template, typed_annotations,
            provider, base_url, model, temperature, concurrency, interval_ms,
            retries, retry_delay_ms, timeout_s, out_path, format_, mode,
            include_status, resume, api_key_env, quiet):
    """Run the full pipeline: ingest, map, extract, export."""
    store = ConfigStore()
    try:
        table = _load_table(input_path)
    except LitxtractError as err:
        raise _fail(str(err))
    mapping = map_columns(table.columns, default_rules())

    fields, schema_template = _load_fields(schema_path, preset_name)
    user_template = template or schema_template or default_user_template(mapping, table.columns)
    unknown = unknown_placeholders(user_template, table.columns)
    if unknown:
        raise _fail(f"template references unknown columns: {', '.join(unknown)}")
    bundle = PromptBundle(
        system_prompt=generate_system_prompt(fields, typed_annotations),
        user_template=user_template,
    )

    profiles = default_profiles()
    profile = profiles[provider]
    if base_url:
        profile.base_url = base_url
    resolved_model = model or (profile.models[0] if profile.models else "")
    if not resolved_model:
        raise _fail("no model configured: pass --model")
    settings = RequestSettings(
        model=resolved_model,
        temperature=temperature,
        concurrency=concurrency,
        interval_ms=interval_ms,
        max_retries=retries,
        retry_delay_ms=retry_delay_ms,
    )

    api_key = os.environ.get(api_key_env)
    if not api_key:
        try:
            api_key = store.load_credential(provider)
        except NoCredentialError:
            raise _fail(
                f"no API key: set ${api_key_env} or store one for provider {provider!r}")

    digest = eng.config_digest(fields, user_template, resolved_model, provider)
    task_id = eng.table_task_id(table)
    resume_from = None
    if resume:
        try:
            resume_from = eng.load_checkpoint(store.checkpoints_dir, task_id, digest)
        except StaleCheckpointError:
            raise _fail("checkpoint was written under a different configuration; "
                        "rerun without --resume to start fresh")
        if resume_from is not None and not quiet:
            click.echo(f"resuming: {len(resume_from.results)} records from checkpoint",
                       err=True)

    progress_lock = threading.Lock()

    def on_record(_result):
        if quiet:
            return
        progress = runner.progress
        eta = f"{progress.eta_seconds:.0f}s" if progress.eta_seconds is not None else "--"
        with progress_lock:
            click.echo(
                f"\r[{progress.processed}/{progress.total}] "
                f"ok={progress.succeeded} fail={progress.failed} "
                f"tokens={progress.token_estimate} eta={eta}   ",
                err=True, nl=False)

    def request_fn(system, user):
        return chat(profile, settings, system, user, api_key, timeout_s=timeout_s)

    runner = eng.BatchRunner(
        table, mapping, fields, bundle, settings, request_fn,
        callbacks=eng.EngineCallbacks(
            on_record=on_record,
            on_warning=lambda m: click.echo(f"\nwarning: {m}", err=True),
        ),
        checkpoints_dir=store.checkpoints_dir,
        task_id=task_id, cfg_digest=digest, resume_from=resume_from,
    )

    interrupted = {"count": 0}

    def on_sigint(_sig, _frame):
        interrupted["count"] += 1
        if interrupted["count"] == 1:
            click.echo("\ninterrupt: cancelling run (checkpoint will be saved); "
                       "press Ctrl-C again to force quit", err=True)
            runner.cancel()
        else:
            os._exit(130)

    previous_handler = signal.signal(signal.SIGINT, on_sigint)
    try:
        results = runner.run()
    finally:
        signal.signal(signal.SIGINT, previous_handler)

    if not quiet:
        click.echo("", err=True)

    progress = runner.progress
    if progress.state == eng.STATE_CANCELLED:
        click.echo(f"cancelled: {progress.processed}/{progress.total} records completed "
                   f"(checkpoint saved; rerun with --resume)", err=True)
        raise SystemExit(EXIT_CANCELLED)

    out = out_path or input_path.with_name(f"{input_path.stem}_extracted.{format_}")
    job = exp.ExportJob(mode=mode, format=format_, include_status=include_status)
    out.write_bytes(exp.export(table, results, fields, job))

    failed = [r for r in results if r.status == eng.FAILED]
    click.echo(f"done: {progress.succeeded}/{progress.total} succeeded, "
               f"{len(failed)} failed, ~{progress.token_estimate} tokens -> {out}",
               err=True)
    raise SystemExit(EXIT_SOME_FAILED if failed else EXIT_OK)


@main.command(name="map")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False),
              help="Custom mapping rules (JSON array of {patterns, target}).")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of text.")
def map_command(input_path, rules_path, as_json):
    """Print the detected column-to-category mapping for a file."""
    try:
        table = _load_table(input_path)
    except LitxtractError as err:
        raise _fail(str(err))
    rules = default_rules()
    if rules_path:
        rules = rules_from_json(Path(rules_path).read_text(encoding="utf-8"))
    mapping = map_columns(table.columns, rules)
    if as_json:
        click.echo(json.dumps(mapping.as_dict(), ensure_ascii=False, indent=2))
        return
    if not mapping.entries:
        click.echo("no columns recognized")
        return
    for column, target in mapping.entries:
        click.echo(f"{target.value:8s} <- {column}")


@main.command()
@click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--preset", "preset_name", type=click.Choice(["paper_info", "lit_review"]))
@click.option("--typed-annotations", is_flag=True)
def prompt(schema_path, preset_name, typed_annotations):
    """Print the system prompt generated for a schema."""
    fields, _ = _load_fields(schema_path, preset_name)
    click.echo(generate_system_prompt(fields, typed_annotations))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True,
              help="Bind address; keep it on loopback.")
@click.option("--port", type=int, default=8088, show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False),
              help="Directory with the built companion UI (defaults to ./frontend "
                   "when it contains index.html).")
def serve(host, port, ui_dir):
    """Start the local control service (and companion UI when available)."""
    import uvicorn

    from .service import create_app

    frontend = Path(ui_dir) if ui_dir else Path.cwd() / "frontend"
    app = create_app(frontend_dir=frontend if (frontend / "index.html").is_file() else None)
    click.echo(f"control service on http://{host}:{port} "
               f"(docs at /docs, UI at /ui when built)", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--port", type=int, default=8089, show_default=True)
@click.option("--failure-rate", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--latency", default="0", show_default=True,
              help="Response latency in ms: fixed ('30') or uniform range ('20-60').")
@click.option("--noise", type=click.Choice(["clean", "prefix_suffix", "code_fence",
                                            "double_object"]),
              default="clean", show_default=True)
def mock(port, failure_rate, seed, latency, noise):
    """Start the scriptable OpenAI-compatible mock provider."""
    from .mockserver import MockScript, serve as serve_mock

    if "-" in latency:
        lo, hi = latency.split("-", 1)
        latency_ms: int | tuple[int, int] = (int(lo), int(hi))
    else:
        latency_ms = int(latency)
    script = MockScript(failure_rate=failure_rate, seed=seed,
                        latency_ms=latency_ms, noise_mode=noise)
    handle = serve_mock(script, port=port)
    click.echo(f"mock provider on {handle.base_url} "
               f"(failure_rate={failure_rate}, seed={seed}, noise={noise})", err=True)
    try:
        signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    finally:
        handle.stop()


@main.command()
def clear():
    """Remove stored credentials, cached settings, and checkpoints."""
    store = ConfigStore()
    store.clear_all_data()
    click.echo(f"cleared local data under {store.home}")


if __name__ == "__main__":
    main()

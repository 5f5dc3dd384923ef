"""Concurrent batch extraction engine.

A fixed-size pool of worker threads drains the row queue, honoring the
configured concurrency bound and launch-to-launch interval. Control flags
support pause (in-flight records finish, nothing new launches, workers poll
at a 200 ms cadence), resume, and cancel (in-flight requests are abandoned
and their rows stay pending). Each record gets automatic retries with a
fixed delay. Completed results are checkpointed to disk every 10th record
and at the end of the run, keyed by a config digest so stale checkpoints
are never silently mixed into a changed task.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .errors import LitxtractError, StaleCheckpointError
from .ingest import Table
from .mapping import FieldCategory, FieldMapping
from .providers import ChatExchange
from .salvage import extract_json_block, validate
from .schema import ExtractionField, PromptBundle

logger = logging.getLogger(__name__)

PENDING = "pending"
RUNNING = "running"
SUCCESS = "success"
FAILED = "failed"

STATE_IDLE = "idle"
STATE_RUNNING = "running"
STATE_PAUSED = "paused"
STATE_CANCELLED = "cancelled"
STATE_DONE = "done"

PAUSE_POLL_S = 0.2
CHECKPOINT_EVERY = 10


@dataclass
class RecordResult:
    row_index: int
    status: str = PENDING
    extracted: dict = field(default_factory=dict)
    raw_response: str = ""
    error: str | None = None
    attempts: int = 0
    input_chars: int = 0
    output_chars: int = 0


@dataclass
class TaskProgress:
    total: int = 0
    processed: int = 0
    succeeded: int = 0
    failed: int = 0
    token_estimate: int = 0
    eta_seconds: float | None = None
    current_title: str | None = None
    state: str = STATE_IDLE


@dataclass
class EngineCallbacks:
    on_record: Callable[[RecordResult], None] | None = None
    on_state: Callable[[str], None] | None = None
    on_warning: Callable[[str], None] | None = None
    on_checkpoint: Callable[[int], None] | None = None


# --- accounting ---------------------------------------------------------------

def estimate_tokens(input_chars: int, output_chars: int) -> int:
    """Character-based token estimate: floor(in/4) + floor(out/4)."""
    return input_chars // 4 + output_chars // 4


def estimate_eta(elapsed_seconds: float, processed: int, total: int) -> float | None:
    """Remaining seconds from the observed processing rate; None until data."""
    if processed <= 0:
        return None
    return (total - processed) * elapsed_seconds / processed


def estimate_cost(n_records: int, avg_input_tokens: float, avg_output_tokens: float,
                  price_in_per_m: float, price_out_per_m: float) -> float:
    """Projected spend for a batch given per-million-token prices."""
    per_record = avg_input_tokens * price_in_per_m + avg_output_tokens * price_out_per_m
    return n_records * per_record / 1_000_000


# Per-million-token USD prices; input/output back-solved from published
# per-1000-paper costs at 2000 input + 500 output tokens per paper.
DEFAULT_PRICE_TABLE: dict[str, dict[str, float]] = {
    "deepseek-v4-flash": {"input_per_m": 0.14, "output_per_m": 0.20},
    "deepseek-v4-pro": {"input_per_m": 0.55, "output_per_m": 0.72},
    "qwen-turbo": {"input_per_m": 0.27, "output_per_m": 0.34},
    "qwen-max": {"input_per_m": 1.365, "output_per_m": 1.36},
    "glm-4-flash": {"input_per_m": 0.0, "output_per_m": 0.0},
}


def load_price_table(path: str | Path) -> dict[str, dict[str, float]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {
        model: {"input_per_m": float(entry["input_per_m"]),
                "output_per_m": float(entry["output_per_m"])}
        for model, entry in data.items()
    }


# --- checkpoints ---------------------------------------------------------------

@dataclass
class Checkpoint:
    task_id: str
    config_digest: str
    results: list[RecordResult]
    saved_at: str


def config_digest(fields: list[ExtractionField], user_template: str,
                  model: str, provider_id: str) -> str:
    """Digest of everything that must not change under a resumed run."""
    material = json.dumps(
        {
            "fields": [[f.name, f.description, f.data_type, f.required] for f in fields],
            "user_template": user_template,
            "model": model,
            "provider": provider_id,
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def table_task_id(table: Table) -> str:
    """Stable task identity derived from the dataset content."""
    material = json.dumps(
        {"source": table.source_name, "columns": table.columns, "rows": table.rows},
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:16]


def checkpoint_path(checkpoints_dir: str | Path, task_id: str) -> Path:
    return Path(checkpoints_dir) / f"{task_id}.json"


def save_checkpoint(checkpoints_dir: str | Path, checkpoint: Checkpoint):
    from .store import atomic_write_text

    payload = {
        "task_id": checkpoint.task_id,
        "config_digest": checkpoint.config_digest,
        "saved_at": checkpoint.saved_at,
        "results": [asdict(r) for r in checkpoint.results],
    }
    atomic_write_text(checkpoint_path(checkpoints_dir, checkpoint.task_id),
                      json.dumps(payload, ensure_ascii=False))


def load_checkpoint(checkpoints_dir: str | Path, task_id: str,
                    expected_digest: str) -> Checkpoint | None:
    """The stored checkpoint for a task, or None when there is none.

    Raises StaleCheckpointError when the stored config digest does not match
    the current configuration; resuming across a changed schema, template,
    model, or provider would silently corrupt results.
    """
    path = checkpoint_path(checkpoints_dir, task_id)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        return None
    except json.JSONDecodeError:
        return None
    if payload.get("config_digest") != expected_digest:
        raise StaleCheckpointError(
            f"checkpoint for task {task_id} was written under a different configuration")
    results = [RecordResult(**item) for item in payload.get("results", [])]
    results = [r for r in results if r.status in (SUCCESS, FAILED)]
    return Checkpoint(task_id=payload["task_id"], config_digest=payload["config_digest"],
                      results=results, saved_at=payload.get("saved_at", ""))


def find_checkpoint(checkpoints_dir: str | Path, expected_digest: str) -> Checkpoint | None:
    """Newest checkpoint in the directory whose config digest matches."""
    directory = Path(checkpoints_dir)
    if not directory.is_dir():
        return None
    best: Checkpoint | None = None
    for path in directory.glob("*.json"):
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            continue
        if payload.get("config_digest") != expected_digest:
            continue
        candidate = Checkpoint(
            task_id=payload.get("task_id", path.stem),
            config_digest=payload["config_digest"],
            results=[RecordResult(**item) for item in payload.get("results", [])],
            saved_at=payload.get("saved_at", ""),
        )
        if best is None or candidate.saved_at > best.saved_at:
            best = candidate
    return best


# --- retry -----------------------------------------------------------------

class ExtractionFailure(Exception):
    """One failed extraction attempt; may carry the HTTP exchange."""

    def __init__(self, message: str, exchange: ChatExchange | None = None):
        super().__init__(message)
        self.exchange = exchange


def _abortable_sleep(seconds: float, should_abort: Callable[[], bool] | None) -> bool:
    """Sleep up to `seconds`; True when aborted early."""
    deadline = time.monotonic() + seconds
    while True:
        if should_abort is not None and should_abort():
            return True
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return False
        time.sleep(min(remaining, 0.05))


def attempt_with_retry(call: Callable[[], RecordResult], max_retries: int,
                       retry_delay_ms: int, *, row_index: int = 0,
                       should_abort: Callable[[], bool] | None = None) -> RecordResult | None:
    """Invoke `call` up to 1 + max_retries times; first success wins.

    Parse and validation failures are retried the same as transport errors:
    a reprompted model may well produce compliant output. Returns None when
    aborted via `should_abort` (the record stays pending). After the final
    failure the result carries the last error and the attempt count.
    """
    last_error: str | None = None
    last_exchange: ChatExchange | None = None
    attempts = 0
    for attempt in range(1, max_retries + 2):
        if should_abort is not None and should_abort():
            return None
        attempts = attempt
        try:
            result = call()
            result.row_index = row_index
            result.status = SUCCESS
            result.attempts = attempts
            return result
        except ExtractionFailure as failure:
            last_error = str(failure)
            if failure.exchange is not None:
                last_exchange = failure.exchange
        if attempt <= max_retries and retry_delay_ms > 0:
            if _abortable_sleep(retry_delay_ms / 1000.0, should_abort):
                return None
    return RecordResult(
        row_index=row_index,
        status=FAILED,
        extracted={},
        raw_response=last_exchange.response_text if last_exchange else "",
        error=last_error,
        attempts=attempts,
        input_chars=last_exchange.input_chars if last_exchange else 0,
        output_chars=last_exchange.output_chars if last_exchange else 0,
    )


class _Aborted(Exception):
    pass


class BatchRunner:
    """One batch run over a table: workers, control flags, progress, checkpoints.

    `request_fn(system, user) -> ChatExchange` performs a single model call;
    the runner layers extraction, validation, retries, and accounting on top.
    """

    def __init__(self, table: Table, mapping: FieldMapping, fields: list[ExtractionField],
                 bundle: PromptBundle, settings, request_fn: Callable[[str, str], ChatExchange],
                 *, callbacks: EngineCallbacks | None = None,
                 checkpoints_dir: str | Path | None = None,
                 task_id: str | None = None, cfg_digest: str = "",
                 resume_from: Checkpoint | None = None):
        self.table = table
        self.fields = fields
        self.bundle = bundle
        self.settings = settings
        self.request_fn = request_fn
        self.callbacks = callbacks or EngineCallbacks()
        self.checkpoints_dir = Path(checkpoints_dir) if checkpoints_dir else None
        self.task_id = task_id or table_task_id(table)
        self.cfg_digest = cfg_digest
        self.title_column = mapping.get(FieldCategory.TITLE) if mapping else None

        self._lock = threading.RLock()
        self._launch_lock = threading.Lock()
        self._last_launch: float | None = None
        self._paused = False
        self._cancelled = False
        self._state = STATE_IDLE
        self._started_at: float | None = None
        self._results: dict[int, RecordResult] = {}
        self._current_title: str | None = None
        self._last_saved_count = 0

        done_rows = set()
        if resume_from is not None:
            for result in resume_from.results:
                if result.status in (SUCCESS, FAILED):
                    self._results[result.row_index] = result
                    done_rows.add(result.row_index)
            self._last_saved_count = len(self._results)
        self._preloaded = len(self._results)

        self._queue: deque[int] = deque(
            i for i in range(len(table.rows)) if i not in done_rows)
        self._queue_lock = threading.Lock()

    # --- control -------------------------------------------------------------

    def pause(self):
        with self._lock:
            if self._state != STATE_RUNNING:
                return
            self._paused = True
            self._set_state(STATE_PAUSED)

    def resume(self):
        with self._lock:
            if self._state != STATE_PAUSED:
                return
            self._paused = False
            self._set_state(STATE_RUNNING)

    def cancel(self):
        with self._lock:
            if self._cancelled:
                return
            self._cancelled = True
            self._paused = False
            if self._state in (STATE_RUNNING, STATE_PAUSED):
                self._set_state(STATE_CANCELLED)

    def _set_state(self, state: str):
        self._state = state
        if self.callbacks.on_state:
            self.callbacks.on_state(state)

    # --- progress --------------------------------------------------------------

    @property
    def progress(self) -> TaskProgress:
        with self._lock:
            total = len(self.table.rows)
            processed = len(self._results)
            succeeded = sum(1 for r in self._results.values() if r.status == SUCCESS)
            tokens = sum(estimate_tokens(r.input_chars, r.output_chars)
                         for r in self._results.values())
            eta = None
            if self._state in (STATE_RUNNING, STATE_PAUSED) and self._started_at is not None:
                elapsed = time.monotonic() - self._started_at
                eta = estimate_eta(elapsed, processed - self._preloaded,
                                   total - self._preloaded)
            return TaskProgress(
                total=total,
                processed=processed,
                succeeded=succeeded,
                failed=processed - succeeded,
                token_estimate=tokens,
                eta_seconds=eta,
                current_title=self._current_title,
                state=self._state,
            )

    def results(self) -> list[RecordResult]:
        with self._lock:
            return sorted(self._results.values(), key=lambda r: r.row_index)

    # --- run -----------------------------------------------------------------

    def run(self) -> list[RecordResult]:
        with self._lock:
            if self._cancelled:
                self._set_state(STATE_CANCELLED)
                return self.results()
            self._started_at = time.monotonic()
            self._set_state(STATE_RUNNING)

        workers = [
            threading.Thread(target=self._worker, daemon=True,
                             name=f"litxtract-worker-{i}")
            for i in range(self.settings.concurrency)
        ]
        for worker in workers:
            worker.start()

        while True:
            alive = [w for w in workers if w.is_alive()]
            if not alive:
                break
            if self._cancelled:
                break
            alive[0].join(timeout=0.05)

        with self._lock:
            self._checkpoint()
            self._current_title = None
            if not self._cancelled:
                self._set_state(STATE_DONE)
        return self.results()

    # --- worker internals ------------------------------------------------------

    def _take_row(self) -> int | None:
        with self._queue_lock:
            try:
                return self._queue.popleft()
            except IndexError:
                return None

    def _put_back(self, row_index: int):
        with self._queue_lock:
            self._queue.appendleft(row_index)

    def _worker(self):
        while True:
            if self._cancelled:
                return
            if self._paused:
                time.sleep(PAUSE_POLL_S)
                continue
            row_index = self._take_row()
            if row_index is None:
                return
            if self._paused or self._cancelled:
                self._put_back(row_index)
                continue
            try:
                result = self._process_row(row_index)
            except _Aborted:
                self._put_back(row_index)
                continue
            if result is None or self._cancelled:
                return
            self._record(result)

    def _launch_gate(self):
        """Serialize request launches so consecutive launches are spaced."""
        with self._launch_lock:
            if self._cancelled:
                raise _Aborted()
            interval_s = self.settings.interval_ms / 1000.0
            if interval_s > 0 and self._last_launch is not None:
                deadline = self._last_launch + interval_s
                while True:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        break
                    if self._cancelled:
                        raise _Aborted()
                    time.sleep(min(remaining, 0.05))
            self._last_launch = time.monotonic()

    def _process_row(self, row_index: int) -> RecordResult | None:
        from .schema import interpolate

        row = self.table.rows[row_index]
        user_prompt = interpolate(self.bundle.user_template, row)
        system_prompt = self.bundle.system_prompt
        input_chars = len(system_prompt) + len(user_prompt)

        with self._lock:
            if self.title_column is not None:
                self._current_title = row.get(self.title_column) or None

        def call() -> RecordResult:
            self._launch_gate()
            exchange = None
            try:
                exchange = self.request_fn(system_prompt, user_prompt)
                block = extract_json_block(exchange.response_text)
                parsed = validate(json.loads(block), self.fields)
            except LitxtractError as err:
                raise ExtractionFailure(f"{type(err).__name__}: {err}", exchange) from err
            except Exception as err:
                # Defensive: an unexpected bug in a request_fn must not kill
                # the worker and strand the row without a terminal result.
                raise ExtractionFailure(f"{type(err).__name__}: {err}", exchange) from err
            return RecordResult(
                row_index=row_index,
                extracted=parsed.values,
                raw_response=exchange.response_text,
                input_chars=exchange.input_chars,
                output_chars=exchange.output_chars,
            )

        result = attempt_with_retry(
            call,
            self.settings.max_retries,
            self.settings.retry_delay_ms,
            row_index=row_index,
            should_abort=lambda: self._cancelled,
        )
        if result is not None and result.status == FAILED and result.input_chars == 0:
            result.input_chars = input_chars
        return result

    def _record(self, result: RecordResult):
        with self._lock:
            self._results[result.row_index] = result
            if self.callbacks.on_record:
                self.callbacks.on_record(result)
            if len(self._results) % CHECKPOINT_EVERY == 0:
                self._checkpoint()

    def _checkpoint(self):
        # Caller holds the lock: the snapshot and the completion counter agree.
        if self.checkpoints_dir is None:
            return
        count = len(self._results)
        if count == self._last_saved_count:
            return
        snapshot = Checkpoint(
            task_id=self.task_id,
            config_digest=self.cfg_digest,
            results=sorted(self._results.values(), key=lambda r: r.row_index),
            saved_at=datetime.now(timezone.utc).isoformat(),
        )
        try:
            save_checkpoint(self.checkpoints_dir, snapshot)
            self._last_saved_count = count
            if self.callbacks.on_checkpoint:
                self.callbacks.on_checkpoint(count)
        except OSError as exc:
            logger.warning("checkpoint save failed: %s", exc)
            if self.callbacks.on_warning:
                self.callbacks.on_warning(f"checkpoint save failed: {exc}")

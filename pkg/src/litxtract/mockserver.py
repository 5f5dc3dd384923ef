"""Scriptable OpenAI-compatible mock server for offline testing.

Answers chat-completions POSTs with deterministic, seed-controlled behavior:
failure injection at a configurable per-attempt rate, fixed or ranged
latency, and selectable noise wrapping around the JSON payload. Failure and
latency draws hash (seed, request-body digest, attempt ordinal), so outcomes
are reproducible regardless of request scheduling — two runs with the same
seed and request multiset behave identically.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

from .schema import schema_field_names

NOISE_MODES = ("clean", "prefix_suffix", "code_fence", "double_object")


def wrap_content(content: str, noise_mode: str) -> str:
    """Wrap a JSON payload the way chatty models do."""
    if noise_mode == "clean":
        return content
    if noise_mode == "prefix_suffix":
        return f"Here is the extraction result: {content} Hope this helps."
    if noise_mode == "code_fence":
        return f"```json\n{content}\n```"
    if noise_mode == "double_object":
        return content + ' Additionally: {"note": "trailing object"}'
    raise ValueError(f"unknown noise mode {noise_mode!r}")


def _hash_unit(seed: int, body_digest: str, attempt: int, salt: str) -> float:
    material = f"{seed}:{body_digest}:{attempt}:{salt}".encode("utf-8")
    h = hashlib.sha256(material).digest()
    return int.from_bytes(h[:8], "big") / 2**64


def attempt_fails(seed: int, body_digest: str, attempt: int, failure_rate: float) -> bool:
    """Deterministic per-attempt failure draw (shared with test oracles)."""
    if failure_rate <= 0:
        return False
    if failure_rate >= 1:
        return True
    return _hash_unit(seed, body_digest, attempt, "fail") < failure_rate


def body_digest(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()


def schema_echo_template(request: dict) -> str:
    """Default response: a JSON object echoing the schema in the system prompt.

    Field values are deterministic functions of the user message, so a given
    row always extracts to the same content.
    """
    system = ""
    user = ""
    for message in request.get("messages", []):
        if message.get("role") == "system":
            system = message.get("content", "")
        elif message.get("role") == "user":
            user = message.get("content", "")
    try:
        names = schema_field_names(system)
    except ValueError:
        names = []
    if not names:
        return json.dumps({"result": "ok"}, ensure_ascii=False)
    row_key = hashlib.sha256(user.encode("utf-8")).hexdigest()[:10]
    values = {name: f"{name} ({row_key})" for name in names}
    return json.dumps(values, ensure_ascii=False)


@dataclass
class MockScript:
    failure_rate: float = 0.0
    seed: int = 0
    latency_ms: int | tuple[int, int] = 0
    response_template: Callable[[dict], str] = schema_echo_template
    noise_mode: str = "clean"

    def __post_init__(self):
        if not 0 <= self.failure_rate <= 1:
            raise ValueError("failure_rate must be in [0, 1]")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}")

    def latency_for(self, digest: str, attempt: int) -> float:
        if isinstance(self.latency_ms, tuple):
            lo, hi = self.latency_ms
            unit = _hash_unit(self.seed, digest, attempt, "latency")
            return (lo + unit * (hi - lo)) / 1000.0
        return self.latency_ms / 1000.0


@dataclass
class RequestRecord:
    timestamp: float
    in_flight: int
    path: str
    status: int
    attempt: int


class MockServerHandle:
    """Running server plus the counters integration tests assert against."""

    def __init__(self, server: ThreadingHTTPServer, thread: threading.Thread):
        self._server = server
        self._thread = thread
        self.port = server.server_address[1]
        self.lock = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0
        self.request_count = 0
        self.failure_count = 0
        self.requests: list[RequestRecord] = []
        self.attempt_counters: dict[str, int] = defaultdict(int)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}/v1"

    def enter_request(self) -> int:
        with self.lock:
            self.in_flight += 1
            self.request_count += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
            return self.in_flight

    def exit_request(self):
        with self.lock:
            self.in_flight -= 1

    def next_attempt(self, digest: str) -> int:
        with self.lock:
            attempt = self.attempt_counters[digest]
            self.attempt_counters[digest] = attempt + 1
            return attempt

    def next_failure_ordinal(self) -> int:
        with self.lock:
            ordinal = self.failure_count
            self.failure_count += 1
            return ordinal

    def record(self, rec: RequestRecord):
        with self.lock:
            self.requests.append(rec)

    def reset_stats(self):
        with self.lock:
            self.max_in_flight = 0
            self.request_count = 0
            self.failure_count = 0
            self.requests.clear()
            self.attempt_counters.clear()

    def stats(self) -> dict:
        with self.lock:
            return {
                "request_count": self.request_count,
                "max_in_flight": self.max_in_flight,
                "failure_count": self.failure_count,
            }

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def _make_handler(script: MockScript, handle_ref: list):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):
            pass

        def _send(self, status: int, payload: dict):
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            try:
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
            except (BrokenPipeError, ConnectionResetError):
                # Client vanished mid-response (e.g. a hard-killed run);
                # nothing to answer.
                self.close_connection = True

        def do_GET(self):
            handle: MockServerHandle = handle_ref[0]
            if self.path == "/__stats":
                self._send(200, handle.stats())
            else:
                self._send(404, {"error": "not found"})

        def _answer(self, raw: bytes, digest: str, attempt: int) -> tuple[int, dict]:
            handle: MockServerHandle = handle_ref[0]
            try:
                request = json.loads(raw)
                if not isinstance(request, dict) or "messages" not in request:
                    raise ValueError("missing messages")
            except (ValueError, json.JSONDecodeError):
                return 400, {"error": "malformed request body"}
            if attempt_fails(script.seed, digest, attempt, script.failure_rate):
                status = 500 if handle.next_failure_ordinal() % 2 == 0 else 429
                return status, {"error": {"message": "injected failure", "type": "mock"}}
            content = wrap_content(script.response_template(request), script.noise_mode)
            return 200, {
                "id": f"mock-{digest[:12]}-{attempt}",
                "object": "chat.completion",
                "created": 0,
                "model": request.get("model", "mock"),
                "choices": [{
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop",
                }],
                "usage": {
                    "prompt_tokens": len(raw) // 4,
                    "completion_tokens": len(content) // 4,
                    "total_tokens": len(raw) // 4 + len(content) // 4,
                },
            }

        def do_POST(self):
            handle: MockServerHandle = handle_ref[0]
            if not self.path.endswith("/chat/completions"):
                self._send(404, {"error": "not found"})
                return
            in_flight = handle.enter_request()
            status = 500
            attempt = 0
            try:
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length)
                digest = body_digest(raw)
                attempt = handle.next_attempt(digest)
                latency = script.latency_for(digest, attempt)
                if latency > 0:
                    time.sleep(latency)
                status, payload = self._answer(raw, digest, attempt)
                self._send(status, payload)
            finally:
                handle.record(RequestRecord(
                    timestamp=time.monotonic(),
                    in_flight=in_flight,
                    path=self.path,
                    status=status,
                    attempt=attempt,
                ))
                handle.exit_request()

    return Handler


class _QuietServer(ThreadingHTTPServer):
    def handle_error(self, request, client_address):
        import sys
        exc = sys.exc_info()[1]
        if isinstance(exc, (BrokenPipeError, ConnectionResetError)):
            return
        super().handle_error(request, client_address)


def serve(script: MockScript, port: int = 0, host: str = "127.0.0.1") -> MockServerHandle:
    """Start the mock server on a background thread; port 0 picks a free one."""
    handle_ref: list = [None]
    server = _QuietServer((host, port), _make_handler(script, handle_ref))
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, daemon=True,
                              name="litxtract-mock")
    handle = MockServerHandle(server, thread)
    handle_ref[0] = handle
    thread.start()
    return handle

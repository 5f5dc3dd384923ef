import contextlib
import socket
import threading
import time

import pytest

from litxtract.engine import RecordResult
from litxtract.ingest import Table
from litxtract.providers import ChatExchange


def free_port() -> int:
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port


@contextlib.contextmanager
def live_service(app):
    """Serve a FastAPI app on a real loopback socket.

    The in-process TestClient buffers whole responses, so endless SSE
    streams need a live server.
    """
    import uvicorn

    port = free_port()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("service did not start")
        time.sleep(0.01)
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5)

CNKI_COLUMNS = ["篇名", "摘要", "关键词", "作者", "来源", "发表时间", "DOI"]


def make_cnki_table(n_rows: int, source_name: str = "cnki.csv") -> Table:
    rows = []
    for i in range(n_rows):
        rows.append({
            "篇名": f"中医药研究论文 {i}",
            "摘要": f"本研究探讨了主题 {i} 的作用机制, 并给出实验结论 {i * 7 % 13}.",
            "关键词": f"中医药; 信息抽取; 主题{i}",
            "作者": f"作者{i}; 合作者{i % 5}",
            "来源": "中医药信息学报",
            "发表时间": f"202{i % 5}-0{i % 9 + 1}-15",
            "DOI": f"10.1234/tcm.{i:04d}",
        })
    return Table(source_name=source_name, columns=list(CNKI_COLUMNS), rows=rows)


def cnki_csv_bytes(n_rows: int, bom: bool = True) -> bytes:
    import csv
    import io

    table = make_cnki_table(n_rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([row[c] for c in table.columns])
    data = buf.getvalue().encode("utf-8")
    return (b"\xef\xbb\xbf" + data) if bom else data


@pytest.fixture
def tmp_home(tmp_path, monkeypatch):
    home = tmp_path / "litxtract-home"
    monkeypatch.setenv("LITXTRACT_HOME", str(home))
    return home


def fake_request_fn(response_for, failures_before=None):
    """Engine-level request stub.

    response_for(user_prompt) -> response text. failures_before maps a user
    prompt (or any key derived from it) to a count of initial failing
    attempts; used to script retry behavior without HTTP.
    """
    from litxtract.errors import ProviderError

    counts: dict[str, int] = {}

    def request(system: str, user: str) -> ChatExchange:
        if failures_before:
            seen = counts.get(user, 0)
            counts[user] = seen + 1
            if seen < failures_before.get(user, 0):
                raise ProviderError(500, "scripted failure")
        text = response_for(user)
        return ChatExchange(system=system, user=user, response_text=text,
                            input_chars=len(system) + len(user),
                            output_chars=len(text), http_status=200)

    return request


def success_result(row_index: int, extracted=None, **kwargs) -> RecordResult:
    return RecordResult(row_index=row_index, status="success",
                        extracted=extracted or {}, **kwargs)

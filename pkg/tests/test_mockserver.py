import json

import pytest
import requests

from conftest import make_cnki_table
from litxtract import engine as eng
from litxtract.mapping import default_rules, map_columns
from litxtract.mockserver import (
    MockScript,
    attempt_fails,
    schema_echo_template,
    serve,
    wrap_content,
)
from litxtract.providers import ProviderProfile, RequestSettings, chat
from litxtract.salvage import extract_json_block, validate
from litxtract.schema import (
    PromptBundle,
    default_user_template,
    generate_system_prompt,
    preset,
)


def post_chat(handle, payload=None):
    body = payload if payload is not None else {
        "model": "m",
        "messages": [
            {"role": "system", "content": generate_system_prompt(preset("paper_info"))},
            {"role": "user", "content": "row content"},
        ],
    }
    return requests.post(f"{handle.base_url}/chat/completions", json=body, timeout=10)


def test_zero_failure_rate_always_succeeds():
    handle = serve(MockScript(failure_rate=0.0, seed=1))
    try:
        for _ in range(5):
            response = post_chat(handle)
            assert response.status_code == 200
            content = response.json()["choices"][0]["message"]["content"]
            assert json.loads(content)
    finally:
        handle.stop()


def test_full_failure_rate_marks_all_records_failed_after_four_attempts():
    handle = serve(MockScript(failure_rate=1.0, seed=1))
    try:
        table = make_cnki_table(3)
        mapping = map_columns(table.columns, default_rules())
        fields = preset("paper_info")
        bundle = PromptBundle(generate_system_prompt(fields),
                              default_user_template(mapping, table.columns))
        settings = RequestSettings(model="m", concurrency=2, retry_delay_ms=0)
        profile = ProviderProfile("custom", handle.base_url)
        runner = eng.BatchRunner(
            table, mapping, fields, bundle, settings,
            lambda s, u: chat(profile, settings, s, u, "k"))
        results = runner.run()
        assert all(r.status == "failed" for r in results)
        assert all(r.attempts == 4 for r in results)
    finally:
        handle.stop()


def test_prefix_suffix_noise_survives_salvage_pipeline():
    handle = serve(MockScript(noise_mode="prefix_suffix"))
    try:
        response = post_chat(handle)
        content = response.json()["choices"][0]["message"]["content"]
        assert not content.startswith("{")
        block = extract_json_block(content)
        record = validate(json.loads(block), preset("paper_info"))
        assert len(record.values) == 6
    finally:
        handle.stop()


def test_deterministic_replay_across_server_instances():
    outcomes = []
    for _ in range(2):
        handle = serve(MockScript(failure_rate=0.5, seed=99))
        try:
            run = []
            for i in range(12):
                body = {"model": "m", "messages": [
                    {"role": "system", "content": "s"},
                    {"role": "user", "content": f"row {i % 4}"},
                ]}
                run.append(post_chat(handle, body).status_code)
            outcomes.append(run)
        finally:
            handle.stop()
    assert outcomes[0] == outcomes[1]


def test_failure_statuses_alternate_between_500_and_429():
    handle = serve(MockScript(failure_rate=1.0, seed=5))
    try:
        statuses = [post_chat(handle).status_code for _ in range(4)]
        assert statuses == [500, 429, 500, 429]
    finally:
        handle.stop()


def test_malformed_body_is_400():
    handle = serve(MockScript())
    try:
        response = requests.post(f"{handle.base_url}/chat/completions",
                                 data=b"not json", timeout=10)
        assert response.status_code == 400
        response = requests.post(f"{handle.base_url}/chat/completions",
                                 json={"no_messages": True}, timeout=10)
        assert response.status_code == 400
    finally:
        handle.stop()


def test_unknown_paths_are_404():
    handle = serve(MockScript())
    try:
        assert requests.post(f"{handle.base_url}/other", json={}, timeout=10).status_code == 404
        assert requests.get(f"{handle.base_url}/whatever", timeout=10).status_code == 404
    finally:
        handle.stop()


def test_stats_endpoint_reports_counters():
    handle = serve(MockScript())
    try:
        post_chat(handle)
        post_chat(handle)
        stats = requests.get(f"http://127.0.0.1:{handle.port}/__stats", timeout=10).json()
        assert stats["request_count"] == 2
        assert stats["max_in_flight"] >= 1
    finally:
        handle.stop()


def test_wrap_content_modes():
    payload = '{"a": 1}'
    assert wrap_content(payload, "clean") == payload
    wrapped = wrap_content(payload, "prefix_suffix")
    assert payload in wrapped and not wrapped.startswith("{") and not wrapped.endswith("}")
    fenced = wrap_content(payload, "code_fence")
    assert fenced.startswith("```json") and fenced.endswith("```")
    doubled = wrap_content(payload, "double_object")
    assert doubled.count("{") == 2
    with pytest.raises(ValueError):
        wrap_content(payload, "bogus")


def test_schema_echo_template_tracks_system_prompt_fields():
    fields = preset("lit_review")
    request = {"messages": [
        {"role": "system", "content": generate_system_prompt(fields)},
        {"role": "user", "content": "the row"},
    ]}
    content = schema_echo_template(request)
    parsed = json.loads(content)
    assert list(parsed.keys()) == [f.name for f in fields]
    # Same user content, same values; different user content, different values.
    assert schema_echo_template(request) == content
    request2 = {"messages": [
        {"role": "system", "content": generate_system_prompt(fields)},
        {"role": "user", "content": "another row"},
    ]}
    assert schema_echo_template(request2) != content


def test_attempt_fails_is_pure_and_rate_bounded():
    draws = [attempt_fails(7, f"digest{i}", 0, 0.1) for i in range(2000)]
    rate = sum(draws) / len(draws)
    assert 0.07 < rate < 0.13
    assert draws == [attempt_fails(7, f"digest{i}", 0, 0.1) for i in range(2000)]
    assert not any(attempt_fails(7, f"d{i}", 0, 0.0) for i in range(50))
    assert all(attempt_fails(7, f"d{i}", 0, 1.0) for i in range(50))


def test_latency_range_draws_are_deterministic():
    script = MockScript(latency_ms=(10, 30), seed=3)
    first = [script.latency_for(f"d{i}", 0) for i in range(20)]
    second = [script.latency_for(f"d{i}", 0) for i in range(20)]
    assert first == second
    assert all(0.010 <= v <= 0.030 for v in first)

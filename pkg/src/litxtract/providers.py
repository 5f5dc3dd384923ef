"""LLM provider registry and OpenAI-compatible chat-completion client.

Five providers ship by default (DeepSeek, OpenAI, Qwen, Zhipu, custom), all
speaking the chat-completions wire shape. Provider-specific request
mutations are applied at build time: DeepSeek reasoning-family models get
reasoning effort with temperature suppressed, Qwen models get an extended
thinking budget.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from urllib.parse import urlparse

import requests

from .errors import MalformedResponseError, ProviderError, TransportError

DEFAULT_TIMEOUT_S = 120.0
QWEN_THINKING_BUDGET = 81920

MUTATION_NONE = "none"
MUTATION_DEEPSEEK_REASONING = "deepseek_reasoning"
MUTATION_QWEN_THINKING = "qwen_thinking"

_REASONING_FAMILY_MARKERS = ("v4", "reasoner")


@dataclass
class ProviderProfile:
    id: str
    base_url: str
    models: list[str] = field(default_factory=list)
    mutation: str = MUTATION_NONE

    def __post_init__(self):
        parsed = urlparse(self.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"base_url must be absolute http(s): {self.base_url!r}")
        if self.id != "custom" and not self.models:
            raise ValueError(f"provider {self.id!r} needs a non-empty model list")


@dataclass
class RequestSettings:
    model: str
    temperature: float | None = None
    concurrency: int = 3
    interval_ms: int = 0
    max_retries: int = 3
    retry_delay_ms: int = 1000

    def __post_init__(self):
        if not 1 <= self.concurrency <= 10:
            raise ValueError("concurrency must be in [1, 10]")
        if not 0 <= self.interval_ms <= 10000:
            raise ValueError("interval_ms must be in [0, 10000]")
        if self.temperature is not None and not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class ChatExchange:
    system: str
    user: str
    response_text: str = ""
    input_chars: int = 0
    output_chars: int = 0
    http_status: int = 0


def default_profiles() -> dict[str, ProviderProfile]:
    profiles = [
        ProviderProfile(
            id="deepseek",
            base_url="https://api.deepseek.com/v1",
            models=["deepseek-chat", "deepseek-reasoner", "deepseek-v4-flash", "deepseek-v4-pro"],
            mutation=MUTATION_DEEPSEEK_REASONING,
        ),
        ProviderProfile(
            id="openai",
            base_url="https://api.openai.com/v1",
            models=["gpt-4o", "gpt-4o-mini", "gpt-4.1-mini"],
        ),
        ProviderProfile(
            id="qwen",
            base_url="https://dashscope.aliyuncs.com/compatible-mode/v1",
            models=["qwen-turbo", "qwen-plus", "qwen-max"],
            mutation=MUTATION_QWEN_THINKING,
        ),
        ProviderProfile(
            id="zhipu",
            base_url="https://open.bigmodel.cn/api/paas/v4",
            models=["glm-4-flash", "glm-4-plus"],
        ),
        ProviderProfile(
            id="custom",
            base_url="http://127.0.0.1:8089/v1",
            models=[],
        ),
    ]
    return {p.id: p for p in profiles}


def _is_reasoning_family(model: str) -> bool:
    lowered = model.lower()
    return any(marker in lowered for marker in _REASONING_FAMILY_MARKERS)


def build_request(profile: ProviderProfile, settings: RequestSettings,
                  system: str, user: str) -> dict:
    """Chat-completions request body with provider-specific mutations applied."""
    body = {
        "model": settings.model,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
    }
    if profile.mutation == MUTATION_DEEPSEEK_REASONING and _is_reasoning_family(settings.model):
        # Reasoning-family models reject temperature; thinking replaces it.
        body["reasoning_effort"] = "max"
        body["thinking"] = {"type": "enabled"}
        return body
    if profile.mutation == MUTATION_QWEN_THINKING:
        body["enable_thinking"] = True
        body["thinking_budget"] = QWEN_THINKING_BUDGET
    if settings.temperature is not None:
        body["temperature"] = settings.temperature
    return body


def serialize_request(body: dict) -> bytes:
    """Canonical request bytes; retries of the same call repeat them exactly."""
    return json.dumps(body, ensure_ascii=False).encode("utf-8")


def chat_completions_url(base_url: str) -> str:
    return base_url.rstrip("/") + "/chat/completions"


_thread_local = threading.local()


def _session() -> requests.Session:
    session = getattr(_thread_local, "session", None)
    if session is None:
        session = requests.Session()
        _thread_local.session = session
    return session


def chat(profile: ProviderProfile, settings: RequestSettings, system: str, user: str,
         api_key: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> ChatExchange:
    """Single chat-completion round trip.

    Raises ProviderError on non-2xx status, TransportError on network
    failure or timeout, MalformedResponseError when the body lacks choices.
    """
    exchange = ChatExchange(system=system, user=user,
                            input_chars=len(system) + len(user))
    body = build_request(profile, settings, system, user)
    try:
        response = _session().post(
            chat_completions_url(profile.base_url),
            data=serialize_request(body),
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {api_key}",
            },
            timeout=timeout_s,
        )
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc

    exchange.http_status = response.status_code
    if not 200 <= response.status_code < 300:
        raise ProviderError(response.status_code, response.text[:200])
    try:
        payload = response.json()
        content = payload["choices"][0]["message"]["content"]
    except (ValueError, LookupError, TypeError) as exc:
        raise MalformedResponseError(f"no message content in response: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedResponseError("message content is not text")
    exchange.response_text = content
    exchange.output_chars = len(content)
    return exchange

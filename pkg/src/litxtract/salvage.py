"""Salvage a JSON object from noisy LLM text and validate it against a schema.

Models wrap their JSON in explanations, code fences, or trailing chatter.
Extraction tries the greedy first-brace/last-brace span first and falls back
to a balanced scan for the first complete top-level object.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import NoJsonFoundError, RequiredFieldMissingError, TypeMismatchError
from .schema import ExtractionField

NOT_MENTIONED = "Not mentioned"
_NOT_MENTIONED_FORMS = {NOT_MENTIONED, "未提及"}

_FENCE_OPEN = re.compile(r"^\s*```[a-zA-Z0-9_-]*\s*\n")
_FENCE_CLOSE = re.compile(r"\n\s*```\s*$")

_LIST_SPLIT = re.compile(r"[;；,，]")


def strip_code_fences(text: str) -> str:
    """Remove one leading and one trailing triple-backtick fence, if present."""
    stripped = text.strip()
    opened = _FENCE_OPEN.sub("", stripped)
    if opened != stripped:
        return _FENCE_CLOSE.sub("", opened)
    return text


def _first_balanced_object(text: str, start: int) -> str | None:
    """Span of the first complete top-level {...} from `start`, quote-aware."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _parses(candidate: str) -> bool:
    try:
        json.loads(candidate)
        return True
    except (json.JSONDecodeError, ValueError):
        return False


def extract_json_block(text: str) -> str:
    """The raw JSON-object substring recovered from `text`.

    Greedy strategy first: the span from the first '{' to the last '}'.
    When that span does not parse, a balanced-brace scan returns the first
    complete top-level object instead. Raises NoJsonFoundError when neither
    yields parseable JSON.
    """
    text = strip_code_fences(text)
    start = text.find("{")
    if start == -1:
        raise NoJsonFoundError("response contains no '{'")
    end = text.rfind("}")
    if end > start:
        greedy = text[start : end + 1]
        if _parses(greedy):
            return greedy
    balanced = _first_balanced_object(text, start)
    if balanced is not None and _parses(balanced):
        return balanced
    raise NoJsonFoundError("no parseable JSON object in response")


@dataclass
class ParsedRecord:
    """Schema-validated values plus bookkeeping about missing/coerced fields."""

    values: dict = field(default_factory=dict)
    missing_fields: list[str] = field(default_factory=list)
    coerced_fields: list[str] = field(default_factory=list)


def _is_not_mentioned(value) -> bool:
    if value is None:
        return True
    return isinstance(value, str) and value.strip() in _NOT_MENTIONED_FORMS


def _coerce_number(name: str, value):
    if isinstance(value, bool):
        raise TypeMismatchError(name, "boolean is not a number")
    if isinstance(value, (int, float)):
        if value != value or value in (float("inf"), float("-inf")):
            raise TypeMismatchError(name, "number is not finite")
        return value, False
    if isinstance(value, str):
        text = value.strip()
        try:
            return int(text), True
        except ValueError:
            pass
        try:
            number = float(text)
        except ValueError:
            raise TypeMismatchError(name, f"{value!r} is not numeric") from None
        if number != number or number in (float("inf"), float("-inf")):
            raise TypeMismatchError(name, "number is not finite")
        return number, True
    raise TypeMismatchError(name, f"{type(value).__name__} is not numeric")


def _coerce_list(name: str, value):
    if isinstance(value, list):
        items = []
        coerced = False
        for item in value:
            if isinstance(item, (dict, list)):
                raise TypeMismatchError(name, "nested structures not allowed in lists")
            if isinstance(item, bool):
                items.append("true" if item else "false")
                coerced = True
            elif isinstance(item, str):
                items.append(item)
            else:
                items.append(str(item))
                coerced = True
        return items, coerced
    if isinstance(value, str):
        items = [part.strip() for part in _LIST_SPLIT.split(value)]
        return [item for item in items if item], True
    raise TypeMismatchError(name, f"{type(value).__name__} is not a list")


_BOOL_STRINGS = {"true": True, "false": False, "是": True, "否": False}


def _coerce_boolean(name: str, value):
    if isinstance(value, bool):
        return value, False
    if isinstance(value, str):
        key = value.strip()
        lowered = key.lower()
        if lowered in ("true", "false"):
            return lowered == "true", True
        if key in _BOOL_STRINGS:
            return _BOOL_STRINGS[key], True
    raise TypeMismatchError(name, f"{value!r} is not a boolean")


def _coerce_text(name: str, value):
    if isinstance(value, str):
        return value, False
    if isinstance(value, bool):
        return ("true" if value else "false"), True
    if isinstance(value, (int, float)):
        return str(value), True
    raise TypeMismatchError(name, f"{type(value).__name__} is not text")


_COERCERS = {
    "text": _coerce_text,
    "number": _coerce_number,
    "list": _coerce_list,
    "boolean": _coerce_boolean,
}


def validate(candidate: dict, fields: list[ExtractionField]) -> ParsedRecord:
    """Check a parsed JSON object against the schema, coercing where allowed.

    Every schema field lands in the result: present values are type-checked
    (numeric strings, delimited list strings, and boolean words coerce with
    a note), absent or "Not mentioned" fields are recorded as missing with
    the literal fallback value. A required field absent from the candidate
    raises RequiredFieldMissingError; an explicit "Not mentioned" is valid
    even for required fields. Extra keys are ignored.
    """
    if not isinstance(candidate, dict):
        raise TypeMismatchError("<root>", "candidate must be a JSON object")
    record = ParsedRecord()
    for f in fields:
        if f.name not in candidate:
            if f.required:
                raise RequiredFieldMissingError(f.name)
            record.values[f.name] = NOT_MENTIONED
            record.missing_fields.append(f.name)
            continue
        value = candidate[f.name]
        if _is_not_mentioned(value):
            record.values[f.name] = NOT_MENTIONED
            record.missing_fields.append(f.name)
            continue
        coerced_value, was_coerced = _COERCERS[f.data_type](f.name, value)
        record.values[f.name] = coerced_value
        if was_coerced:
            record.coerced_fields.append(f.name)
    return record

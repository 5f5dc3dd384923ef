"""Extraction schemas, system-prompt generation, and template interpolation.

A schema is a list of named fields the LLM must return as a JSON object.
The system prompt is generated from the schema; the user prompt comes from
a template with {{column}} placeholders bound to table cells per row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (
    EmptySchemaError,
    TemplateSyntaxError,
    UnknownPlaceholderError,
    UnknownPresetError,
)
from .mapping import FieldCategory, FieldMapping

DATA_TYPES = ("text", "number", "list", "boolean")

ROLE_LINE = (
    "You are an academic paper information extraction assistant. Extract the "
    "requested information from the paper record provided by the user and "
    "respond with a single JSON object exactly matching this schema."
)
FALLBACK_SENTENCE = "If a field is not mentioned, fill in Not mentioned."

_TYPE_ANNOTATIONS = {
    "text": "string",
    "number": "number",
    "list": "array of strings",
    "boolean": "boolean",
}


@dataclass(frozen=True)
class ExtractionField:
    name: str
    description: str = ""
    data_type: str = "text"
    required: bool = True

    def __post_init__(self):
        if not self.name:
            raise ValueError("extraction field name must be non-empty")
        if self.data_type not in DATA_TYPES:
            raise ValueError(f"unknown data type {self.data_type!r}")


@dataclass(frozen=True)
class PromptBundle:
    """Generated system prompt plus the user template it pairs with."""

    system_prompt: str
    user_template: str


def generate_system_prompt(fields: list[ExtractionField], typed_annotations: bool = False) -> str:
    """Build the system prompt: role line, JSON schema block, fallback rule.

    Every field annotates as `string` unless typed_annotations is on, in
    which case the declared data type picks the annotation. Field
    descriptions, when present, are appended to the role line as guidance.
    """
    if not fields:
        raise EmptySchemaError("cannot generate a prompt from an empty schema")
    names = [f.name for f in fields]
    if len(set(names)) != len(names):
        raise ValueError("field names must be unique within a schema")

    role = ROLE_LINE
    guidance = [f"{f.name}: {f.description.strip().rstrip('.')}"
                for f in fields if f.description.strip()]
    if guidance:
        role += " Field guidance: " + "; ".join(guidance) + "."

    out = role + "\n{"
    for i, f in enumerate(fields):
        annotation = _TYPE_ANNOTATIONS[f.data_type] if typed_annotations else "string"
        out += f"\n  {f.name}: {annotation}"
        if i < len(fields) - 1:
            out += ","
    out += "\n}"
    out += "\n" + FALLBACK_SENTENCE
    return out


def schema_field_names(system_prompt: str) -> list[str]:
    """Recover field names from a generated prompt's brace-delimited block."""
    start = system_prompt.index("{")
    end = system_prompt.rindex("}")
    block = system_prompt[start + 1 : end]
    names = []
    for line in block.splitlines():
        line = line.strip().rstrip(",")
        if line:
            names.append(line.rsplit(": ", 1)[0])
    return names


_PRESETS: dict[str, list[ExtractionField]] = {
    "paper_info": [
        ExtractionField("Research Topic", "The core research question or subject of the paper."),
        ExtractionField("Methodology", "The research methods, study design, or experimental approach used."),
        ExtractionField("Dataset", "Datasets, corpora, or study populations the research draws on."),
        ExtractionField("Main Conclusions", "The principal findings or conclusions reported."),
        ExtractionField("Innovation Points", "What the paper claims as its novel contributions."),
        ExtractionField("Research Limitations", "Limitations or weaknesses acknowledged in the paper."),
    ],
    "lit_review": [
        ExtractionField("Research Domain", "The research field or application domain addressed."),
        ExtractionField("Technical Approach", "The main technical approach or framework proposed."),
        ExtractionField("Baseline Methods", "Baseline or comparison methods evaluated against."),
        ExtractionField("Evaluation Metrics", "Metrics used to measure performance."),
        ExtractionField("Experimental Results", "Key quantitative or qualitative results reported."),
        ExtractionField("Future Directions", "Future work or open problems identified."),
    ],
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> list[ExtractionField]:
    """One of the built-in schemas: paper_info or lit_review."""
    try:
        return list(_PRESETS[name])
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None


def _scan_placeholders(template: str) -> list[tuple[int, int, str]]:
    """All placeholders as (start, end, name) spans; raises on unclosed '{{'."""
    spans = []
    i = 0
    while True:
        start = template.find("{{", i)
        if start == -1:
            return spans
        close = template.find("}", start + 2)
        if close == -1 or not template.startswith("}}", close):
            offset = len(template[:start].encode("utf-8"))
            raise TemplateSyntaxError("'{{' without matching '}}'", offset)
        name = template[start + 2 : close]
        spans.append((start, close + 2, name))
        i = close + 2


def interpolate(template: str, row: dict[str, str]) -> str:
    """Replace each {{column}} with the row's cell value, single pass.

    Replacement is literal: placeholder-like text inside cell values is
    never re-expanded.
    """
    out = []
    cursor = 0
    for start, end, name in _scan_placeholders(template):
        if name not in row:
            raise UnknownPlaceholderError(name)
        out.append(template[cursor:start])
        out.append(row[name])
        cursor = end
    out.append(template[cursor:])
    return "".join(out)


def validate_template(template: str, columns: list[str]) -> list[str]:
    """All placeholder names in order; unknown ones are diagnostics, not errors."""
    return [name for _, _, name in _scan_placeholders(template)]


def unknown_placeholders(template: str, columns: list[str]) -> list[str]:
    known = set(columns)
    return [name for name in validate_template(template, columns) if name not in known]


_CATEGORY_ORDER = (
    FieldCategory.TITLE,
    FieldCategory.AUTHORS,
    FieldCategory.SOURCE,
    FieldCategory.PUB_DATE,
    FieldCategory.KEYWORDS,
    FieldCategory.ABSTRACT,
    FieldCategory.DOI,
)


def default_user_template(mapping: FieldMapping, columns: list[str]) -> str:
    """A reasonable user template when none is supplied.

    Uses the mapped semantic columns when any exist, otherwise every column.
    """
    lines = ["Extract the required fields from the following paper record."]
    pairs: list[tuple[str, str]] = []
    for category in _CATEGORY_ORDER:
        column = mapping.get(category)
        if column is not None:
            pairs.append((category.value, column))
    if not pairs:
        pairs = [(c, c) for c in columns]
    for label, column in pairs:
        lines.append(f"{label}: {{{{{column}}}}}")
    return "\n".join(lines)


# --- schema document serialization -------------------------------------------

def schema_to_json(fields: list[ExtractionField], user_template: str = "",
                   preset_name: str | None = None) -> str:
    doc = {
        "fields": [
            {"name": f.name, "description": f.description, "type": f.data_type,
             "required": f.required}
            for f in fields
        ],
        "user_template": user_template,
    }
    if preset_name:
        doc["preset"] = preset_name
    return json.dumps(doc, ensure_ascii=False, indent=2)


def schema_from_json(text: str) -> tuple[list[ExtractionField], str]:
    doc = json.loads(text)
    if "preset" in doc and not doc.get("fields"):
        fields = preset(doc["preset"])
    else:
        fields = [
            ExtractionField(
                name=item["name"],
                description=item.get("description", ""),
                data_type=item.get("type", "text"),
                required=bool(item.get("required", True)),
            )
            for item in doc.get("fields", [])
        ]
    return fields, doc.get("user_template", "")

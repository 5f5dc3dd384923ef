"""Rule-based recognition of academic-database column names.

Maps Chinese/English column headers from CNKI- and Wanfang-style exports
onto seven semantic categories via ordered substring rules. Matching is
case-insensitive for ASCII patterns and exact for CJK text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum


class FieldCategory(str, Enum):
    TITLE = "Title"
    ABSTRACT = "Abstract"
    KEYWORDS = "Keywords"
    AUTHORS = "Authors"
    SOURCE = "Source"
    PUB_DATE = "PubDate"
    DOI = "DOI"


@dataclass(frozen=True)
class MappingRule:
    """Ordered name patterns bound to one semantic category."""

    patterns: tuple[str, ...]
    target: FieldCategory

    def __post_init__(self):
        if not self.patterns:
            raise ValueError(f"rule for {self.target.value} has no patterns")
        if any(p == "" for p in self.patterns):
            raise ValueError(f"rule for {self.target.value} contains an empty pattern")


@dataclass
class FieldMapping:
    """Bindings of source columns to semantic categories, one per category."""

    entries: list[tuple[str, FieldCategory]]

    def get(self, target: FieldCategory) -> str | None:
        for column, t in self.entries:
            if t == target:
                return column
        return None

    def as_dict(self) -> dict[str, str]:
        return {t.value: column for column, t in self.entries}

    @classmethod
    def from_dict(cls, data: dict[str, str]) -> "FieldMapping":
        return cls(entries=[(col, FieldCategory(t)) for t, col in data.items()])


def default_rules() -> list[MappingRule]:
    """The built-in rule set covering CNKI/Wanfang export headers."""
    return [
        MappingRule(("篇名", "题名", "标题", "Title"), FieldCategory.TITLE),
        MappingRule(("摘要", "Abstract"), FieldCategory.ABSTRACT),
        MappingRule(("关键词", "Keywords", "Keyword"), FieldCategory.KEYWORDS),
        MappingRule(("作者", "Author", "Authors"), FieldCategory.AUTHORS),
        MappingRule(("来源", "期刊", "Journal", "Source"), FieldCategory.SOURCE),
        MappingRule(("发表时间", "出版时间", "年份", "Year", "Date"), FieldCategory.PUB_DATE),
        MappingRule(("DOI",), FieldCategory.DOI),
    ]


def map_columns(columns: list[str], rules: list[MappingRule] | None = None) -> FieldMapping:
    """Bind columns to categories: first column containing any rule pattern wins.

    Rules are processed in order; for each rule the columns are scanned in
    source order and the first one containing any of the rule's patterns
    (case-folded substring match) is bound, after which the next rule is
    processed. A column may serve several rules, but each rule binds at most
    one column.
    """
    if rules is None:
        rules = default_rules()
    entries: list[tuple[str, FieldCategory]] = []
    for rule in rules:
        folded_patterns = [p.casefold() for p in rule.patterns]
        for column in columns:
            folded = column.casefold()
            if any(p in folded for p in folded_patterns):
                entries.append((column, rule.target))
                break
    return FieldMapping(entries=entries)


def rules_to_json(rules: list[MappingRule]) -> str:
    return json.dumps(
        [{"patterns": list(r.patterns), "target": r.target.value} for r in rules],
        ensure_ascii=False,
        indent=2,
    )


def rules_from_json(text: str) -> list[MappingRule]:
    data = json.loads(text)
    return [MappingRule(tuple(item["patterns"]), FieldCategory(item["target"])) for item in data]

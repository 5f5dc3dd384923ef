import random

import pytest

from litxtract.mapping import (
    FieldCategory,
    FieldMapping,
    MappingRule,
    default_rules,
    map_columns,
    rules_from_json,
    rules_to_json,
)


def reference_map(columns, rules):
    """Independent transcription of the mapping loop for oracle comparison:
    rules outer, columns middle, patterns inner; first hit binds the column
    and moves on to the next rule."""
    bound = []
    for rule in rules:
        hit = None
        for column in columns:
            for pattern in rule.patterns:
                if pattern.casefold() in column.casefold():
                    hit = column
                    break
            if hit is not None:
                break
        if hit is not None:
            bound.append((hit, rule.target))
    return bound


def test_cnki_seven_columns_all_mapped():
    columns = ["篇名", "摘要", "关键词", "作者", "来源", "发表时间", "DOI"]
    mapping = map_columns(columns, default_rules())
    assert mapping.as_dict() == {
        "Title": "篇名",
        "Abstract": "摘要",
        "Keywords": "关键词",
        "Authors": "作者",
        "Source": "来源",
        "PubDate": "发表时间",
        "DOI": "DOI",
    }


def test_empty_columns_yield_empty_mapping():
    assert map_columns([], default_rules()).entries == []


def test_first_matching_column_in_column_order_wins():
    # Hand-traced: the outer loop is per rule, the middle loop per column;
    # 文章标题 contains 标题 so it binds before the exact 标题 column is reached.
    rules = [MappingRule(("篇名", "题名", "标题"), FieldCategory.TITLE)]
    mapping = map_columns(["文章标题", "标题"], rules)
    assert mapping.entries == [("文章标题", FieldCategory.TITLE)]


def test_default_rules_shape():
    rules = default_rules()
    assert len(rules) == 7
    keywords = next(r for r in rules if r.target == FieldCategory.KEYWORDS)
    assert "Keyword" in keywords.patterns
    assert all(rule.patterns for rule in rules)
    assert len({rule.target for rule in rules}) == 7


def test_ascii_matching_is_case_insensitive():
    mapping = map_columns(["TITLE OF PAPER", "the abstract"], default_rules())
    assert mapping.get(FieldCategory.TITLE) == "TITLE OF PAPER"
    assert mapping.get(FieldCategory.ABSTRACT) == "the abstract"


def test_cjk_matching_is_exact_substring():
    mapping = map_columns(["论文题名"], default_rules())
    assert mapping.get(FieldCategory.TITLE) == "论文题名"
    assert map_columns(["题"], default_rules()).get(FieldCategory.TITLE) is None


def test_a_column_may_serve_multiple_rules():
    rules = [
        MappingRule(("来源",), FieldCategory.SOURCE),
        MappingRule(("来源出版",), FieldCategory.PUB_DATE),
    ]
    mapping = map_columns(["来源出版"], rules)
    assert mapping.as_dict() == {"Source": "来源出版", "PubDate": "来源出版"}


def test_each_rule_binds_at_most_one_column():
    mapping = map_columns(["Title A", "Title B", "Title C"], default_rules())
    bindings = [c for c, t in mapping.entries if t == FieldCategory.TITLE]
    assert bindings == ["Title A"]


def test_determinism_and_oracle_agreement_on_random_columns():
    rng = random.Random(1234)
    fragments = ["篇名", "题名", "标题", "摘要", "关键词", "作者", "来源", "期刊",
                 "发表时间", "年份", "DOI", "编号", "title", "ABSTRACT", "id",
                 "备注", "Keyword", "author", "source", "date", "卷期"]
    for _ in range(200):
        n = rng.randint(0, 8)
        columns = []
        for _ in range(n):
            name = "".join(rng.sample(fragments, rng.randint(1, 3)))
            if name not in columns:
                columns.append(name)
        rules = default_rules()
        first = map_columns(columns, rules)
        second = map_columns(columns, rules)
        assert first.entries == second.entries
        assert first.entries == reference_map(columns, rules)
        # Per-rule uniqueness.
        targets = [t for _, t in first.entries]
        assert len(targets) == len(set(targets))


def test_removing_unmapped_column_never_changes_mapping():
    rng = random.Random(99)
    fragments = ["篇名", "摘要", "关键词", "作者", "来源", "发表时间", "DOI",
                 "其他", "备注", "编号"]
    for _ in range(100):
        columns = rng.sample(fragments, rng.randint(2, len(fragments)))
        mapping = map_columns(columns, default_rules())
        mapped = {c for c, _ in mapping.entries}
        unmapped = [c for c in columns if c not in mapped]
        if not unmapped:
            continue
        victim = rng.choice(unmapped)
        reduced = [c for c in columns if c != victim]
        assert map_columns(reduced, default_rules()).entries == mapping.entries


def test_rules_serialize_round_trip():
    rules = default_rules()
    again = rules_from_json(rules_to_json(rules))
    assert again == rules


def test_rule_invariants_enforced():
    with pytest.raises(ValueError):
        MappingRule((), FieldCategory.TITLE)
    with pytest.raises(ValueError):
        MappingRule(("ok", ""), FieldCategory.TITLE)


def test_mapping_dict_round_trip():
    mapping = map_columns(["篇名", "摘要"], default_rules())
    again = FieldMapping.from_dict(mapping.as_dict())
    assert again.as_dict() == mapping.as_dict()

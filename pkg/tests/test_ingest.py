import io
import random
import zipfile

import pytest

from litxtract import xlsx
from litxtract.errors import (
    CsvSyntaxError,
    EmptyFileError,
    NoColumnsError,
    WorkbookFormatError,
)
from litxtract.ingest import normalize_columns, parse_csv, parse_workbook

BOM = b"\xef\xbb\xbf"


def test_bom_stripped_before_header_parsing():
    table = parse_csv(BOM + "篇名,摘要\nA,B".encode("utf-8"))
    assert table.columns == ["篇名", "摘要"]
    assert table.rows == [{"篇名": "A", "摘要": "B"}]


def test_missing_trailing_cell_becomes_empty_string():
    table = parse_csv(b"a,b\n1")
    assert table.rows == [{"a": "1", "b": ""}]


def test_duplicate_columns_get_numeric_suffixes():
    # Oracle: apply the suffix rule by hand. First occurrence keeps its name,
    # the k-th duplicate becomes name_k, skipping names already taken.
    assert parse_csv(b"t,t\nx,y").columns == ["t", "t_2"]
    assert normalize_columns(["t", "t", "t"]) == ["t", "t_2", "t_3"]
    assert normalize_columns(["t", "t_2", "t"]) == ["t", "t_2", "t_3"]
    assert normalize_columns(["a", "b", "a", "b", "a"]) == ["a", "b", "a_2", "b_2", "a_3"]


def test_blank_header_cells_get_positional_names():
    table = parse_csv(b"a,,b\n1,2,3")
    assert table.columns == ["a", "column_2", "b"]


def test_quoted_fields_with_embedded_commas_and_newlines():
    data = b'a,b\n"x,y","line1\nline2"\n'
    table = parse_csv(data)
    assert table.rows == [{"a": "x,y", "b": "line1\nline2"}]


def test_crlf_and_lf_both_accepted():
    assert parse_csv(b"a,b\r\n1,2\r\n").rows == parse_csv(b"a,b\n1,2\n").rows


def test_long_rows_truncated_to_header_width():
    table = parse_csv(b"a,b\n1,2,3,4")
    assert table.rows == [{"a": "1", "b": "2"}]


def test_empty_input_raises():
    with pytest.raises(EmptyFileError):
        parse_csv(b"")
    with pytest.raises(EmptyFileError):
        parse_csv(BOM)


def test_header_with_no_names_raises():
    with pytest.raises(NoColumnsError):
        parse_csv(b",,\nx,y,z")


def test_malformed_quoting_reports_line_number():
    with pytest.raises(CsvSyntaxError) as excinfo:
        parse_csv(b'a,b\n"x" y,z\n')
    assert excinfo.value.line == 2


def test_non_utf8_input_rejected():
    with pytest.raises(CsvSyntaxError):
        parse_csv("a,b\nré,x".encode("latin-1"))


def test_bom_idempotence_property():
    rng = random.Random(42)
    for _ in range(25):
        n_cols = rng.randint(1, 5)
        header = ",".join(f"c{i}" for i in range(n_cols))
        lines = [header]
        for _ in range(rng.randint(0, 6)):
            lines.append(",".join(str(rng.randint(0, 99)) for _ in range(n_cols)))
        raw = ("\n".join(lines)).encode("utf-8")
        with_bom = parse_csv(BOM + raw)
        without = parse_csv(raw)
        assert with_bom.columns == without.columns
        assert with_bom.rows == without.rows


def test_row_rectangularity_property():
    rng = random.Random(7)
    for _ in range(25):
        n_cols = rng.randint(1, 6)
        header = ",".join(f"c{i}" for i in range(n_cols))
        lines = [header]
        for _ in range(rng.randint(1, 8)):
            width = rng.randint(0, n_cols + 2)
            lines.append(",".join("x" for _ in range(width)))
        table = parse_csv("\n".join(lines).encode("utf-8"))
        for row in table.rows:
            assert set(row.keys()) == set(table.columns)


# --- workbooks ---------------------------------------------------------------

def test_workbook_basic_structure():
    data = xlsx.write_workbook(["Title", "Abstract"], [["A", "B"], ["C", "D"]])
    table = parse_workbook(data)
    assert table.columns == ["Title", "Abstract"]
    assert len(table.rows) == 2


def test_numeric_cell_stringified_without_decimal():
    # Round-trip oracle: write a workbook with known cells, assert the
    # stringified form on re-parse.
    data = xlsx.write_workbook(["Year", "Score"], [[2024, 91.5]])
    table = parse_workbook(data)
    assert table.rows == [{"Year": "2024", "Score": "91.5"}]


def _three_sheet_workbook() -> bytes:
    # Take the minimal writer's output and register two extra sheets so the
    # parser has to pick the first one.
    base = xlsx.write_workbook(["only", "first"], [["sheet", "counts"]])
    out = io.BytesIO()
    with zipfile.ZipFile(io.BytesIO(base)) as src, zipfile.ZipFile(out, "w") as dst:
        for name in src.namelist():
            content = src.read(name)
            if name == "xl/workbook.xml":
                content = content.replace(
                    b"</sheets>",
                    b'<sheet name="Second" sheetId="2" r:id="rId3"/>'
                    b'<sheet name="Third" sheetId="3" r:id="rId4"/></sheets>',
                )
            if name == "xl/_rels/workbook.xml.rels":
                content = content.replace(
                    b"</Relationships>",
                    b'<Relationship Id="rId3" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/sheet2.xml"/>'
                    b'<Relationship Id="rId4" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/sheet3.xml"/></Relationships>',
                )
            dst.writestr(name, content)
        extra = (
            '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
            '<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main">'
            "<sheetData>"
            '<row r="1"><c r="A1" t="inlineStr"><is><t>other</t></is></c></row>'
            '<row r="2"><c r="A2" t="inlineStr"><is><t>x</t></is></c></row>'
            '<row r="3"><c r="A3" t="inlineStr"><is><t>y</t></is></c></row>'
            "</sheetData></worksheet>"
        )
        dst.writestr("xl/worksheets/sheet2.xml", extra)
        dst.writestr("xl/worksheets/sheet3.xml", extra)
    return out.getvalue()


def test_only_first_sheet_parsed():
    table = parse_workbook(_three_sheet_workbook())
    assert table.columns == ["only", "first"]
    assert len(table.rows) == 1


def test_unreadable_archive_raises():
    with pytest.raises(WorkbookFormatError):
        parse_workbook(b"this is not a zip archive")


def test_empty_first_sheet_raises():
    data = xlsx.write_workbook([], [])
    with pytest.raises(NoColumnsError):
        parse_workbook(data)


def _handcrafted_workbook_with_shared_strings_and_date() -> bytes:
    # Produced independently of the writer: shared strings, a date-styled
    # serial, and skipped cells. Mirrors what Excel-authored files contain.
    out = io.BytesIO()
    ns = "http://schemas.openxmlformats.org/spreadsheetml/2006/main"
    with zipfile.ZipFile(out, "w") as zf:
        zf.writestr("[Content_Types].xml", f"""<?xml version="1.0"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
<Default Extension="xml" ContentType="application/xml"/>
<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>
</Types>""")
        zf.writestr("_rels/.rels", """<?xml version="1.0"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="xl/workbook.xml"/>
</Relationships>""")
        zf.writestr("xl/workbook.xml", f"""<?xml version="1.0"?>
<workbook xmlns="{ns}" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships">
<sheets><sheet name="Data" sheetId="1" r:id="rId1"/></sheets></workbook>""")
        zf.writestr("xl/_rels/workbook.xml.rels", """<?xml version="1.0"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/data.xml"/>
</Relationships>""")
        zf.writestr("xl/sharedStrings.xml", f"""<?xml version="1.0"?>
<sst xmlns="{ns}" count="3" uniqueCount="3">
<si><t>Title</t></si><si><t>Date</t></si><si><r><t>run </t></r><r><t>parts</t></r></si>
</sst>""")
        zf.writestr("xl/styles.xml", f"""<?xml version="1.0"?>
<styleSheet xmlns="{ns}">
<cellXfs count="2"><xf numFmtId="0"/><xf numFmtId="14"/></cellXfs>
</styleSheet>""")
        # 45306 = 2024-01-15 in the 1900 date system.
        zf.writestr("xl/worksheets/data.xml", f"""<?xml version="1.0"?>
<worksheet xmlns="{ns}"><sheetData>
<row r="1"><c r="A1" t="s"><v>0</v></c><c r="B1" t="s"><v>1</v></c><c r="C1" t="s"><v>2</v></c></row>
<row r="2"><c r="A2" t="s"><v>2</v></c><c r="B2" s="1"><v>45306</v></c><c r="D2"><v>7</v></c></row>
</sheetData></worksheet>""")
    return out.getvalue()


def test_foreign_workbook_shared_strings_and_dates():
    table = parse_workbook(_handcrafted_workbook_with_shared_strings_and_date())
    assert table.columns == ["Title", "Date", "run parts"]
    assert table.rows[0]["Title"] == "run parts"
    assert table.rows[0]["Date"] == "2024-01-15"
    # The overlong data row is truncated to the header width.
    assert table.rows[0]["run parts"] == ""

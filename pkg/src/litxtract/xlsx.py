"""Minimal OOXML spreadsheet (.xlsx) reader and writer on the stdlib.

Covers what literature-export workflows need: read the first worksheet of a
workbook (shared strings, inline strings, numbers, booleans, date-styled
numeric cells), and write a single-sheet workbook with a bold header row.
Output is byte-deterministic: zip entries carry a fixed timestamp and no
volatile document properties are emitted.
"""

from __future__ import annotations

import io
import re
import zipfile
from datetime import datetime, timedelta
from xml.etree import ElementTree
from xml.sax.saxutils import escape

from .errors import WorkbookFormatError

_MAIN_NS = "http://schemas.openxmlformats.org/spreadsheetml/2006/main"
_REL_NS = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"
_PKG_REL_NS = "http://schemas.openxmlformats.org/package/2006/relationships"

# Built-in number formats that render as dates/times.
_DATE_NUMFMT_IDS = set(range(14, 23)) | set(range(45, 48))

# Excel's 1900 date system epoch (accounting for the phantom 1900 leap day).
_EXCEL_EPOCH = datetime(1899, 12, 30)


def _tag(name: str) -> str:
    return f"{{{_MAIN_NS}}}{name}"


def _cell_text(elem) -> str:
    """Concatenate all <t> descendants of a shared/inline string element."""
    return "".join(t.text or "" for t in elem.iter(_tag("t")))


def _column_index(ref: str) -> int:
    """0-based column index from a cell reference like 'BC12'."""
    idx = 0
    for ch in ref:
        if ch.isalpha():
            idx = idx * 26 + (ord(ch.upper()) - ord("A") + 1)
        else:
            break
    return idx - 1


def _column_letters(idx: int) -> str:
    letters = ""
    idx += 1
    while idx > 0:
        idx, rem = divmod(idx - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


def _format_number(raw: str) -> str:
    """Locale-independent stringification; integral values lose the '.0'."""
    try:
        value = float(raw)
    except ValueError:
        return raw
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _serial_to_datetime_string(raw: str) -> str:
    serial = float(raw)
    moment = _EXCEL_EPOCH + timedelta(days=serial)
    # Round sub-second noise from the float representation.
    moment += timedelta(microseconds=500000)
    moment = moment.replace(microsecond=0)
    if moment.hour == 0 and moment.minute == 0 and moment.second == 0:
        return moment.date().isoformat()
    return moment.isoformat(sep=" ")


_QUOTED_SECTION = re.compile(r'"[^"]*"|\[[^\]]*\]|\\.')


def _looks_like_date_format(code: str) -> bool:
    stripped = _QUOTED_SECTION.sub("", code)
    return bool(re.search(r"[ymdhs]", stripped, re.IGNORECASE))


class _Styles:
    """Date-format lookup: cell style index -> is the cell date-formatted."""

    def __init__(self, xml: bytes | None):
        self._date_xfs: set[int] = set()
        if xml is None:
            return
        root = ElementTree.fromstring(xml)
        custom_date_ids = set()
        for numfmt in root.iter(_tag("numFmt")):
            code = numfmt.get("formatCode", "")
            if _looks_like_date_format(code):
                custom_date_ids.add(int(numfmt.get("numFmtId", "-1")))
        cell_xfs = root.find(_tag("cellXfs"))
        if cell_xfs is None:
            return
        for i, xf in enumerate(cell_xfs.findall(_tag("xf"))):
            fmt_id = int(xf.get("numFmtId", "0"))
            if fmt_id in _DATE_NUMFMT_IDS or fmt_id in custom_date_ids:
                self._date_xfs.add(i)

    def is_date(self, style_index: str | None) -> bool:
        if style_index is None:
            return False
        try:
            return int(style_index) in self._date_xfs
        except ValueError:
            return False


def _read_zip_member(zf: zipfile.ZipFile, name: str) -> bytes | None:
    try:
        return zf.read(name)
    except KeyError:
        return None


def _first_sheet_path(zf: zipfile.ZipFile) -> str:
    workbook = _read_zip_member(zf, "xl/workbook.xml")
    if workbook is None:
        raise WorkbookFormatError("workbook.xml missing from archive")
    root = ElementTree.fromstring(workbook)
    sheets = root.find(_tag("sheets"))
    if sheets is None or len(sheets) == 0:
        raise WorkbookFormatError("workbook contains no sheets")
    rel_id = sheets[0].get(f"{{{_REL_NS}}}id")

    rels = _read_zip_member(zf, "xl/_rels/workbook.xml.rels")
    if rels is not None and rel_id is not None:
        rel_root = ElementTree.fromstring(rels)
        for rel in rel_root.iter(f"{{{_PKG_REL_NS}}}Relationship"):
            if rel.get("Id") == rel_id:
                target = rel.get("Target", "")
                if target.startswith("/"):
                    return target.lstrip("/")
                return "xl/" + target
    # Fall back to the conventional location.
    return "xl/worksheets/sheet1.xml"


def read_first_sheet(data: bytes) -> list[list[str]]:
    """Parse the first worksheet into rows of stringified cell values.

    Shared strings, inline strings, booleans, numbers, and date-styled
    numeric cells are all rendered as plain strings. Gaps between cell
    references are filled with empty strings. Raises WorkbookFormatError
    when the input is not a readable xlsx archive.
    """
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except (zipfile.BadZipFile, ValueError) as exc:
        raise WorkbookFormatError(f"not a readable xlsx archive: {exc}") from exc

    with zf:
        shared: list[str] = []
        sst_xml = _read_zip_member(zf, "xl/sharedStrings.xml")
        if sst_xml is not None:
            sst_root = ElementTree.fromstring(sst_xml)
            shared = [_cell_text(si) for si in sst_root.iter(_tag("si"))]

        styles = _Styles(_read_zip_member(zf, "xl/styles.xml"))

        sheet_xml = _read_zip_member(zf, _first_sheet_path(zf))
        if sheet_xml is None:
            raise WorkbookFormatError("first worksheet missing from archive")
        try:
            sheet_root = ElementTree.fromstring(sheet_xml)
        except ElementTree.ParseError as exc:
            raise WorkbookFormatError(f"worksheet XML malformed: {exc}") from exc

        rows: list[list[str]] = []
        sheet_data = sheet_root.find(_tag("sheetData"))
        if sheet_data is None:
            return rows
        for row_elem in sheet_data.findall(_tag("row")):
            cells: list[str] = []
            next_col = 0
            for c in row_elem.findall(_tag("c")):
                ref = c.get("r")
                col = _column_index(ref) if ref else next_col
                while len(cells) < col:
                    cells.append("")
                cells.append(_cell_value(c, shared, styles))
                next_col = col + 1
            rows.append(cells)
        return rows


def _cell_value(c, shared: list[str], styles: _Styles) -> str:
    ctype = c.get("t", "n")
    if ctype == "inlineStr":
        inline = c.find(_tag("is"))
        return _cell_text(inline) if inline is not None else ""
    v = c.find(_tag("v"))
    raw = v.text or "" if v is not None else ""
    if raw == "":
        return ""
    if ctype == "s":
        try:
            return shared[int(raw)]
        except (ValueError, IndexError):
            return ""
    if ctype == "b":
        return "true" if raw == "1" else "false"
    if ctype in ("str", "e"):
        return raw
    # Numeric cell: render date-styled serials as ISO strings.
    if styles.is_date(c.get("s")):
        try:
            return _serial_to_datetime_string(raw)
        except ValueError:
            return raw
    return _format_number(raw)


# --- writing -----------------------------------------------------------------

_CONTENT_TYPES = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
<Default Extension="xml" ContentType="application/xml"/>
<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>
<Override PartName="/xl/worksheets/sheet1.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>
<Override PartName="/xl/styles.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml"/>
</Types>"""

_ROOT_RELS = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="xl/workbook.xml"/>
</Relationships>"""

_WORKBOOK_RELS = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/sheet1.xml"/>
<Relationship Id="rId2" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/styles" Target="styles.xml"/>
</Relationships>"""

_STYLES = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<styleSheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main">
<fonts count="2"><font><sz val="11"/><name val="Calibri"/></font><font><b/><sz val="11"/><name val="Calibri"/></font></fonts>
<fills count="2"><fill><patternFill patternType="none"/></fill><fill><patternFill patternType="gray125"/></fill></fills>
<borders count="1"><border/></borders>
<cellStyleXfs count="1"><xf numFmtId="0" fontId="0"/></cellStyleXfs>
<cellXfs count="2"><xf numFmtId="0" fontId="0" xfId="0"/><xf numFmtId="0" fontId="1" xfId="0" applyFont="1"/></cellXfs>
</styleSheet>"""


def _workbook_xml(sheet_name: str) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        f'<workbook xmlns="{_MAIN_NS}" xmlns:r="{_REL_NS}">'
        f'<sheets><sheet name="{escape(sheet_name, {chr(34): "&quot;"})}" sheetId="1" r:id="rId1"/></sheets>'
        "</workbook>"
    )


def _cell_xml(ref: str, value, header: bool) -> str:
    style = ' s="1"' if header else ""
    if value is None:
        value = ""
    if isinstance(value, bool):
        value = "true" if value else "false"
    if isinstance(value, (int, float)):
        return f'<c r="{ref}"{style}><v>{value}</v></c>'
    text = escape(str(value))
    return f'<c r="{ref}" t="inlineStr"{style}><is><t xml:space="preserve">{text}</t></is></c>'


def write_workbook(header: list[str], rows: list[list], *, bold_header: bool = True,
                   sheet_name: str = "Sheet1") -> bytes:
    """Build a single-sheet xlsx workbook.

    Strings become inline-string cells, ints/floats numeric cells, booleans
    the strings "true"/"false". The header row is bold unless disabled.
    """
    parts = ["<sheetData>"]
    for r, cells in enumerate([list(header)] + [list(row) for row in rows]):
        parts.append(f'<row r="{r + 1}">')
        for col, value in enumerate(cells):
            ref = f"{_column_letters(col)}{r + 1}"
            parts.append(_cell_xml(ref, value, header=bold_header and r == 0))
        parts.append("</row>")
    parts.append("</sheetData>")
    sheet = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        f'<worksheet xmlns="{_MAIN_NS}">' + "".join(parts) + "</worksheet>"
    )

    members = [
        ("[Content_Types].xml", _CONTENT_TYPES),
        ("_rels/.rels", _ROOT_RELS),
        ("xl/workbook.xml", _workbook_xml(sheet_name)),
        ("xl/_rels/workbook.xml.rels", _WORKBOOK_RELS),
        ("xl/styles.xml", _STYLES),
        ("xl/worksheets/sheet1.xml", sheet),
    ]
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, content in members:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, content)
    return buf.getvalue()

"""Parse CSV and xlsx literature exports into a normalized in-memory table.

Exports from CNKI/Wanfang and similar databases arrive as comma-separated
UTF-8 text (often with a BOM) or as OOXML workbooks. Both paths produce the
same rectangular Table: unique column names, one string value per column per
row, source column order preserved.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

from . import xlsx
from .errors import CsvSyntaxError, EmptyFileError, NoColumnsError

logger = logging.getLogger(__name__)

_BOM = b"\xef\xbb\xbf"


@dataclass
class Table:
    """Parsed tabular dataset: ordered unique columns plus string-cell rows."""

    source_name: str
    columns: list[str]
    rows: list[dict[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)


def normalize_columns(raw: list[str]) -> list[str]:
    """Unique column names: blanks become column_N, duplicates get _2, _3, ..."""
    seen: dict[str, int] = {}
    out: list[str] = []
    for i, name in enumerate(raw):
        name = name.strip() or f"column_{i + 1}"
        if name not in seen:
            seen[name] = 1
            out.append(name)
            continue
        seen[name] += 1
        candidate = f"{name}_{seen[name]}"
        while candidate in seen:
            seen[name] += 1
            candidate = f"{name}_{seen[name]}"
        seen[candidate] = 1
        out.append(candidate)
    return out


def build_table(source_name: str, header: list[str], data_rows: list[list[str]]) -> Table:
    """Assemble a rectangular Table from a raw header and raw rows."""
    if not any(cell.strip() for cell in header):
        raise NoColumnsError(f"{source_name or 'input'}: header row has no column names")
    columns = normalize_columns(header)
    width = len(columns)
    rows: list[dict[str, str]] = []
    for i, raw in enumerate(data_rows):
        if len(raw) > width:
            logger.warning("%s: row %d has %d cells, truncating to %d columns",
                           source_name or "input", i + 2, len(raw), width)
            raw = raw[:width]
        elif len(raw) < width:
            raw = raw + [""] * (width - len(raw))
        rows.append(dict(zip(columns, raw)))
    return Table(source_name=source_name, columns=columns, rows=rows)


def parse_csv(data: bytes, source_name: str = "") -> Table:
    """Parse UTF-8 CSV bytes (optional BOM) into a Table.

    The first line is the header. Standard double-quote quoting with embedded
    commas and newlines is supported; CRLF and LF both accepted.
    """
    if not data:
        raise EmptyFileError(f"{source_name or 'input'}: no bytes to parse")
    if data.startswith(_BOM):
        data = data[len(_BOM):]
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise CsvSyntaxError(f"not valid UTF-8 ({exc.reason})", line) from exc
    if not text.strip():
        raise EmptyFileError(f"{source_name or 'input'}: file contains no data")

    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        records = [row for row in reader if row]
    except csv.Error as exc:
        raise CsvSyntaxError(str(exc), reader.line_num) from exc
    if not records:
        raise EmptyFileError(f"{source_name or 'input'}: file contains no data")
    return build_table(source_name, records[0], records[1:])


def parse_workbook(data: bytes, source_name: str = "") -> Table:
    """Parse the first worksheet of an xlsx workbook into a Table.

    The first row of the first sheet is the header; numeric and date cells
    are stringified with locale-independent formatting.
    """
    raw_rows = xlsx.read_first_sheet(data)
    raw_rows = [row for row in raw_rows if any(cell != "" for cell in row)]
    if not raw_rows:
        raise NoColumnsError(f"{source_name or 'workbook'}: first sheet is empty")
    return build_table(source_name, raw_rows[0], raw_rows[1:])

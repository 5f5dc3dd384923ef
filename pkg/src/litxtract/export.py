"""Export merged original and extracted data to CSV, JSON, or xlsx.

CSV output carries a UTF-8 BOM so spreadsheet applications detect Chinese
text correctly; JSON output is a pretty-printed array of row objects with
key order following the column order; xlsx output is a single sheet with a
bold header row.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from . import xlsx
from .engine import PENDING, SUCCESS, RecordResult
from .errors import NothingToExportError
from .ingest import Table
from .schema import ExtractionField

MODE_ALL_COLUMNS = "all_columns"
MODE_EXTRACTED_ONLY = "extracted_only"
FORMAT_CSV = "csv"
FORMAT_JSON = "json"
FORMAT_XLSX = "xlsx"

STATUS_COLUMN = "status"
ERROR_COLUMN = "error"

MEDIA_TYPES = {
    FORMAT_CSV: "text/csv; charset=utf-8",
    FORMAT_JSON: "application/json; charset=utf-8",
    FORMAT_XLSX: "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
}


@dataclass
class ExportJob:
    mode: str = MODE_ALL_COLUMNS
    format: str = FORMAT_CSV
    include_status: bool = False

    def __post_init__(self):
        if self.mode not in (MODE_ALL_COLUMNS, MODE_EXTRACTED_ONLY):
            raise ValueError(f"unknown export mode {self.mode!r}")
        if self.format not in (FORMAT_CSV, FORMAT_JSON, FORMAT_XLSX):
            raise ValueError(f"unknown export format {self.format!r}")


def render_cell(value) -> str:
    """Flat string rendering for CSV/xlsx cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else str(value)
    if isinstance(value, list):
        return "; ".join(render_cell(item) for item in value)
    return str(value)


def _header(table: Table, fields: list[ExtractionField], job: ExportJob) -> list[str]:
    columns: list[str] = []
    if job.mode == MODE_ALL_COLUMNS:
        columns.extend(table.columns)
    columns.extend(f.name for f in fields)
    if job.include_status:
        columns.extend([STATUS_COLUMN, ERROR_COLUMN])
    return columns


def _row_values(table: Table, fields: list[ExtractionField], job: ExportJob,
                row_index: int, result: RecordResult | None) -> dict:
    values: dict = {}
    if job.mode == MODE_ALL_COLUMNS:
        values.update(table.rows[row_index])
    for f in fields:
        if result is not None and result.status == SUCCESS:
            values[f.name] = result.extracted.get(f.name, "")
        else:
            values[f.name] = ""
    if job.include_status:
        values[STATUS_COLUMN] = result.status if result is not None else PENDING
        values[ERROR_COLUMN] = (result.error or "") if result is not None else ""
    return values


def export(table: Table, results: list[RecordResult], fields: list[ExtractionField],
           job: ExportJob) -> bytes:
    """Serialize the table merged with extraction results.

    One output row per table row; rows without a successful result export
    empty extracted cells (plus status/error columns when enabled).
    """
    if job.mode == MODE_EXTRACTED_ONLY and not results:
        raise NothingToExportError("no extraction results to export")

    by_index = {r.row_index: r for r in results}
    header = _header(table, fields, job)
    rows = [_row_values(table, fields, job, i, by_index.get(i))
            for i in range(len(table.rows))]

    if job.format == FORMAT_CSV:
        return _to_csv(header, rows)
    if job.format == FORMAT_JSON:
        return _to_json(header, rows)
    return _to_xlsx(header, rows)


def _to_csv(header: list[str], rows: list[dict]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([render_cell(row[col]) for col in header])
    return buf.getvalue().encode("utf-8-sig")


def _to_json(header: list[str], rows: list[dict]) -> bytes:
    payload = [{col: row[col] for col in header} for row in rows]
    return json.dumps(payload, ensure_ascii=False, indent=2).encode("utf-8")


def _to_xlsx(header: list[str], rows: list[dict]) -> bytes:
    def cell(value):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return value
        return render_cell(value)

    grid = [[cell(row[col]) for col in header] for row in rows]
    return xlsx.write_workbook(header, grid)

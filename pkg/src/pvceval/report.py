"""Metric report container and its CSV / JSON / console renderings.

CSV and JSON outputs are lossless (full float precision, repr round-trip)
and deterministic; the console rendering shows two decimals like the
published tables. A report parsed from its own CSV re-emits byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ParseError

MAGIC = "# pvceval-report v1"


@dataclass
class MetricReport:
    experiment_id: str
    columns: list  # cell columns, first row field is always "row"
    rows: list = field(default_factory=list)  # per-speaker dicts: {"row": label, col: value}
    aggregates: list = field(default_factory=list)  # same shape, e.g. Average / r_GT rows
    provenance: dict = field(default_factory=dict)

    def all_rows(self):
        return list(self.rows) + list(self.aggregates)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return repr(float(value))
    return str(value)


def _parse_cell(text: str):
    if text == "":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return float(text)
    except ValueError:
        return text


def render_csv(report: MetricReport) -> str:
    lines = [MAGIC, f"# experiment = {report.experiment_id}"]
    for key, value in report.provenance.items():
        lines.append(f"# {key} = {value}")
    lines.append(f"# aggregate_rows = {len(report.aggregates)}")
    lines.append(",".join(["row"] + list(report.columns)))
    for row in report.all_rows():
        cells = [str(row["row"])] + [_format_cell(row.get(col)) for col in report.columns]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> MetricReport:
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise ParseError("not a pvceval report (bad magic line)")
    experiment_id = ""
    provenance = {}
    n_aggregates = 0
    i = 1
    while i < len(lines) and lines[i].startswith("# "):
        key, _, value = lines[i][2:].partition(" = ")
        if key == "experiment":
            experiment_id = value
        elif key == "aggregate_rows":
            n_aggregates = int(value)
        else:
            provenance[key] = value
        i += 1
    if i >= len(lines):
        raise ParseError("report has no header row")
    header = lines[i].split(",")
    if header[0] != "row":
        raise ParseError("report header must start with 'row'")
    columns = header[1:]
    parsed_rows = []
    for line in lines[i + 1 :]:
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise ParseError(f"row {line!r} has {len(cells)} cells, expected {len(header)}")
        row = {"row": cells[0]}
        for col, cell in zip(columns, cells[1:]):
            row[col] = _parse_cell(cell)
        parsed_rows.append(row)
    split = len(parsed_rows) - n_aggregates
    return MetricReport(
        experiment_id=experiment_id,
        columns=columns,
        rows=parsed_rows[:split],
        aggregates=parsed_rows[split:],
        provenance=provenance,
    )


def render_json(report: MetricReport) -> str:
    doc = {
        "experiment": report.experiment_id,
        "provenance": report.provenance,
        "columns": list(report.columns),
        "rows": report.rows,
        "aggregates": report.aggregates,
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def render_table(report: MetricReport) -> str:
    """Two-decimal console table (lossy; files keep full precision)."""

    def show(value):
        if value is None:
            return ""
        if isinstance(value, bool):
            return "*" if value else ""
        if isinstance(value, float):
            return f"{value:.2f}"
        return str(value)

    header = ["row"] + list(report.columns)
    body = [[str(r["row"])] + [show(r.get(c)) for c in report.columns] for r in report.all_rows()]
    widths = [max(len(line[k]) for line in [header] + body) for k in range(len(header))]
    out = []
    out.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    out.append("  ".join("-" * w for w in widths))
    for k, line in enumerate(body):
        if k == len(report.rows) and report.aggregates:
            out.append("  ".join("-" * w for w in widths))
        out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)))
    return "\n".join(out) + "\n"

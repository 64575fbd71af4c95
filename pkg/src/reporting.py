"""CSV / JSON emission of result tables.

Values are rendered with a fixed number of significant digits so that two
runs with the same configuration produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional, TextIO

from src.errors import DomainError
from src.models import SweepResult

SIGNIFICANT_DIGITS = 10
FORMATS = ("csv", "json")


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, f".{SIGNIFICANT_DIGITS}g")
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(format(value, f".{SIGNIFICANT_DIGITS}g"))
    if hasattr(value, "item"):  # numpy scalar
        return _json_value(value.item())
    return str(value)


def render_csv(table: SweepResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def render_json(table: SweepResult) -> str:
    payload = {
        "columns": list(table.columns),
        "rows": [[_json_value(v) for v in row] for row in table.rows],
        "meta": {k: _json_value(v) for k, v in table.meta.items()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render(table: SweepResult, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(table)
    if fmt == "json":
        return render_json(table)
    raise DomainError(f"unknown output format {fmt!r}; expected one of {FORMATS}")


def write_table(table: SweepResult, fmt: str = "csv", path: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
    """Write ``table`` to ``path`` (UTF-8, LF) or to ``stream`` / stdout."""
    text = render(table, fmt)
    if path:
        target = Path(path)
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return
    (stream or sys.stdout).write(text)

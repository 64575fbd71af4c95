"""Tests for src/reporting.py."""
from __future__ import annotations

import csv
import io
import json
import math

import pytest

from src.errors import DomainError
from src.models import SweepResult
from src.reporting import format_value, render, render_csv, render_json, write_table


@pytest.fixture
def table():
    result = SweepResult(columns=("alpha", "ber", "threshold", "note"), meta={"seed": 7, "t_s": 0.15})
    result.add_row(math.pi, 0.012345678912345, 12, None)
    result.add_row(0.5, math.inf, 3, "boundary")
    return result


class TestFormatValue:
    def test_significant_digits(self):
        assert format_value(math.pi) == "3.141592654"

    def test_special_values(self):
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value(7) == "7"
        assert format_value(math.nan) == "nan"
        assert format_value(-math.inf) == "-inf"


class TestRender:
    def test_csv(self, table):
        assert render_csv(table) == (
            "alpha,ber,threshold,note\n"
            "3.141592654,0.01234567891,12,\n"
            "0.5,inf,3,boundary\n"
        )

    def test_json(self, table):
        payload = json.loads(render_json(table))
        assert payload["columns"] == ["alpha", "ber", "threshold", "note"]
        assert payload["rows"][0] == [3.141592654, 0.01234567891, 12, None]
        assert payload["rows"][1][1] is None
        assert payload["meta"] == {"seed": 7, "t_s": 0.15}

    def test_unknown_format(self, table):
        with pytest.raises(DomainError):
            render(table, "xml")

    def test_row_width_checked(self, table):
        with pytest.raises(ValueError):
            table.add_row(1.0, 2.0)


class TestWriteTable:
    def test_stream(self, table):
        buffer = io.StringIO()
        write_table(table, "csv", stream=buffer)
        assert buffer.getvalue() == render_csv(table)

    def test_file_creates_parents(self, table, tmp_path):
        path = tmp_path / "nested" / "out.csv"
        write_table(table, "csv", str(path))
        assert path.read_bytes() == render_csv(table).encode("utf-8")
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[1]["note"] == "boundary"

    def test_repeat_is_byte_identical(self, table, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        write_table(table, "json", str(first))
        write_table(table, "json", str(second))
        assert first.read_bytes() == second.read_bytes()

"""Deterministic table emission (CSV / JSON)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import OutputError, ValidationError

FORMATS = ("csv", "json")


@dataclass
class Table:
    columns: Sequence[str]
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValidationError(f"row {i} has {len(row)} cells, expected {width}")

    def add(self, *cells):
        if len(cells) != len(self.columns):
            raise ValidationError(f"expected {len(self.columns)} cells, got {len(cells)}")
        self.rows.append(tuple(cells))

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def _plain(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if hasattr(value, "value"):  # enums
        return value.value
    return value


def _csv_cell(value) -> str:
    value = _plain(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def render_csv(table: Table) -> str:
    lines = [",".join(table.columns)]
    lines += [",".join(_csv_cell(c) for c in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def _json_cell(value):
    value = _plain(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_json(table: Table) -> str:
    body = {name: [_json_cell(row[i]) for row in table.rows] for i, name in enumerate(table.columns)}
    return json.dumps({"columns": list(table.columns), "data": body}, indent=1, allow_nan=False) + "\n"


def emit(table: Table, fmt: str, path) -> None:
    """Write ``table`` as CSV (17 significant digits, LF) or column-wise JSON."""
    if fmt not in FORMATS:
        raise ValidationError(f"format must be one of {FORMATS}, got {fmt!r}")
    text = render_csv(table) if fmt == "csv" else render_json(table)
    write_text(path, text)


def write_text(path, text: str) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc

"""Report emission with byte-stable formatting.

Rows are flat dicts sharing one key set. Floats are written with 17
significant digits so every value survives a parse round trip, rows are
sorted on all columns in order, and files end with a newline; two runs
over identical inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math

from ..errors import ConfigurationError


def format_float(value: float) -> str:
    return f"{value:.17g}"


def _sort_key(row: dict):
    key = []
    for value in row.values():
        if isinstance(value, str):
            key.append((1, 0, value))
        elif isinstance(value, float) and math.isnan(value):
            # group NaNs last among numbers, deterministically
            key.append((0, 1, 0.0))
        else:
            key.append((0, 0, float(value)))
    return tuple(key)


def sort_rows(rows: list) -> list:
    return sorted(rows, key=_sort_key)


def emit_report(rows: list, path: str, fmt: str = "csv"):
    """Write rows to path as CSV or JSON.

    All rows must share the key set of the first row, in the same order;
    rows are sorted before writing.
    """
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"format must be csv or json, got {fmt!r}")
    if not rows:
        raise ConfigurationError("refusing to emit an empty report")
    header = list(rows[0].keys())
    for row in rows:
        if list(row.keys()) != header:
            raise ConfigurationError(
                f"row keys {list(row.keys())} do not match header {header}"
            )
    ordered = sort_rows(rows)

    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in ordered:
                writer.writerow(
                    [
                        format_float(v) if isinstance(v, float) else str(v)
                        for v in row.values()
                    ]
                )
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(ordered, fh, indent=2)
            fh.write("\n")


def load_report(path: str) -> list:
    """Read a report back as a list of dicts, parsing numeric fields."""
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            row = {}
            for key, text in raw.items():
                try:
                    row[key] = int(text)
                except (TypeError, ValueError):
                    try:
                        row[key] = float(text)
                    except (TypeError, ValueError):
                        row[key] = text
            rows.append(row)
    return rows

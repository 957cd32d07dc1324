import csv
import math
from pathlib import Path


def _number_or_text(raw):
    try:
        return float(raw)
    except ValueError:
        return raw


def read_scan(path: Path):
    """Header entries and rows of a scan CSV, with numeric cells as floats.

    Empty cells of string columns stay empty strings.
    """
    lines = Path(path).read_text().splitlines()
    header = {}
    while lines and lines[0].startswith("#"):
        key, _, value = lines.pop(0)[1:].partition(":")
        header[key.strip()] = _number_or_text(value.strip())
    rows = [
        {key: _number_or_text(value) if value else "" for key, value in row.items()}
        for row in csv.DictReader(lines)
    ]
    return header, rows


def column(rows, name):
    return [row[name] for row in rows]


def finite(values):
    return all(isinstance(v, float) and math.isfinite(v) for v in values)

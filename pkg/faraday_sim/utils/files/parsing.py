import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import structlog

from faraday_sim.exceptions.files import TraceFileError, TraceSchemaError
from faraday_sim.utils.files.constants import TRACE_COLUMNS

log = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class TraceData:
    """Columns and `# key: value` header entries of a CSV file."""

    path: Path
    header: Dict[str, str]
    columns: Dict[str, np.ndarray]

    def __getitem__(self, column: str) -> np.ndarray:
        return self.columns[column]

    def header_float(self, key: str) -> float:
        if key not in self.header:
            raise TraceSchemaError(f"{self.path}: header entry '{key}' is missing")
        try:
            return float(self.header[key])
        except ValueError:
            raise TraceSchemaError(
                f"{self.path}: header entry '{key}' is not a number: {self.header[key]!r}"
            ) from None

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values())))


def _parse_header_line(line: str) -> tuple:
    key, _, value = line[1:].strip().partition(":")
    return key.strip(), value.strip()


def read_numeric_csv(path: Path, required: Sequence[str], min_rows: int = 1) -> TraceData:
    """Read a comment-headed numeric CSV and check it against `required` columns.

    :raises TraceSchemaError: naming the offending line and column.
    :raises TraceFileError: if the file cannot be read.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except (OSError, UnicodeDecodeError) as ex:
        raise TraceFileError(f"Could not read {path}: {ex}") from ex

    header: Dict[str, str] = {}
    first_data = 0
    for first_data, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, value = _parse_header_line(line)
        header[key] = value
    else:
        first_data = len(lines)

    body = list(csv.reader(lines[first_data:]))
    if not body:
        raise TraceSchemaError(f"{path}: no column header line")
    names = [name.strip() for name in body[0]]
    missing = [name for name in required if name not in names]
    unknown = [name for name in names if name not in required]
    if missing or unknown:
        problems = []
        if missing:
            problems.append(f"missing column(s) {', '.join(missing)}")
        if unknown:
            problems.append(f"unknown column(s) {', '.join(unknown)}")
        raise TraceSchemaError(f"{path}: {'; '.join(problems)}")

    values: List[List[float]] = [[] for _ in names]
    for offset, row in enumerate(body[1:]):
        line_number = first_data + offset + 2
        if not row:
            continue
        if len(row) != len(names):
            raise TraceSchemaError(
                f"{path}, line {line_number}: expected {len(names)} values, got {len(row)}"
            )
        for index, raw in enumerate(row):
            try:
                values[index].append(float(raw))
            except ValueError:
                raise TraceSchemaError(
                    f"{path}, line {line_number}, column '{names[index]}': "
                    f"{raw!r} is not a number"
                ) from None

    n_rows = len(values[0])
    if n_rows < min_rows:
        raise TraceSchemaError(f"{path}: {n_rows} data row(s), need at least {min_rows}")
    return TraceData(
        path=path,
        header=header,
        columns={name: np.array(column) for name, column in zip(names, values)},
    )


def read_trace_csv(path: Path) -> TraceData:
    """Read a trace file written by the `simulate` command.

    Besides the column schema, times must be finite and strictly increasing.
    """
    data = read_numeric_csv(path, TRACE_COLUMNS, min_rows=2)
    times = data["time"]
    if not np.all(np.isfinite(times)):
        raise TraceSchemaError(f"{path}, column 'time': non-finite values")
    decreasing = np.nonzero(np.diff(times) <= 0)[0]
    if len(decreasing):
        raise TraceSchemaError(
            f"{path}, column 'time': not strictly increasing at data row {int(decreasing[0]) + 2}"
        )
    for column in ("fx", "fz", "trace", "signal_noisy"):
        if not np.all(np.isfinite(data[column])):
            raise TraceSchemaError(f"{path}, column '{column}': non-finite values")
    if math.isnan(data.header_float("larmor_frequency")):
        raise TraceSchemaError(f"{path}: header entry 'larmor_frequency' is nan")
    return data

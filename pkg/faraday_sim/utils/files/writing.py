import csv
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Sequence

import numpy as np
import structlog

from faraday_sim.exceptions.files import TraceFileError

log = structlog.get_logger(__name__)

#: 17 significant digits, enough to read every double back exactly.
FLOAT_FORMAT = "%.16e"


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return FLOAT_FORMAT % value
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def write_csv(
    path: Path, columns: Sequence[str], rows: Sequence[Sequence[Any]], header: Dict[str, Any]
) -> Path:
    """Write `rows` below `# key: value` comment lines and a column header.

    The output depends on its inputs only, so identical runs give identical files.

    :raises TraceFileError: if the file cannot be written.
    """
    path = Path(path)
    try:
        with path.open("w", newline="") as f:
            for key, value in header.items():
                f.write(f"# {key}: {format_value(value)}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise TraceFileError(
                        f"Row with {len(row)} values for {len(columns)} columns in {path}"
                    )
                writer.writerow([format_value(value) for value in row])
    except OSError as ex:
        raise TraceFileError(f"Could not write {path}: {ex}") from ex
    return path

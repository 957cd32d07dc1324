from faraday_sim.utils.files.constants import TRACE_COLUMNS
from faraday_sim.utils.files.parsing import read_numeric_csv, read_trace_csv
from faraday_sim.utils.files.writing import format_value, write_csv

__all__ = [
    "TRACE_COLUMNS",
    "format_value",
    "read_numeric_csv",
    "read_trace_csv",
    "write_csv",
]

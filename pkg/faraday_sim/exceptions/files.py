from faraday_sim.exceptions import FaradaySimError


class TraceFileError(FaradaySimError):
    """A trace file could not be read or written."""

    exit_code = 3


class TraceSchemaError(TraceFileError):
    """The columns or values of a trace file do not match the trace schema."""

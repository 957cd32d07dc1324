import math
from pathlib import Path
from typing import List, Optional

import numpy as np
import structlog

from faraday_sim.analysis import DecayFit, EnvelopeMethod, extract_envelope
from faraday_sim.exceptions.files import TraceSchemaError
from faraday_sim.runner import FitReport, analyse_envelope, in_units_of
from faraday_sim.signal import SignalTrace
from faraday_sim.tasks.base import Task
from faraday_sim.utils.files.constants import FIT_COLUMNS, FIT_FILENAME
from faraday_sim.utils.files.parsing import TraceData, read_trace_csv

log = structlog.get_logger(__name__)


def signal_from_trace(data: TraceData) -> SignalTrace:
    """The trial-averaged signal of a trace file, with its transverse magnitude."""
    gain = data.header_float("rotation_gain")
    return SignalTrace(
        times=data["time"],
        mean_signal=data["signal_noisy"],
        sigma=np.zeros(data.n_rows),
        transverse=abs(gain) * np.hypot(data["fx"], data["fz"]) * data["trace"],
    )


def envelope_method_of(data: TraceData, override: Optional[str]) -> EnvelopeMethod:
    value = override or data.header.get("envelope_method")
    if value is None:
        raise TraceSchemaError(f"{data.path}: header entry 'envelope_method' is missing")
    try:
        return EnvelopeMethod(value)
    except ValueError:
        raise TraceSchemaError(f"{data.path}: unknown envelope method {value!r}") from None


def expected_revival_of(data: TraceData) -> Optional[float]:
    """Predicted revival time from the header; traces without one search the default window."""
    if "expected_revival_time" not in data.header:
        return None
    return data.header_float("expected_revival_time")


def _fit_values(fit: Optional[DecayFit]) -> List:
    if fit is None:
        return [math.nan, math.nan, False]
    return [fit.timescale, fit.residual_rms, fit.reliable]


def fit_row(report: FitReport, tau_s: float) -> List:
    comparison = report.comparison
    revival = report.revival
    row = [
        report.one_over_e_time,
        in_units_of(report.one_over_e_time, tau_s),
        comparison.winner.value if comparison else "",
        comparison.residual_ratio if comparison else math.nan,
        *_fit_values(comparison.gaussian if comparison else None),
        *_fit_values(comparison.exponential if comparison else None),
    ]
    if revival is None:
        row += [math.nan, math.nan, math.nan, math.nan, math.nan, False]
    else:
        row += [
            revival.t_revival,
            in_units_of(revival.t_revival, tau_s),
            revival.revival_amplitude_ratio,
            revival.revival_collapse_time,
            in_units_of(revival.revival_collapse_time, tau_s),
            revival.at_boundary,
        ]
    row.append("; ".join(report.warnings))
    return row


class FitTask(Task):
    """Re-analyse a stored trace file and write a one-row fit report."""

    _name = "fit"

    def _run(self, trace_path: Path, envelope_method: Optional[str] = None) -> Path:
        data = read_trace_csv(trace_path)
        method = envelope_method_of(data, envelope_method)
        envelope = extract_envelope(
            signal_from_trace(data), data.header_float("larmor_frequency"), method
        )
        analysis = self._config.analysis
        report = analyse_envelope(
            envelope,
            analysis.fit_window,
            analysis.revival_window_start,
            expected_revival=expected_revival_of(data),
        )
        tau_s = data.header_float("scattering_time")
        return self._runner.write_output(
            FIT_FILENAME,
            FIT_COLUMNS,
            [fit_row(report, tau_s)],
            source=Path(trace_path).name,
            source_digest=data.header.get("config_digest", ""),
            scattering_time=tau_s,
            envelope_method=method.value,
        )

"""Envelope extraction, decay fits and collapse/revival timing.

All reported times are measured from the start of the trace (`Envelope.origin`).
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.optimize import least_squares
from scipy.signal import filtfilt, find_peaks

from faraday_sim.constants import (
    DEMOD_CUTOFF_FRACTION,
    DEMOD_SETTLING_TIME_CONSTANTS,
    MIN_SAMPLES_PER_PERIOD_DEMOD,
)
from faraday_sim.exceptions import (
    EmptyWindowError,
    EnvelopeError,
    FitError,
    UndersampledGridError,
)
from faraday_sim.signal import SignalTrace

log = structlog.get_logger(__name__)

MIN_FIT_POINTS = 10
#: Fits with a residual RMS above this fraction of the amplitude are unreliable.
RELIABLE_RESIDUAL_FRACTION = 0.2
#: Samples below this fraction of the peak are left out of the log-linear guess.
LOG_GUESS_FLOOR = 1e-3


class EnvelopeMethod(Enum):
    QUADRATURE_DEMOD = "quadrature_demod"
    PEAK_DETECT = "peak_detect"
    TRANSVERSE = "transverse"


class DecayModel(Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True, eq=False)
class Envelope:
    times: np.ndarray
    magnitude: np.ndarray
    method: EnvelopeMethod
    #: Start of the trace; all analysis times are relative to it.
    origin: float = 0.0
    #: Values before this time are affected by filter settling.
    valid_from: float = 0.0

    def __post_init__(self):
        if len(self.times) != len(self.magnitude):
            raise EnvelopeError(
                f"Envelope has {len(self.times)} times and {len(self.magnitude)} values"
            )
        if len(self.times) == 0:
            raise EnvelopeError("Envelope is empty")
        if np.any(np.diff(self.times) <= 0):
            raise EnvelopeError("Envelope times must be strictly increasing")
        if np.any(self.magnitude < 0):
            raise EnvelopeError("Envelope magnitude must be non-negative")

    def trimmed(self) -> "Envelope":
        """The part of the envelope unaffected by filter settling."""
        keep = self.times >= self.valid_from
        if not np.any(keep):
            raise EnvelopeError(
                f"Filter settling ({self.valid_from - self.origin:.3e} s) covers the whole trace"
            )
        return replace(self, times=self.times[keep], magnitude=self.magnitude[keep])

    @property
    def relative_times(self) -> np.ndarray:
        return self.times - self.origin


@dataclass(frozen=True)
class DecayFit:
    model: DecayModel
    amplitude: float
    timescale: float
    one_over_e_time: float
    residual_rms: float
    success: bool
    reliable: bool = False
    message: str = ""


@dataclass(frozen=True)
class RevivalReport:
    t_revival: float
    revival_amplitude_ratio: float
    revival_collapse_time: float
    at_boundary: bool = False


@dataclass(frozen=True)
class ModelComparison:
    winner: DecayModel
    residual_ratio: float
    gaussian: DecayFit
    exponential: DecayFit


def _uniform_step(times: np.ndarray) -> float:
    steps = np.diff(times)
    step = float(np.mean(steps))
    if np.max(np.abs(steps - step)) > 1e-6 * step:
        raise EnvelopeError("Quadrature demodulation needs a uniform time grid")
    return step


def _demodulate(trace: SignalTrace, larmor_frequency: Optional[float]) -> Envelope:
    if not larmor_frequency or larmor_frequency <= 0:
        raise EnvelopeError("Quadrature demodulation needs a positive Larmor frequency")
    if len(trace.times) < 2:
        raise UndersampledGridError("Quadrature demodulation needs at least two samples")
    step = _uniform_step(trace.times)
    samples_per_period = 2 * math.pi / (larmor_frequency * step)
    if samples_per_period < MIN_SAMPLES_PER_PERIOD_DEMOD:
        raise UndersampledGridError(
            f"Grid has {samples_per_period:.2f} samples per Larmor period, "
            f"demodulation needs at least {MIN_SAMPLES_PER_PERIOD_DEMOD}"
        )

    cutoff = DEMOD_CUTOFF_FRACTION * larmor_frequency
    pole = math.exp(-cutoff * step)
    numerator, denominator = [1 - pole], [1, -pole]
    settle_samples = math.ceil(DEMOD_SETTLING_TIME_CONSTANTS / (cutoff * step))
    padlen = min(len(trace.times) - 1, settle_samples)

    phase = larmor_frequency * trace.times
    in_phase = filtfilt(
        numerator, denominator, trace.mean_signal * np.cos(phase), padtype="even", padlen=padlen
    )
    quadrature = filtfilt(
        numerator, denominator, trace.mean_signal * np.sin(phase), padtype="even", padlen=padlen
    )
    return Envelope(
        times=trace.times,
        magnitude=2 * np.hypot(in_phase, quadrature),
        method=EnvelopeMethod.QUADRATURE_DEMOD,
        origin=float(trace.times[0]),
        valid_from=float(trace.times[0]) + DEMOD_SETTLING_TIME_CONSTANTS / cutoff,
    )


def _parabolic_peak(values: np.ndarray, index: int) -> Tuple[float, float]:
    """Sub-sample offset and height of the parabola through three samples."""
    left, centre, right = values[index - 1], values[index], values[index + 1]
    curvature = left - 2 * centre + right
    if curvature == 0:
        return 0.0, float(centre)
    offset = 0.5 * (left - right) / curvature
    return float(offset), float(centre - 0.25 * (left - right) * offset)


def _peak_detect(trace: SignalTrace) -> Envelope:
    rectified = np.abs(trace.mean_signal)
    origin = float(trace.times[0])
    if not np.any(rectified):
        return Envelope(trace.times, rectified, EnvelopeMethod.PEAK_DETECT, origin, origin)

    interior = np.arange(1, len(rectified) - 1)
    is_peak = (rectified[interior] > rectified[interior - 1]) & (
        rectified[interior] >= rectified[interior + 1]
    )
    peaks = interior[is_peak]
    if len(peaks) == 0:
        raise EnvelopeError("Signal has no local maxima to follow")

    step = _uniform_step(trace.times) if len(trace.times) > 2 else 0.0
    times, heights = [], []
    for index in peaks:
        offset, height = _parabolic_peak(rectified, index)
        times.append(trace.times[index] + offset * step)
        heights.append(max(height, 0.0))
    return Envelope(
        times=np.array(times),
        magnitude=np.array(heights),
        method=EnvelopeMethod.PEAK_DETECT,
        origin=origin,
        valid_from=origin,
    )


def extract_envelope(
    trace: SignalTrace, larmor_frequency: Optional[float], method: EnvelopeMethod
) -> Envelope:
    """Envelope of the precession signal.

    quadrature_demod mixes with cos/sin(Omega_L t), low-passes both arms with a
    zero-phase single-pole filter at Omega_L/5 and returns 2 sqrt(I^2 + Q^2);
    peak_detect follows the interpolated maxima of |signal|; transverse uses
    the transverse-spin magnitude carried by the trace.

    :raises UndersampledGridError: for fewer than 8 samples per Larmor period.
    :raises EnvelopeError: if the method lacks its inputs.
    """
    if method is EnvelopeMethod.QUADRATURE_DEMOD:
        return _demodulate(trace, larmor_frequency)
    if method is EnvelopeMethod.PEAK_DETECT:
        return _peak_detect(trace)
    if trace.transverse is None:
        raise EnvelopeError("Transverse envelopes need the spin expectation series")
    origin = float(trace.times[0])
    return Envelope(trace.times, np.abs(trace.transverse), method, origin, origin)


def _model_values(model: DecayModel, params: np.ndarray, times: np.ndarray) -> np.ndarray:
    amplitude, log_timescale = params
    scaled = times / math.exp(log_timescale)
    if model is DecayModel.GAUSSIAN:
        return amplitude * np.exp(-(scaled ** 2))
    return amplitude * np.exp(-scaled)


def _initial_guess(model: DecayModel, times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """(A, ln T) from a straight-line fit to ln(values)."""
    peak = float(np.max(values))
    span = float(times[-1] - times[0]) or 1.0
    usable = values > LOG_GUESS_FLOOR * peak
    fallback = np.array([peak, math.log(span / 2)])
    if np.count_nonzero(usable) < 2:
        return fallback
    abscissa = times[usable] ** 2 if model is DecayModel.GAUSSIAN else times[usable]
    slope, intercept = np.polyfit(abscissa, np.log(values[usable]), 1)
    if slope >= 0:
        return fallback
    timescale = 1 / math.sqrt(-slope) if model is DecayModel.GAUSSIAN else -1 / slope
    return np.array([math.exp(intercept), math.log(timescale)])


def fit_decay(
    env: Envelope, model: DecayModel, window_end: Optional[float] = None
) -> DecayFit:
    """Least-squares fit of A exp(-t^2/T^2) or A exp(-t/tau) to the envelope.

    Uses Levenberg-Marquardt on (A, ln T) started from a log-linear regression.
    Fits are `reliable` when they converged, their 1/e time lies inside the
    fitted span and the residual RMS is at most 20% of the amplitude.
    """
    trimmed = env.trimmed()
    times = trimmed.relative_times
    values = trimmed.magnitude
    if window_end is not None and math.isfinite(window_end):
        keep = times <= window_end
        times, values = times[keep], values[keep]
    if len(times) < MIN_FIT_POINTS:
        return DecayFit(
            model, math.nan, math.nan, math.nan, math.nan, False,
            message=f"{len(times)} points in the fit window, need {MIN_FIT_POINTS}",
        )
    if not np.any(values):
        return DecayFit(model, 0.0, math.nan, math.nan, 0.0, False, message="envelope is zero")

    def residuals(params: np.ndarray) -> np.ndarray:
        return _model_values(model, params, times) - values

    guess = _initial_guess(model, times, values)
    try:
        solution = least_squares(
            residuals, guess, method="lm", xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=2000
        )
    except (ValueError, FloatingPointError) as ex:
        return DecayFit(model, math.nan, math.nan, math.nan, math.nan, False, message=str(ex))

    amplitude, log_timescale = solution.x
    timescale = math.exp(log_timescale) if log_timescale < 700 else math.inf
    residual_rms = float(np.sqrt(np.mean(solution.fun ** 2)))
    success = bool(solution.success) and math.isfinite(timescale) and amplitude > 0
    reliable = (
        success
        and timescale <= float(times[-1])
        and residual_rms <= RELIABLE_RESIDUAL_FRACTION * amplitude
    )
    return DecayFit(
        model=model,
        amplitude=float(amplitude),
        timescale=timescale,
        one_over_e_time=timescale,
        residual_rms=residual_rms,
        success=success,
        reliable=reliable,
        message=solution.message,
    )


def _interpolated_crossing(
    times: np.ndarray, values: np.ndarray, index: int, threshold: float
) -> float:
    if index == 0:
        return float(times[0])
    t0, t1 = times[index - 1], times[index]
    v0, v1 = values[index - 1], values[index]
    return float(t0 + (v0 - threshold) / (v0 - v1) * (t1 - t0))


def _first_crossing(times: np.ndarray, values: np.ndarray, start: int, threshold: float) -> float:
    """First time after `start` where values drop below threshold, interpolated."""
    below = np.nonzero(values[start:] < threshold)[0]
    if len(below) == 0:
        return math.inf
    return _interpolated_crossing(times, values, start + int(below[0]), threshold)


def _initial_collapse(times: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """(1/e crossing time, initial amplitude) of the first collapse.

    The initial amplitude is the running maximum up to the first sample below
    1/e of it, so later revivals never raise the threshold.
    """
    running = np.maximum.accumulate(values)
    below = np.nonzero(values < running / math.e)[0]
    if len(below) == 0:
        return math.inf, float(running[-1])
    index = int(below[0])
    initial = float(running[index])
    return _interpolated_crossing(times, values, index, initial / math.e), initial


def one_over_e_time(env: Envelope) -> float:
    """Model-free time at which the envelope first drops below 1/e of its initial amplitude.

    Returns ``math.inf`` when the envelope never decays that far.
    """
    trimmed = env.trimmed()
    crossing, initial = _initial_collapse(trimmed.relative_times, trimmed.magnitude)
    if initial == 0:
        return math.inf
    return crossing


def fit_window_end(env: Envelope, multiple: float) -> float:
    """End of the fit window: `multiple` times the model-free 1/e time."""
    return multiple * one_over_e_time(env)


def revival_search_window(expected_revival: float, end: float) -> Tuple[float, float]:
    """Half a revival period either side of the expected revival time."""
    return 0.5 * expected_revival, min(1.5 * expected_revival, end)


def detect_revival(
    env: Envelope,
    search_window: Optional[Tuple[float, float]] = None,
    window_start: float = 2.0,
    expected_revival: Optional[float] = None,
) -> RevivalReport:
    """Locate the revival peak and time its collapse.

    Without an explicit window the search runs around `expected_revival` when
    it is known, else from `window_start` collapse times to the end of the
    trace. The highest local maximum inside the window wins; a window without
    one reports its global maximum flagged as `at_boundary`.

    :raises EmptyWindowError: if the window holds no samples or the envelope never collapses.
    """
    trimmed = env.trimmed()
    times = trimmed.relative_times
    values = trimmed.magnitude

    collapse, initial = _initial_collapse(times, values)
    if search_window is None:
        if not math.isfinite(collapse):
            raise EmptyWindowError("Envelope never collapses, no revival window")
        if expected_revival is not None and math.isfinite(expected_revival):
            search_window = revival_search_window(expected_revival, float(times[-1]))
        else:
            search_window = (window_start * collapse, float(times[-1]))
    lower, upper = search_window
    inside = np.nonzero((times >= lower) & (times <= upper))[0]
    if len(inside) == 0:
        raise EmptyWindowError(f"No samples in revival window [{lower:.6e}, {upper:.6e}] s")

    peaks, _ = find_peaks(values[inside])
    at_boundary = len(peaks) == 0
    if at_boundary:
        peak_index = int(inside[np.argmax(values[inside])])
        t_revival, peak = float(times[peak_index]), float(values[peak_index])
        log.warning("Revival peak at search window boundary", t_revival=t_revival)
    else:
        peak_index = int(inside[peaks[np.argmax(values[inside][peaks])]])
        offset, peak = _parabolic_peak(values, peak_index)
        t_revival = float(times[peak_index]) + offset * float(
            times[peak_index + 1] - times[peak_index]
        )

    ratio = peak / initial if initial > 0 else math.nan
    crossing = _first_crossing(times, values, peak_index, peak / math.e)
    return RevivalReport(
        t_revival=t_revival,
        revival_amplitude_ratio=ratio,
        revival_collapse_time=crossing - t_revival,
        at_boundary=at_boundary,
    )


def gaussian_vs_exponential(
    env: Envelope, window_end: Optional[float] = None
) -> ModelComparison:
    """Fit both decay models and pick the one with the smaller residual.

    The residual ratio is the loser's residual RMS over the winner's.

    :raises FitError: if neither model can be fitted.
    """
    gaussian = fit_decay(env, DecayModel.GAUSSIAN, window_end)
    exponential = fit_decay(env, DecayModel.EXPONENTIAL, window_end)
    if not gaussian.success and not exponential.success:
        raise FitError(
            f"Both decay fits failed: gaussian ({gaussian.message}), "
            f"exponential ({exponential.message})"
        )
    if not exponential.success or (
        gaussian.success and gaussian.residual_rms <= exponential.residual_rms
    ):
        winner, loser = gaussian, exponential
    else:
        winner, loser = exponential, gaussian

    if not loser.success:
        ratio = math.inf
    elif winner.residual_rms == 0:
        ratio = math.inf if loser.residual_rms > 0 else 1.0
    else:
        ratio = loser.residual_rms / winner.residual_rms
    if not (gaussian.reliable or exponential.reliable):
        log.warning("No reliable decay fit", residual_ratio=ratio)
    return ModelComparison(
        winner=winner.model, residual_ratio=ratio, gaussian=gaussian, exponential=exponential
    )

"""From a run configuration to signal traces, envelopes and fit reports."""
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import structlog
from gevent.threadpool import ThreadPool

from faraday_sim import __version__
from faraday_sim.analysis import (
    Envelope,
    EnvelopeMethod,
    ModelComparison,
    RevivalReport,
    detect_revival,
    extract_envelope,
    gaussian_vs_exponential,
    one_over_e_time,
)
from faraday_sim.constants import (
    DEFAULT_GRID_POINTS,
    MAX_GRID_POINTS,
    MIN_SAMPLES_PER_LARMOR_PERIOD,
)
from faraday_sim.decoherence import (
    EnsembleSpec,
    default_pumping_model,
    ensemble_average,
    ensemble_samples,
    scale_probe,
)
from faraday_sim.definition import RunConfig
from faraday_sim.evolution import (
    EvolutionResult,
    TimeGrid,
    propagate_lindblad,
    propagate_unitary,
    to_lab_frame,
)
from faraday_sim.exceptions import EmptyWindowError, EnvelopeError, FitError, UndersampledGridError
from faraday_sim.exceptions.config import GridConfigurationError
from faraday_sim.light_shift import (
    FieldConfig,
    Frame,
    ProbeConfig,
    build_full_hamiltonian,
    build_rwa_hamiltonian,
    nonlinear_coefficient,
    rwa_geometric_factor,
    scattering_rate,
    scattering_time,
)
from faraday_sim.signal import PolarimeterConfig, SignalTrace, synthesize_signal
from faraday_sim.spin_algebra import (
    DensityMatrix,
    SpinOperators,
    build_spin_operators,
    coherent_state,
)
from faraday_sim.tasks.base import TaskState, get_task_class_for_type
from faraday_sim.utils.configuration import GridSettings
from faraday_sim.utils.configuration.decoherence import PUMPING
from faraday_sim.utils.files.plotting import render_plot_script
from faraday_sim.utils.files.writing import write_csv

if TYPE_CHECKING:
    from faraday_sim.tasks.base import Task  # noqa: F401

log = structlog.get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True, eq=False)
class SimulationSetup:
    """Everything a single simulation needs, resolved from a RunConfig."""

    ops: SpinOperators
    probe: ProbeConfig
    field: FieldConfig
    frame: Frame
    rho0: DensityMatrix
    grid: TimeGrid
    ensemble: EnsembleSpec
    polarimeter: PolarimeterConfig
    envelope_method: EnvelopeMethod
    pumping_calibration: float
    loss: float
    tolerance: float
    max_substeps: int

    @property
    def tau_s(self) -> float:
        return scattering_time(self.probe)


@dataclass(frozen=True, eq=False)
class SimulationOutcome:
    setup: SimulationSetup
    result: EvolutionResult
    noiseless: SignalTrace
    noisy: SignalTrace
    envelope: Optional[Envelope]


@dataclass(frozen=True)
class FitReport:
    one_over_e_time: float
    comparison: Optional[ModelComparison]
    revival: Optional[RevivalReport]
    warnings: Tuple[str, ...] = ()


def in_units_of(value: float, unit: float) -> float:
    if not math.isfinite(unit) or unit == 0:
        return math.nan
    return value / unit


def _twisting_rate(probe: ProbeConfig) -> float:
    """|chi g(theta)|, zero when it vanishes to rounding."""
    twist = abs(nonlinear_coefficient(probe) * rwa_geometric_factor(probe.polarization_angle))
    return 0.0 if twist <= 1e-12 * abs(nonlinear_coefficient(probe)) else twist


def collapse_time(probe: ProbeConfig, f: float) -> float:
    """1/e time of the RWA one-axis-twisting envelope, f |cos(chi g t)|^(2f-1).

    Infinite at the critical angle and for spins that do not twist.
    """
    twist = _twisting_rate(probe)
    if f < 1 or twist == 0:
        return math.inf
    return math.sqrt(2 / (2 * f - 1)) / twist


def revival_time(probe: ProbeConfig) -> float:
    """First revival of the RWA twisting envelope, pi/|chi g(theta)|; infinite without twisting."""
    twist = _twisting_rate(probe)
    if twist == 0:
        return math.inf
    return math.pi / twist


def characteristic_time(
    probe: ProbeConfig, f: float, calibration: float, loss: float, ensemble: EnsembleSpec
) -> float:
    """Shortest of the twisting, pumping, loss and ensemble dephasing times."""
    candidates = [collapse_time(probe, f)]
    rate = scattering_rate(probe)
    if rate > 0 and calibration > 0:
        candidates.append(1 / (calibration * rate))
    if rate > 0 and loss > 0:
        candidates.append(1 / (loss * rate))
    if ensemble.larmor_spread > 0:
        candidates.append(math.sqrt(2) / ensemble.larmor_spread)
    shortest = min(candidates)
    if math.isfinite(shortest):
        return shortest
    if math.isfinite(scattering_time(probe)):
        return scattering_time(probe)
    raise GridConfigurationError(
        "grid.duration: no decay time scale to size the grid by; set grid.duration"
    )


def default_grid(
    settings: GridSettings,
    probe: ProbeConfig,
    field: FieldConfig,
    f: float,
    resolve_precession: bool,
    calibration: float = 0.0,
    loss: float = 0.0,
    ensemble: EnsembleSpec = EnsembleSpec(),
) -> TimeGrid:
    """Time grid from the grid settings, filling in span and resolution.

    With `resolve_precession` the grid keeps at least 20 samples per Larmor period.
    """
    if settings.duration is not None:
        span = settings.duration
    elif settings.duration_tau is not None:
        tau_s = scattering_time(probe)
        if not math.isfinite(tau_s):
            raise GridConfigurationError("grid.duration_tau: the probe does not scatter photons")
        span = settings.duration_tau * tau_s
    else:
        span = settings.collapse_times * characteristic_time(probe, f, calibration, loss, ensemble)

    n_points = settings.n_points
    if n_points is None:
        n_points = DEFAULT_GRID_POINTS
        if resolve_precession and field.larmor_frequency > 0:
            periods = span * field.larmor_frequency / (2 * math.pi)
            n_points = max(n_points, math.ceil(MIN_SAMPLES_PER_LARMOR_PERIOD * periods) + 1)
        if n_points > MAX_GRID_POINTS:
            log.warning(
                "Capping grid size; set grid.n_points to override",
                wanted=n_points,
                cap=MAX_GRID_POINTS,
            )
            n_points = MAX_GRID_POINTS
    return TimeGrid(0.0, span, n_points)


def build_setup(config: RunConfig, default_frame: Frame = Frame.LAB) -> SimulationSetup:
    probe = config.probe.to_probe()
    field = config.field.to_field(probe, config.preset)
    ops = build_spin_operators(config.spin)
    frame = config.simulation.frame_or(default_frame)
    method = config.analysis.method_for(frame)
    state = coherent_state(
        ops,
        math.radians(config.simulation.initial_polar),
        math.radians(config.simulation.initial_azimuth),
    )
    if config.decoherence.model == PUMPING:
        calibration, loss = config.decoherence.calibration, config.decoherence.loss
    else:
        calibration, loss = 0.0, 0.0
    ensemble = config.ensemble.to_spec()
    grid = default_grid(
        config.grid,
        probe,
        field,
        ops.f,
        resolve_precession=frame is Frame.LAB or method is not EnvelopeMethod.TRANSVERSE,
        calibration=calibration,
        loss=loss,
        ensemble=ensemble,
    )
    return SimulationSetup(
        ops=ops,
        probe=probe,
        field=field,
        frame=frame,
        rho0=DensityMatrix.from_state(state),
        grid=grid,
        ensemble=ensemble,
        polarimeter=config.polarimeter.to_polarimeter(),
        envelope_method=method,
        pumping_calibration=calibration,
        loss=loss,
        tolerance=config.integrator.tolerance,
        max_substeps=config.integrator.max_substeps,
    )


def evolve(setup: SimulationSetup) -> EvolutionResult:
    """Propagate every ensemble member and average them.

    Lab-frame members precess at Omega_L + delta under the full Hamiltonian;
    rotating-frame members carry delta F_y on top of the RWA Hamiltonian.
    """
    results = []
    for sample in ensemble_samples(setup.ensemble):
        probe = scale_probe(setup.probe, sample.gamma_factor)
        if setup.frame is Frame.LAB:
            field = FieldConfig(setup.field.larmor_frequency + sample.larmor_offset)
            hamiltonian = build_full_hamiltonian(setup.ops, field, probe)
        else:
            hamiltonian = build_rwa_hamiltonian(
                setup.ops, setup.field, probe, larmor_offset=sample.larmor_offset
            )
        channels = default_pumping_model(
            probe, setup.pumping_calibration, setup.loss, setup.ops.dim
        )
        if channels:
            result = propagate_lindblad(
                hamiltonian,
                channels,
                setup.rho0,
                setup.grid,
                tolerance=setup.tolerance,
                max_substeps=setup.max_substeps,
            )
        else:
            result = propagate_unitary(hamiltonian, setup.rho0, setup.grid)
        results.append((sample.weight, result))
    return ensemble_average(results)


def simulate(
    config: RunConfig, default_frame: Frame = Frame.LAB, require_envelope: bool = True
) -> SimulationOutcome:
    """Propagate, synthesize the polarimeter signal and extract its envelope.

    Without `require_envelope`, a trace too short or too coarse for the
    envelope method yields an outcome without envelope instead of an error.
    """
    setup = build_setup(config, default_frame)
    log.debug(
        "Simulating",
        frame=setup.frame.value,
        n_points=setup.grid.n_points,
        t_end=setup.grid.t_end,
        ensemble_members=len(ensemble_samples(setup.ensemble)),
    )
    result = evolve(setup).with_digest(config.digest)
    noiseless, noisy = synthesize_signal(result, setup.polarimeter)
    try:
        envelope: Optional[Envelope] = extract_envelope(
            noisy, setup.field.larmor_frequency, setup.envelope_method
        )
    except (EnvelopeError, UndersampledGridError) as ex:
        if require_envelope:
            raise
        log.warning("No envelope for this trace", reason=str(ex))
        envelope = None
    return SimulationOutcome(setup, result, noiseless, noisy, envelope)


def analyse_envelope(
    envelope: Envelope,
    fit_window: float,
    revival_window_start: float,
    expected_revival: Optional[float] = None,
) -> FitReport:
    """Model-free collapse time, decay-model comparison and revival timing.

    The revival is searched around `expected_revival` when it is finite.

    Failures of the fits or of the revival search become warnings in the report.
    """
    warnings: List[str] = []
    collapse = one_over_e_time(envelope)
    window_end = fit_window * collapse if math.isfinite(collapse) else None

    comparison: Optional[ModelComparison] = None
    try:
        comparison = gaussian_vs_exponential(envelope, window_end)
    except FitError as ex:
        warnings.append(f"decay fit failed: {ex}")
    else:
        if not (comparison.gaussian.reliable or comparison.exponential.reliable):
            warnings.append("no reliable decay fit")

    revival: Optional[RevivalReport] = None
    try:
        revival = detect_revival(
            envelope, window_start=revival_window_start, expected_revival=expected_revival
        )
    except EmptyWindowError as ex:
        warnings.append(f"no revival: {ex}")
    else:
        if revival.at_boundary:
            warnings.append("revival peak at search window boundary")

    for warning in warnings:
        log.warning("Analysis warning", warning=warning)
    return FitReport(collapse, comparison, revival, tuple(warnings))


def analyse_outcome(outcome: SimulationOutcome, config: RunConfig) -> FitReport:
    """`analyse_envelope` with the analysis settings and the predicted revival time."""
    return analyse_envelope(
        outcome.envelope,
        config.analysis.fit_window,
        config.analysis.revival_window_start,
        expected_revival=revival_time(outcome.setup.probe),
    )


class SimulationRunner:
    """Runs the tasks of one CLI invocation and writes their outputs into `out_dir`."""

    def __init__(
        self,
        config: RunConfig,
        out_dir: Path,
        command: str,
        workers: int = 1,
        emit_plot: bool = False,
    ) -> None:
        self.config = config
        self.out_dir = Path(out_dir)
        self.command = command
        self.workers = max(1, workers)
        self.emit_plot = emit_plot

        # Scan points change state on pool threads.
        self._task_lock = threading.Lock()
        self.task_count = 0
        self.running_task_count = 0
        self.errored_task_count = 0

        self.out_dir.mkdir(parents=True, exist_ok=True)
        log.info("Config digest", config_digest=config.digest)

    def task_state_changed(self, task: "Task", state: TaskState) -> None:
        with self._task_lock:
            if state is TaskState.INITIALIZED:
                self.task_count += 1
            elif state is TaskState.RUNNING:
                self.running_task_count += 1
            else:
                self.running_task_count -= 1
                if state is TaskState.ERRORED:
                    self.errored_task_count += 1
        log.debug("Task state changed", task=repr(task), id=task.id, state=state.value)

    def run_task(self, task_type: str, *args, **kwargs) -> Any:
        task_class = get_task_class_for_type(task_type)
        try:
            return task_class(self, self.config)(*args, **kwargs)
        finally:
            log.info("Tasks done", total=self.task_count, errored=self.errored_task_count)

    def map_points(self, function: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """Apply `function` to every item on a bounded thread pool, keeping input order."""
        if self.workers == 1 or len(items) <= 1:
            return [function(item) for item in items]
        pool = ThreadPool(min(self.workers, len(items)))
        try:
            return list(pool.map(function, items))
        finally:
            pool.kill()

    def header(self, **metadata) -> Dict[str, Any]:
        return {
            "tool": "faraday-sim",
            "version": __version__,
            "command": self.command,
            "config_digest": self.config.digest,
            **metadata,
        }

    def write_output(
        self,
        filename: str,
        columns: Sequence[str],
        rows: Sequence[Sequence[Any]],
        plot_template: Optional[str] = None,
        plot_context: Optional[Dict[str, Any]] = None,
        **metadata,
    ) -> Path:
        path = write_csv(self.out_dir / filename, columns, rows, self.header(**metadata))
        log.info("Wrote output", path=str(path), rows=len(rows))
        if self.emit_plot and plot_template:
            render_plot_script(plot_template, path, columns=list(columns), **(plot_context or {}))
        return path


def lab_series(result: EvolutionResult) -> Dict[str, np.ndarray]:
    lab = to_lab_frame(result)
    return {
        "fx": lab.fx_series,
        "fy": lab.fy_series,
        "fz": lab.fz_series,
        "trace": lab.trace_series,
    }

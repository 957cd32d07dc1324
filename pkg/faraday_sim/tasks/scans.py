"""Parameter sweeps over the scattering time and the probe polarization angle.

Every point of a sweep runs as its own task on the runner's worker pool.
Numerical failures of a point end up in its `error` column; the rows are
written sorted by the swept value.
"""
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple

import structlog

from faraday_sim.analysis import one_over_e_time
from faraday_sim.constants import (
    DEFAULT_GRID_POINTS,
    DEFAULT_PLATEAU_TIME,
    MAX_GRID_POINTS,
    MIN_SAMPLES_PER_LARMOR_PERIOD,
)
from faraday_sim.definition import RunConfig
from faraday_sim.evolution import TimeGrid, compare_full_vs_rwa
from faraday_sim.exceptions import EnvelopeError, FaradaySimError
from faraday_sim.exceptions.config import ScanConfigurationError
from faraday_sim.light_shift import (
    Frame,
    critical_angle,
    default_larmor_frequency,
    nonlinear_coefficient,
)
from faraday_sim.runner import (
    SimulationOutcome,
    SimulationSetup,
    analyse_outcome,
    in_units_of,
    simulate,
)
from faraday_sim.tasks.base import Task
from faraday_sim.utils.configuration.physics import CRITICAL
from faraday_sim.utils.configuration.scan import POLARIZATION_ANGLE, SCATTERING_TIME
from faraday_sim.utils.files.constants import (
    SCAN_ANGLE_COLUMNS,
    SCAN_CRITICAL_COLUMNS,
    SCAN_TAU_COLUMNS,
)

log = structlog.get_logger(__name__)

STRING_COLUMNS = {"error", "winning_model"}


def with_scattering_time(config: RunConfig, tau: float) -> RunConfig:
    return config.with_override(
        "probe.scattering_time", tau, drop=("intensity_ratio", "scattering_rate")
    )


def decay_time_of(outcome: SimulationOutcome) -> float:
    if outcome.envelope is None:
        raise EnvelopeError("Simulation produced no envelope")
    return one_over_e_time(outcome.envelope)


def rwa_deviations(setup: SimulationSetup) -> Tuple[float, float]:
    """Raw and envelope full-vs-RWA deviation over one collapse-equivalent time sqrt(2/7)/|chi|."""
    chi = abs(nonlinear_coefficient(setup.probe))
    if chi == 0:
        return 0.0, 0.0
    f = setup.ops.f
    span = (math.sqrt(2 / (2 * f - 1)) if f >= 1 else 1.0) / chi
    periods = span * setup.field.larmor_frequency / (2 * math.pi)
    n_points = min(
        MAX_GRID_POINTS,
        max(DEFAULT_GRID_POINTS, math.ceil(MIN_SAMPLES_PER_LARMOR_PERIOD * periods) + 1),
    )
    grid = TimeGrid(0.0, span, n_points)
    raw = compare_full_vs_rwa(setup.field, setup.probe, setup.rho0, grid)
    envelope = compare_full_vs_rwa(setup.field, setup.probe, setup.rho0, grid, envelope=True)
    return raw, envelope


class ScanPointTask(Task):
    def __init__(
        self,
        runner,
        value: float,
        parent: "ScanTask",
        evaluate: Callable[[float], Dict[str, Any]],
    ) -> None:
        self.value = value
        self._evaluate = evaluate
        super().__init__(runner, value, parent)

    def _run(self) -> Dict[str, Any]:
        return self._evaluate(self.value)

    @property
    def _str_details(self):
        return f": {self._parent.PARAMETER}={self.value:g}"


class ScanTask(Task):
    PARAMETER: str
    VALUE_COLUMN: str
    COLUMNS: Sequence[str]
    FILENAME: str
    PLOT_COLUMNS: Sequence[str] = ()
    X_LABEL = ""
    LOG_AXES = False

    def values(self) -> List[float]:
        self._config.scan.parameter_or(self.PARAMETER)
        values = self._config.scan.values
        if values is None:
            values = self.default_values()
        self.check_values(values)
        return values

    def default_values(self) -> List[float]:
        raise ScanConfigurationError(f"scan.values: {self._name} needs scan.values or scan.range")

    def check_values(self, values: List[float]) -> None:
        pass

    def prepare(self, values: List[float]) -> None:
        pass

    def evaluate(self, value: float) -> Dict[str, Any]:
        raise NotImplementedError

    def header_metadata(self, rows: List[Dict[str, Any]]) -> Dict[str, Any]:
        return {}

    def _run_point(self, point: ScanPointTask) -> Dict[str, Any]:
        try:
            row = point()
        except FaradaySimError as ex:
            log.warning(
                "Scan point failed", parameter=self.PARAMETER, value=point.value, error=str(ex)
            )
            row = {"error": f"{type(ex).__name__}: {ex}"}
        else:
            log.info("Scan point", parameter=self.PARAMETER, value=point.value, **row)
        row[self.VALUE_COLUMN] = point.value
        return row

    def _run(self) -> Path:
        values = self.values()
        self.prepare(values)
        points = [ScanPointTask(self._runner, value, self, self.evaluate) for value in values]
        rows = self._runner.map_points(self._run_point, points)
        rows.sort(key=lambda row: row[self.VALUE_COLUMN])
        table = [
            [
                row.get(column, "" if column in STRING_COLUMNS else math.nan)
                for column in self.COLUMNS
            ]
            for row in rows
        ]
        return self._runner.write_output(
            self.FILENAME,
            self.COLUMNS,
            table,
            plot_template="scan.gp.j2",
            plot_context={
                "x_column": self.VALUE_COLUMN,
                "y_columns": list(self.PLOT_COLUMNS),
                "x_label": self.X_LABEL,
                "y_label": "time [s]",
                "log_x": self.LOG_AXES,
                "log_y": self.LOG_AXES,
            },
            parameter=self.PARAMETER,
            points=len(rows),
            **self.header_metadata(rows),
        )


class ScatteringTimeScan(ScanTask):
    PARAMETER = SCATTERING_TIME
    VALUE_COLUMN = "scattering_time"
    X_LABEL = "tau_s [s]"
    LOG_AXES = True

    def check_values(self, values: List[float]) -> None:
        non_positive = [value for value in values if value <= 0]
        if non_positive:
            raise ScanConfigurationError(
                f"scan.values: scattering times must be positive, got {non_positive}"
            )


class ScanTauTask(ScatteringTimeScan):
    """Collapse, revival and revival-collapse times against the scattering time."""

    _name = "scan-tau"
    COLUMNS = SCAN_TAU_COLUMNS
    FILENAME = "scan-tau.csv"
    PLOT_COLUMNS = ("collapse_time", "revival_time", "revival_collapse_time")

    def evaluate(self, value: float) -> Dict[str, Any]:
        config = with_scattering_time(self._config, value)
        outcome = simulate(config)
        report = analyse_outcome(outcome, config)
        tau_s = outcome.setup.tau_s
        gaussian = report.comparison.gaussian if report.comparison else None
        gaussian_time = math.nan
        if gaussian is not None and gaussian.success:
            gaussian_time = gaussian.timescale
        revival = report.revival
        revival_time = revival.t_revival if revival else math.nan
        revival_collapse = revival.revival_collapse_time if revival else math.nan
        return {
            "collapse_time": report.one_over_e_time,
            "collapse_time_tau": in_units_of(report.one_over_e_time, tau_s),
            "gaussian_collapse_time": gaussian_time,
            "gaussian_collapse_time_tau": in_units_of(gaussian_time, tau_s),
            "revival_time": revival_time,
            "revival_time_tau": in_units_of(revival_time, tau_s),
            "revival_collapse_time": revival_collapse,
            "revival_collapse_time_tau": in_units_of(revival_collapse, tau_s),
        }

    def header_metadata(self, rows):
        return {"polarization_angle": self._config.probe.polarization_angle}


class ScanAngleTask(ScanTask):
    """1/e decay time and envelope shape against the polarization angle."""

    _name = "scan-angle"
    PARAMETER = POLARIZATION_ANGLE
    VALUE_COLUMN = "angle_deg"
    COLUMNS = SCAN_ANGLE_COLUMNS
    FILENAME = "scan-angle.csv"
    PLOT_COLUMNS = ("decay_time",)
    X_LABEL = "theta [deg]"

    def default_values(self) -> List[float]:
        """0 to 90 degrees in steps of 5, plus the critical angle."""
        angles = {float(angle) for angle in range(0, 91, 5)}
        return sorted(angles | {math.degrees(critical_angle())})

    def check_values(self, values: List[float]) -> None:
        outside = [value for value in values if not 0 <= value <= 90]
        if outside:
            raise ScanConfigurationError(f"scan.values: angles must lie in [0, 90], got {outside}")

    def evaluate(self, value: float) -> Dict[str, Any]:
        config = self._config.with_override("probe.polarization_angle", value)
        outcome = simulate(config)
        report = analyse_outcome(outcome, config)
        comparison = report.comparison
        return {
            "decay_time": report.one_over_e_time,
            "decay_time_tau": in_units_of(report.one_over_e_time, outcome.setup.tau_s),
            "winning_model": comparison.winner.value if comparison else "",
            "residual_ratio": comparison.residual_ratio if comparison else math.nan,
        }

    def header_metadata(self, rows):
        valid = [row for row in rows if not row.get("error") and not math.isnan(row["decay_time"])]
        if not valid:
            return {"peak_angle_deg": math.nan}
        peak = max(valid, key=lambda row: row["decay_time"])
        return {"peak_angle_deg": peak["angle_deg"]}


class ScanCriticalTask(ScatteringTimeScan):
    """Decay time at the critical angle, with and without ensemble inhomogeneity.

    Unless the field is fixed in absolute terms, the Larmor frequency is pinned
    at `field.larmor_ratio` |chi| of the shortest scattering time, so that
    Omega_L/|chi| grows along the sweep.
    """

    _name = "scan-critical"
    COLUMNS = SCAN_CRITICAL_COLUMNS
    FILENAME = "scan-critical.csv"
    PLOT_COLUMNS = ("decay_time", "decay_time_inhomogeneous")

    def prepare(self, values: List[float]) -> None:
        base = self._config.with_override("probe.polarization_angle", CRITICAL)
        shortest = with_scattering_time(base, min(values))
        probe = shortest.probe.to_probe()
        if self._config.field.is_fixed:
            larmor = shortest.field.to_field(probe, shortest.preset).larmor_frequency
        else:
            larmor = default_larmor_frequency(probe, self._config.field.larmor_ratio)
            base = base.with_override("field.larmor_frequency", larmor, drop=("larmor_ratio",))
        self._base = base
        self._larmor_frequency = larmor

    def _inhomogeneous(self, config: RunConfig) -> RunConfig:
        if config.ensemble.larmor_spread > 0:
            return config
        return config.with_override(
            "ensemble.plateau_time", DEFAULT_PLATEAU_TIME, drop=("larmor_spread",)
        )

    def evaluate(self, value: float) -> Dict[str, Any]:
        config = with_scattering_time(self._base, value)
        homogeneous = simulate(config.with_override("ensemble", {}), Frame.ROTATING)
        inhomogeneous = simulate(self._inhomogeneous(config), Frame.ROTATING)
        setup = homogeneous.setup
        decay = decay_time_of(homogeneous)
        decay_inhomogeneous = decay_time_of(inhomogeneous)
        chi = abs(nonlinear_coefficient(setup.probe))
        raw, envelope = rwa_deviations(setup)
        return {
            "decay_time": decay,
            "decay_time_tau": in_units_of(decay, setup.tau_s),
            "decay_time_inhomogeneous": decay_inhomogeneous,
            "decay_time_inhomogeneous_tau": in_units_of(decay_inhomogeneous, setup.tau_s),
            "larmor_ratio": setup.field.larmor_frequency / chi if chi else math.inf,
            "rwa_deviation": raw,
            "rwa_envelope_deviation": envelope,
        }

    def header_metadata(self, rows):
        return {
            "larmor_frequency": self._larmor_frequency,
            "plateau_time": self._inhomogeneous(self._base).ensemble.plateau_time or math.nan,
        }

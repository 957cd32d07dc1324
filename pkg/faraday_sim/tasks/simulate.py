import math
from pathlib import Path

import numpy as np
import structlog

from faraday_sim.light_shift import scalar_light_shift
from faraday_sim.runner import (
    SimulationOutcome,
    analyse_outcome,
    in_units_of,
    lab_series,
    revival_time,
    simulate,
)
from faraday_sim.tasks.base import Task
from faraday_sim.utils.files.constants import TRACE_COLUMNS, TRACE_FILENAME

log = structlog.get_logger(__name__)


def trace_metadata(outcome: SimulationOutcome) -> dict:
    """Header entries a trace file needs to be re-analysed on its own."""
    setup = outcome.setup
    return {
        "spin": setup.ops.f,
        "frame": setup.frame.value,
        "scattering_time": setup.tau_s,
        "larmor_frequency": setup.field.larmor_frequency,
        "polarization_angle": math.degrees(setup.probe.polarization_angle),
        "rotation_gain": setup.polarimeter.rotation_gain,
        "envelope_method": setup.envelope_method.value,
        "n_trials": setup.polarimeter.n_trials if setup.polarimeter.shot_noise else 0,
        "rng_seed": setup.polarimeter.rng_seed,
        "scalar_light_shift": scalar_light_shift(setup.probe),
        "expected_revival_time": revival_time(setup.probe),
    }


def trace_rows(outcome: SimulationOutcome) -> list:
    times = outcome.result.times
    series = lab_series(outcome.result)
    if outcome.envelope is None:
        envelope = np.full(len(times), math.nan)
    else:
        envelope = np.interp(times, outcome.envelope.times, outcome.envelope.magnitude)
    time_tau = [in_units_of(t, outcome.setup.tau_s) for t in times]
    return [
        list(row)
        for row in zip(
            times,
            time_tau,
            series["fx"],
            series["fy"],
            series["fz"],
            series["trace"],
            outcome.noiseless.mean_signal,
            outcome.noisy.mean_signal,
            envelope,
        )
    ]


class SimulateTask(Task):
    """Simulate one configuration and write its polarimeter trace."""

    _name = "simulate"

    def _run(self) -> Path:
        outcome = simulate(self._config, require_envelope=False)
        if outcome.envelope is not None:
            report = analyse_outcome(outcome, self._config)
            log.info(
                "Trace analysed",
                one_over_e_time=report.one_over_e_time,
                one_over_e_time_tau=in_units_of(report.one_over_e_time, outcome.setup.tau_s),
                winner=report.comparison.winner.value if report.comparison else None,
                t_revival=report.revival.t_revival if report.revival else None,
            )
        metadata = trace_metadata(outcome)
        return self._runner.write_output(
            TRACE_FILENAME,
            TRACE_COLUMNS,
            trace_rows(outcome),
            plot_template="trace.gp.j2",
            plot_context={"envelope_method": metadata["envelope_method"]},
            **metadata,
        )

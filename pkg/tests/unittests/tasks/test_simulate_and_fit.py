import math

import numpy as np
import pytest

from faraday_sim.exceptions.files import TraceSchemaError
from faraday_sim.runner import analyse_outcome, simulate
from faraday_sim.utils.files import TRACE_COLUMNS, read_trace_csv
from tests.unittests.tasks.utils import read_scan


@pytest.fixture
def trace_definition(closed_rotating_dict):
    return {**closed_rotating_dict, "grid": {"n_points": 2001}}


def test_simulate_writes_a_self_describing_trace(run_task, trace_definition, make_config):
    path = run_task("simulate", trace_definition)
    assert path.name == "trace.csv"
    data = read_trace_csv(path)
    assert data.n_rows == 2001
    assert data.header["frame"] == "rotating"
    assert data.header["envelope_method"] == "transverse"
    assert data.header["config_digest"] == make_config(trace_definition).digest
    assert data.header_float("scattering_time") == pytest.approx(1e-3)
    assert data.header_float("n_trials") == 0
    assert np.allclose(np.hypot(data["fx"], data["fz"]), data["envelope"])
    assert data["time_tau"][-1] == pytest.approx(data["time"][-1] / 1e-3)
    # Noise disabled: both signal columns agree.
    assert np.array_equal(data["signal_noisy"], data["signal_noiseless"])


def test_simulate_is_reproducible(run_task, trace_definition):
    first = run_task("simulate", trace_definition).read_bytes()
    second = run_task("simulate", trace_definition).read_bytes()
    assert first == second


def test_simulate_without_envelope_writes_nan(run_task, minimal_definition_dict):
    minimal_definition_dict.update(grid={"n_points": 2}, decoherence={"model": "none"})
    data = read_trace_csv(run_task("simulate", minimal_definition_dict))
    assert np.all(np.isnan(data["envelope"]))


def test_fit_reproduces_the_in_process_analysis(
    run_task, trace_definition, make_config, twist_collapse_tau
):
    trace = run_task("simulate", trace_definition)
    header, rows = read_scan(run_task("fit", {}, trace_path=trace))
    (row,) = rows

    config = make_config(trace_definition)
    outcome = simulate(config)
    report = analyse_outcome(outcome, config)
    assert row["one_over_e_time"] == pytest.approx(report.one_over_e_time, rel=1e-9)
    assert row["t_revival"] == pytest.approx(report.revival.t_revival, rel=1e-9)
    assert row["one_over_e_time_tau"] == pytest.approx(twist_collapse_tau, rel=1e-2)
    assert row["t_revival_tau"] == pytest.approx(math.pi / 1.2, rel=1e-2)
    assert row["winning_model"] == "gaussian"
    assert header["source"] == "trace.csv"
    assert header["source_digest"] == config.digest


def test_fit_rejects_unknown_envelope_method(run_task, trace_definition):
    trace = run_task("simulate", trace_definition)
    text = trace.read_text().replace("envelope_method: transverse", "envelope_method: hilbert")
    trace.write_text(text)
    with pytest.raises(TraceSchemaError, match="hilbert"):
        run_task("fit", {}, trace_path=trace)


def test_fit_with_overridden_envelope_method(run_task, trace_definition, twist_collapse_tau):
    trace = run_task("simulate", trace_definition)
    header, rows = read_scan(run_task("fit", {}, trace_path=trace, envelope_method="peak_detect"))
    assert header["envelope_method"] == "peak_detect"
    assert rows[0]["one_over_e_time_tau"] == pytest.approx(twist_collapse_tau, rel=3e-2)


def test_fit_rejects_truncated_traces(run_task, trace_definition):
    trace = run_task("simulate", trace_definition)
    text = trace.read_text()
    trace.write_text(text[: text.rstrip().rfind(",")])
    with pytest.raises(TraceSchemaError, match=f"expected {len(TRACE_COLUMNS)} values"):
        run_task("fit", {}, trace_path=trace)

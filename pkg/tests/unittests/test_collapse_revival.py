"""End-to-end checks of collapse, revival and decay against closed-form results."""
import math

import numpy as np
import pytest

from faraday_sim.analysis import DecayModel, EnvelopeMethod
from faraday_sim.evolution import TimeGrid, compare_full_vs_rwa
from faraday_sim.light_shift import FieldConfig, ProbeConfig, default_larmor_frequency
from faraday_sim.runner import analyse_outcome, build_setup, simulate
from faraday_sim.spin_algebra import DensityMatrix, coherent_state
from faraday_sim.tasks.scans import rwa_deviations
from tests.unittests.conftest import TAU

REVIVAL_TAU = math.pi / 1.2


@pytest.fixture
def analyse(make_config):
    def run(definition):
        config = make_config(definition)
        outcome = simulate(config)
        return outcome, analyse_outcome(outcome, config)

    return run


def with_probe(definition, **probe):
    return {**definition, "probe": {**definition.get("probe", {}), **probe}}


@pytest.fixture
def pumped_rotating_dict():
    return {
        "probe": {"scattering_time": TAU, "polarization_angle": 0},
        "simulation": {"frame": "rotating"},
        "polarimeter": {"shot_noise": False},
    }


def test_closed_envelope_follows_the_twisting_law(analyse, closed_rotating_dict):
    outcome, _ = analyse(closed_rotating_dict)
    times = outcome.envelope.times
    expected = 4 * np.abs(np.cos(1.2 * times / TAU)) ** 7
    assert np.allclose(outcome.envelope.magnitude, expected, atol=1e-6, rtol=0)


def test_closed_revival(analyse, closed_rotating_dict, twist_collapse_tau):
    _, report = analyse(closed_rotating_dict)
    assert report.one_over_e_time / TAU == pytest.approx(twist_collapse_tau, rel=1e-3)
    assert report.revival.t_revival / TAU == pytest.approx(REVIVAL_TAU, rel=1e-2)
    assert report.revival.revival_amplitude_ratio > 0.99
    assert not report.revival.at_boundary


def test_perpendicular_polarization_halves_the_twisting(analyse, closed_rotating_dict):
    _, parallel = analyse(with_probe(closed_rotating_dict, polarization_angle=0))
    _, perpendicular = analyse(with_probe(closed_rotating_dict, polarization_angle=90))
    assert perpendicular.one_over_e_time / parallel.one_over_e_time == pytest.approx(2.0, abs=0.05)


def test_times_scale_linearly_with_tau(analyse, closed_rotating_dict):
    taus = [1e-4, 1e-3, 1e-2]
    reports = [analyse(with_probe(closed_rotating_dict, scattering_time=tau))[1] for tau in taus]
    series = {
        "collapse": [report.one_over_e_time for report in reports],
        "revival": [report.revival.t_revival for report in reports],
        "revival collapse": [report.revival.revival_collapse_time for report in reports],
    }
    for name, times in series.items():
        slope, _ = np.polyfit(np.log(taus), np.log(times), 1)
        assert slope == pytest.approx(1.0, abs=0.02), name


@pytest.mark.parametrize("angle", [0, 90])
def test_twisting_collapse_is_gaussian(analyse, closed_rotating_dict, angle):
    _, report = analyse(with_probe(closed_rotating_dict, polarization_angle=angle))
    assert report.comparison.winner is DecayModel.GAUSSIAN
    assert report.comparison.residual_ratio >= 2.0


def test_pumping_at_the_critical_angle_is_exponential(analyse, pumped_rotating_dict):
    _, report = analyse(with_probe(pumped_rotating_dict, polarization_angle="critical"))
    assert report.comparison.winner is DecayModel.EXPONENTIAL
    assert report.comparison.residual_ratio >= 2.0
    assert report.one_over_e_time / TAU == pytest.approx(4.0, rel=1e-2)


def test_critical_angle_outlives_parallel_polarization_tenfold(analyse, pumped_rotating_dict):
    _, critical = analyse(with_probe(pumped_rotating_dict, polarization_angle="critical"))
    _, parallel = analyse(pumped_rotating_dict)
    assert critical.one_over_e_time / parallel.one_over_e_time >= 10.0


def test_no_collapse_at_the_critical_angle_without_pumping(analyse, closed_rotating_dict):
    outcome, _ = analyse(with_probe(closed_rotating_dict, polarization_angle="critical"))
    assert np.all(outcome.envelope.magnitude > 4 * (1 - 1e-9))


def test_extra_scattering_lowers_the_revival(analyse, pumped_rotating_dict):
    amplitudes = []
    for factor in (1.0, 1.5, 2.0):
        _, report = analyse(with_probe(pumped_rotating_dict, extra_scattering_factor=factor))
        amplitudes.append(report.revival.revival_amplitude_ratio)
        assert report.revival.t_revival / TAU == pytest.approx(REVIVAL_TAU, rel=5e-2)
    assert amplitudes[0] > amplitudes[1] > amplitudes[2] > 0


def test_lab_frame_demodulation_recovers_the_collapse(
    analyse, closed_rotating_dict, twist_collapse_tau
):
    definition = {**closed_rotating_dict, "simulation": {"frame": "lab"}}
    outcome, report = analyse(definition)
    assert outcome.envelope.method is EnvelopeMethod.QUADRATURE_DEMOD
    assert report.one_over_e_time / TAU == pytest.approx(twist_collapse_tau, rel=3e-2)


class TestRotatingWaveApproximation:
    @pytest.fixture
    def deviations(self, make_config):
        def at_ratio(ratio):
            config = make_config(
                {
                    "probe": {"scattering_time": TAU, "polarization_angle": 90},
                    "field": {"larmor_ratio": ratio},
                }
            )
            return rwa_deviations(build_setup(config))

        return at_ratio

    def test_raw_deviation_shrinks_with_the_field(self, deviations):
        raw = [deviations(ratio)[0] for ratio in (10, 30, 100, 1000)]
        assert raw == sorted(raw, reverse=True)
        assert raw[2] < 0.01
        assert raw[-1] < 0.002

    def test_envelope_deviation_shrinks_with_the_field(self, deviations):
        _, at_200 = deviations(200)
        _, at_1000 = deviations(1000)
        assert at_1000 < at_200
        assert at_1000 < 0.01

    def test_without_nonlinearity_the_frames_agree(self, spin4):
        probe = ProbeConfig(
            coherent_rate=1 / TAU, polarization_angle=math.pi / 2, nonlinearity_magnitude=0.0
        )
        field = FieldConfig(default_larmor_frequency(probe, 200))
        rho0 = DensityMatrix.from_state(coherent_state(spin4, math.pi / 2, 0.0))
        deviation = compare_full_vs_rwa(field, probe, rho0, TimeGrid(0.0, TAU, 4001))
        assert deviation < 1e-10

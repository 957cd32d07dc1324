import math

import numpy as np
import pytest

from faraday_sim.decoherence import depolarization_channel, loss_channel
from faraday_sim.evolution import (
    TimeGrid,
    build_liouvillian,
    compare_full_vs_rwa,
    interval_propagator,
    propagate_lindblad,
    propagate_unitary,
    to_lab_frame,
    to_rotating_frame,
)
from faraday_sim.exceptions import (
    DimensionMismatchError,
    GridMismatchError,
    StepSizeUnderflowError,
)
from faraday_sim.exceptions.config import GridConfigurationError
from faraday_sim.light_shift import (
    FieldConfig,
    Frame,
    ProbeConfig,
    build_full_hamiltonian,
    build_rwa_hamiltonian,
)
from faraday_sim.spin_algebra import DensityMatrix, build_spin_operators, coherent_state

TAU = 1e-3


@pytest.fixture
def rho_x(spin4):
    return DensityMatrix.from_state(coherent_state(spin4, math.pi / 2, 0.0))


@pytest.fixture
def twisting(spin4):
    probe = ProbeConfig(coherent_rate=1 / TAU, polarization_angle=0.0)
    return build_rwa_hamiltonian(spin4, FieldConfig(240 / TAU), probe)


@pytest.mark.parametrize(
    "t_start, t_end, n_points", argvalues=[(0.0, 0.0, 10), (1.0, 0.5, 10), (0.0, 1.0, 1)]
)
def test_invalid_grids_are_rejected(t_start, t_end, n_points):
    with pytest.raises(GridConfigurationError):
        TimeGrid(t_start, t_end, n_points)


def test_unitary_twisting_matches_closed_form(twisting, rho_x):
    grid = TimeGrid(0.0, 3 * TAU, 3001)
    result = propagate_unitary(twisting, rho_x, grid)
    expected = 4 * np.abs(np.cos(1.2 * grid.times / TAU)) ** 7
    assert np.max(np.abs(result.transverse_series - expected)) < 1e-6
    assert np.allclose(result.trace_series, 1.0)
    assert np.allclose(result.fy_series, 0.0, atol=1e-9)


def test_unitary_propagation_preserves_purity(twisting, rho_x):
    result = propagate_unitary(twisting, rho_x, TimeGrid(0.0, TAU, 11), keep_states=True)
    purities = [DensityMatrix(state).purity for state in result.states]
    assert purities == pytest.approx([1.0] * 11)


def test_unitary_rejects_mismatched_state(twisting):
    with pytest.raises(DimensionMismatchError):
        propagate_unitary(twisting, DensityMatrix.maximally_mixed(3), TimeGrid(0.0, 1.0, 3))


def test_lindblad_without_channels_matches_unitary(twisting, rho_x):
    grid = TimeGrid(0.0, 3 * TAU, 601)
    unitary = propagate_unitary(twisting, rho_x, grid)
    lindblad = propagate_lindblad(twisting, [], rho_x, grid)
    assert np.max(np.abs(lindblad.fx_series - unitary.fx_series)) < 1e-8
    assert np.max(np.abs(lindblad.fz_series - unitary.fz_series)) < 1e-8


def test_depolarization_decays_spin_at_its_rate(twisting, rho_x, spin4):
    rate = 250.0
    grid = TimeGrid(0.0, 8e-3, 401)
    zero_field = build_rwa_hamiltonian(
        spin4, FieldConfig(0.0), ProbeConfig(coherent_rate=0.0)
    )
    result = propagate_lindblad(
        zero_field, [depolarization_channel(rate, spin4.dim)], rho_x, grid
    )
    assert np.allclose(result.fx_series, 4 * np.exp(-rate * grid.times), atol=1e-9)
    assert np.allclose(result.trace_series, 1.0, atol=1e-10)


def test_loss_channel_removes_population(rho_x, spin4):
    rate = 100.0
    grid = TimeGrid(0.0, 1e-2, 201)
    zero_field = build_rwa_hamiltonian(
        spin4, FieldConfig(0.0), ProbeConfig(coherent_rate=0.0)
    )
    result = propagate_lindblad(zero_field, [loss_channel(rate, spin4.dim)], rho_x, grid)
    assert np.allclose(result.trace_series, np.exp(-rate * grid.times), rtol=1e-9)
    assert np.allclose(result.fx_series, 4.0)


def test_pumped_lindblad_keeps_state_physical(twisting, rho_x, spin4):
    grid = TimeGrid(0.0, 3 * TAU, 301)
    result = propagate_lindblad(
        twisting, [depolarization_channel(250.0, spin4.dim)], rho_x, grid, keep_states=True
    )
    assert np.allclose(result.trace_series, 1.0, atol=1e-10)
    min_eigenvalues = np.linalg.eigvalsh(result.states)[:, 0]
    assert np.min(min_eigenvalues) > -1e-9


def test_step_halving_refines_until_tolerance(twisting, spin4):
    liouvillian = build_liouvillian(
        np.asarray(twisting.matrix), [depolarization_channel(250.0, spin4.dim)]
    )
    coarse, coarse_steps = interval_propagator(liouvillian, 1e-5, tolerance=1e-6)
    fine, fine_steps = interval_propagator(liouvillian, 1e-5, tolerance=1e-12)
    assert fine_steps > coarse_steps
    assert np.max(np.abs(fine - coarse)) < 1e-5


def test_halving_the_output_step_leaves_the_dynamics_unchanged(rho_x, spin4):
    probe = ProbeConfig(coherent_rate=1 / TAU, polarization_angle=0.0)
    hamiltonian = build_full_hamiltonian(spin4, FieldConfig(20 / TAU), probe)
    channels = [depolarization_channel(250.0, spin4.dim)]
    coarse = propagate_lindblad(hamiltonian, channels, rho_x, TimeGrid(0.0, 3 * TAU, 301))
    fine = propagate_lindblad(hamiltonian, channels, rho_x, TimeGrid(0.0, 3 * TAU, 601))
    assert np.max(np.abs(fine.fz_series[::2] - coarse.fz_series)) < 1e-8


def test_trace_does_not_drift_over_long_pumped_runs(twisting, rho_x, spin4):
    grid = TimeGrid(0.0, 20 * TAU, 2001)
    result = propagate_lindblad(
        twisting, [depolarization_channel(0.25 / TAU, spin4.dim)], rho_x, grid
    )
    assert np.max(np.abs(result.trace_series - 1.0)) < 1e-9


def test_loss_and_depolarization_rates_add(rho_x, spin4):
    grid = TimeGrid(0.0, 8e-3, 401)
    zero_field = build_rwa_hamiltonian(
        spin4, FieldConfig(0.0), ProbeConfig(coherent_rate=0.0)
    )
    channels = [loss_channel(100.0, spin4.dim), depolarization_channel(250.0, spin4.dim)]
    result = propagate_lindblad(zero_field, channels, rho_x, grid)
    slope, _ = np.polyfit(grid.times, np.log(result.fx_series * result.trace_series), 1)
    assert -slope == pytest.approx(350.0, rel=2e-2)


def test_step_halving_gives_up_beyond_max_substeps(twisting):
    liouvillian = build_liouvillian(np.asarray(twisting.matrix), [])
    with pytest.raises(StepSizeUnderflowError):
        interval_propagator(liouvillian, 1e-3, tolerance=1e-14, max_substeps=4)


def test_frames_coincide_at_time_zero_and_invert(twisting, rho_x):
    rotating = propagate_unitary(twisting, rho_x, TimeGrid(0.0, TAU, 101), keep_states=True)
    lab = to_lab_frame(rotating)
    assert lab.frame is Frame.LAB
    assert lab.fx_series[0] == pytest.approx(rotating.fx_series[0])
    assert lab.fz_series[0] == pytest.approx(rotating.fz_series[0])
    assert np.allclose(lab.transverse_series, rotating.transverse_series)

    back = to_rotating_frame(lab, twisting.frame_frequency)
    assert np.allclose(back.fx_series, rotating.fx_series)
    assert np.allclose(back.fz_series, rotating.fz_series)
    assert np.allclose(back.states, rotating.states)


def test_lab_frame_states_match_lab_expectations(twisting, rho_x, spin4):
    rotating = propagate_unitary(twisting, rho_x, TimeGrid(0.0, TAU, 21), keep_states=True)
    lab = to_lab_frame(rotating)
    fz_from_states = np.einsum("tij,ji->t", lab.states, spin4.fz).real
    assert np.allclose(fz_from_states, lab.fz_series)


def test_rotating_result_cannot_change_frequency(twisting, rho_x):
    rotating = propagate_unitary(twisting, rho_x, TimeGrid(0.0, TAU, 11))
    with pytest.raises(GridMismatchError):
        to_rotating_frame(rotating, 2 * twisting.frame_frequency)


def test_rwa_reproduces_full_dynamics_at_zero_angle(spin4, rho_x):
    probe = ProbeConfig(coherent_rate=1 / TAU, polarization_angle=0.0)
    field = FieldConfig(240 / TAU)
    grid = TimeGrid(0.0, TAU, 4001)
    assert compare_full_vs_rwa(field, probe, rho_x, grid) < 1e-8


def test_full_hamiltonian_precesses_in_the_lab_frame(spin4, rho_x):
    probe = ProbeConfig(coherent_rate=1 / TAU, nonlinearity_magnitude=0.0)
    field = FieldConfig(1000.0)
    grid = TimeGrid(0.0, 2e-3, 201)
    result = propagate_unitary(build_full_hamiltonian(spin4, field, probe), rho_x, grid)
    assert np.allclose(result.fx_series, 4 * np.cos(1000.0 * grid.times))
    assert np.allclose(result.fz_series, -4 * np.sin(1000.0 * grid.times))

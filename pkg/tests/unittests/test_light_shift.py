import json
import math

import numpy as np
import pytest
from scipy import constants

from faraday_sim.exceptions.config import PresetError, ProbeConfigurationError
from faraday_sim.light_shift import (
    FieldConfig,
    Frame,
    ProbeConfig,
    build_full_hamiltonian,
    build_rwa_hamiltonian,
    coherent_scattering_rate,
    critical_angle,
    default_larmor_frequency,
    load_species_preset,
    nonlinear_coefficient,
    rwa_geometric_factor,
    rwa_validity_margin,
    saturation_parameter,
    scalar_light_shift,
    scattering_time,
)


def test_shipped_preset_is_cesium_d2(preset):
    assert preset.gamma_rad_per_s == pytest.approx(2 * math.pi * 5.2e6, rel=2e-2)
    assert preset.gf == pytest.approx(0.25)


@pytest.mark.parametrize(
    "document",
    argvalues=[
        {"species_label": "x", "gamma_rad_per_s": 1.0},
        {"species_label": "x", "gamma_rad_per_s": 1.0, "gf": 0.5, "mass": 133},
        {"species_label": "x", "gamma_rad_per_s": -1.0, "gf": 0.5},
    ],
    ids=["missing key", "unknown key", "negative linewidth"],
)
def test_invalid_presets_are_rejected(document, tmp_path):
    path = tmp_path.joinpath("preset.json")
    path.write_text(json.dumps(document))
    with pytest.raises(PresetError):
        load_species_preset(path)


def test_unreadable_preset_is_a_preset_error(tmp_path):
    with pytest.raises(PresetError):
        load_species_preset(tmp_path.joinpath("missing.json"))


def test_scattering_rate_from_intensity_and_detuning():
    probe = ProbeConfig(
        detuning=2 * math.pi * 1e9, linewidth=2 * math.pi * 5e6, intensity_ratio=4.0
    )
    s = (5e6 / 2e9) ** 2 * 4.0
    assert saturation_parameter(probe) == pytest.approx(s)
    assert coherent_scattering_rate(probe) == pytest.approx(s * math.pi * 5e6)
    assert scalar_light_shift(probe) == pytest.approx(2 / 3 * s * math.pi * 1e9)


def test_extra_scattering_shortens_tau_but_not_chi():
    probe = ProbeConfig(coherent_rate=1000.0, extra_scattering_factor=2.0)
    assert scattering_time(probe) == pytest.approx(0.5e-3)
    assert nonlinear_coefficient(probe) == pytest.approx(-1200.0)


def test_no_scattering_gives_infinite_tau():
    assert scattering_time(ProbeConfig(coherent_rate=0.0)) == math.inf
    assert rwa_validity_margin(FieldConfig(100.0), ProbeConfig(coherent_rate=0.0)) == math.inf


@pytest.mark.parametrize(
    "kwargs",
    argvalues=[
        {"coherent_rate": 1.0, "polarization_angle": 2.0},
        {"coherent_rate": 1.0, "extra_scattering_factor": 0.5},
        {"coherent_rate": -1.0},
        {"detuning": 0.0, "intensity_ratio": 1.0},
    ],
    ids=["angle beyond 90 degrees", "extra factor below one", "negative rate", "no detuning"],
)
def test_invalid_probes_are_rejected(kwargs):
    with pytest.raises(ProbeConfigurationError):
        ProbeConfig(**kwargs)


def test_geometric_factor_and_critical_angle():
    assert rwa_geometric_factor(0.0) == pytest.approx(1.0)
    assert rwa_geometric_factor(math.pi / 2) == pytest.approx(-0.5)
    assert math.degrees(critical_angle()) == pytest.approx(54.7356, abs=1e-4)
    assert rwa_geometric_factor(critical_angle()) == pytest.approx(0.0, abs=1e-15)


def test_full_hamiltonian_at_zero_angle_commutes_with_field(spin4):
    probe = ProbeConfig(coherent_rate=1000.0, polarization_angle=0.0)
    hamiltonian = build_full_hamiltonian(spin4, FieldConfig(5e4), probe)
    expected = 5e4 * spin4.fy - 1200.0 * spin4.fy @ spin4.fy
    assert hamiltonian.frame is Frame.LAB
    assert np.allclose(hamiltonian.matrix, expected)


def test_full_hamiltonian_at_right_angle_uses_fx(spin4):
    probe = ProbeConfig(coherent_rate=1000.0, polarization_angle=math.pi / 2)
    hamiltonian = build_full_hamiltonian(spin4, FieldConfig(0.0), probe)
    assert np.allclose(hamiltonian.matrix, -1200.0 * spin4.fx @ spin4.fx)


def test_rwa_hamiltonian_vanishes_at_critical_angle(spin4):
    probe = ProbeConfig(coherent_rate=1000.0, polarization_angle=critical_angle())
    hamiltonian = build_rwa_hamiltonian(spin4, FieldConfig(5e4), probe)
    assert hamiltonian.frame is Frame.ROTATING
    assert hamiltonian.frame_frequency == 5e4
    assert np.max(np.abs(hamiltonian.matrix)) < 1e-9


def test_rwa_hamiltonian_carries_larmor_offset(spin4):
    probe = ProbeConfig(coherent_rate=1000.0, polarization_angle=math.pi / 2)
    hamiltonian = build_rwa_hamiltonian(spin4, FieldConfig(5e4), probe, larmor_offset=30.0)
    expected = 600.0 * spin4.fy @ spin4.fy + 30.0 * spin4.fy
    assert np.allclose(hamiltonian.matrix, expected)


def test_field_from_magnetic_field():
    field = FieldConfig.from_magnetic_field(-2e-6, 0.25)
    mu_b = constants.physical_constants["Bohr magneton"][0]
    assert field.larmor_frequency == pytest.approx(0.25 * mu_b * 2e-6 / constants.hbar)


def test_default_larmor_frequency_follows_chi():
    probe = ProbeConfig(coherent_rate=1000.0)
    assert default_larmor_frequency(probe, 200) == pytest.approx(200 * 1200.0)
    unshifted = ProbeConfig(coherent_rate=1000.0, nonlinearity_magnitude=0.0)
    assert default_larmor_frequency(unshifted, 200) == pytest.approx(200 * 1200.0)

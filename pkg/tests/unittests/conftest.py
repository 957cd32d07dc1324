import math

import pytest

from faraday_sim.constants import DEFAULT_PRESET_FILE
from faraday_sim.definition import RunConfig
from faraday_sim.light_shift import load_species_preset
from faraday_sim.spin_algebra import build_spin_operators

#: Scattering time used by most tests, in seconds.
TAU = 1e-3


@pytest.fixture(scope="session")
def preset():
    return load_species_preset(DEFAULT_PRESET_FILE)


@pytest.fixture
def spin4():
    return build_spin_operators(4)


@pytest.fixture
def minimal_definition_dict():
    """The smallest run configuration that fixes the probe strength."""
    return {"probe": {"scattering_time": TAU}}


@pytest.fixture
def closed_rotating_dict():
    """Twisting without pumping or noise, propagated in the rotating frame."""
    return {
        "probe": {"scattering_time": TAU, "polarization_angle": 0},
        "simulation": {"frame": "rotating"},
        "decoherence": {"model": "none"},
        "polarimeter": {"shot_noise": False},
    }


@pytest.fixture
def make_config(preset):
    def make(definition):
        return RunConfig(definition, preset)

    return make


@pytest.fixture
def twist_collapse_tau():
    """1/e time of f cos^(2f-1)(1.2 t / tau) for f = 4, in units of tau."""
    return math.acos(math.exp(-1 / 7)) / 1.2

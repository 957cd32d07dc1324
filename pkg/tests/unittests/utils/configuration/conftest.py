import pytest

from faraday_sim.constants import (
    DEFAULT_BIN_TIME,
    DEFAULT_GRID_COLLAPSE_TIMES,
    DEFAULT_LARMOR_RATIO,
    DEFAULT_PHOTON_FLUX,
    DEFAULT_PUMPING_CALIBRATION,
    DEFAULT_TRIALS,
)


@pytest.fixture
def expected_defaults():
    """Values every section reports when its keys are absent."""
    return {
        "probe": {
            "scattering_time": 1e-3,
            "polarization_angle": 90.0,
            "nonlinearity": 1.2,
            "extra_scattering_factor": 1.0,
        },
        "field": {"larmor_ratio": DEFAULT_LARMOR_RATIO, "larmor_frequency": None},
        "simulation": {"frame": None, "initial_polar": 90.0, "initial_azimuth": 0.0},
        "decoherence": {
            "model": "pumping",
            "calibration": DEFAULT_PUMPING_CALIBRATION,
            "loss": 0.0,
        },
        "ensemble": {"gamma_spread": 0.0, "larmor_spread": 0.0, "n_samples": 7},
        "polarimeter": {
            "rotation_gain": 1.0,
            "photon_flux": DEFAULT_PHOTON_FLUX,
            "bin_time": DEFAULT_BIN_TIME,
            "n_trials": DEFAULT_TRIALS,
            "rng_seed": 0,
            "shot_noise": True,
        },
        "grid": {"n_points": None, "collapse_times": DEFAULT_GRID_COLLAPSE_TIMES},
        "analysis": {"envelope_method": None, "fit_window": 2.0, "revival_window_start": 2.0},
    }

import pytest

from faraday_sim.utils.files.constants import TRACE_COLUMNS


@pytest.fixture
def trace_header():
    return {
        "tool": "faraday-sim",
        "config_digest": "0" * 64,
        "larmor_frequency": 240000.0,
        "rotation_gain": 1.0,
        "scattering_time": 1e-3,
        "envelope_method": "transverse",
    }


@pytest.fixture
def trace_rows():
    """Three rows of a valid trace, one value per trace column."""
    return [[float(i + column) for column in range(len(TRACE_COLUMNS))] for i in range(3)]

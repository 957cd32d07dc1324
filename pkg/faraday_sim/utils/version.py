import platform

import numpy
import scipy

from faraday_sim import __version__


def get_version_info() -> dict:
    """Tool version together with the numerical stack it runs on."""
    return {
        "faraday_sim": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "system": platform.system(),
    }

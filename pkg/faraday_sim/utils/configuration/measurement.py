from typing import Optional

import structlog

from faraday_sim.analysis import EnvelopeMethod
from faraday_sim.constants import (
    DEFAULT_BIN_TIME,
    DEFAULT_FIT_WINDOW,
    DEFAULT_GRID_COLLAPSE_TIMES,
    DEFAULT_INTEGRATOR_TOLERANCE,
    DEFAULT_MAX_SUBSTEPS,
    DEFAULT_PHOTON_FLUX,
    DEFAULT_REVIVAL_WINDOW_START,
    DEFAULT_ROTATION_GAIN,
    DEFAULT_TRIALS,
)
from faraday_sim.exceptions.config import (
    ConfigurationError,
    GridConfigurationError,
    PolarimeterConfigurationError,
)
from faraday_sim.light_shift import Frame
from faraday_sim.signal import PolarimeterConfig
from faraday_sim.utils.configuration.base import ConfigSection

log = structlog.get_logger(__name__)


class PolarimeterSettings(ConfigSection):
    """Balanced polarimeter and trial averaging.

    Example::

        polarimeter:
          photon_flux: 1.0e12   # photons/s
          bin_time: 1.0e-6      # s
          n_trials: 128
          rng_seed: 7
    """

    SECTION = "polarimeter"
    DEFAULTS = {
        "rotation_gain": DEFAULT_ROTATION_GAIN,
        "photon_flux": DEFAULT_PHOTON_FLUX,
        "bin_time": DEFAULT_BIN_TIME,
        "n_trials": DEFAULT_TRIALS,
        "rng_seed": 0,
        "shot_noise": True,
    }
    CONFIGURATION_ERROR = PolarimeterConfigurationError

    def validate(self) -> None:
        super().validate()
        self.to_polarimeter()

    @property
    def rotation_gain(self) -> float:
        return self.number("rotation_gain")

    @property
    def photon_flux(self) -> float:
        return self.number("photon_flux", minimum=0)

    @property
    def bin_time(self) -> float:
        return self.number("bin_time", strictly_positive=True)

    @property
    def n_trials(self) -> int:
        return self.integer("n_trials", minimum=1)

    @property
    def rng_seed(self) -> int:
        return self.integer("rng_seed", minimum=0)

    @property
    def shot_noise(self) -> bool:
        return self.flag("shot_noise")

    def to_polarimeter(self) -> PolarimeterConfig:
        return PolarimeterConfig(
            rotation_gain=self.rotation_gain,
            photon_flux=self.photon_flux,
            bin_time=self.bin_time,
            n_trials=self.n_trials,
            rng_seed=self.rng_seed,
            shot_noise=self.shot_noise,
        )


class GridSettings(ConfigSection):
    """Output time grid.

    The span is `duration` seconds, or `duration_tau` scattering times, or
    `collapse_times` times the shortest characteristic decay time of the run.
    Without `n_points`, the runner picks enough points to resolve the
    Larmor precession.
    """

    SECTION = "grid"
    DEFAULTS = {
        "n_points": None,
        "duration": None,
        "duration_tau": None,
        "collapse_times": DEFAULT_GRID_COLLAPSE_TIMES,
    }
    CONFIGURATION_ERROR = GridConfigurationError

    def validate(self) -> None:
        super().validate()
        self.exclusive("duration", "duration_tau", "collapse_times")
        self.n_points
        self.duration
        self.duration_tau
        self.collapse_times

    @property
    def n_points(self) -> Optional[int]:
        return self.integer("n_points", minimum=2)

    @property
    def duration(self) -> Optional[float]:
        return self.number("duration", strictly_positive=True)

    @property
    def duration_tau(self) -> Optional[float]:
        return self.number("duration_tau", strictly_positive=True)

    @property
    def collapse_times(self) -> float:
        return self.number("collapse_times", strictly_positive=True)


class AnalysisSettings(ConfigSection):
    SECTION = "analysis"
    DEFAULTS = {
        "envelope_method": None,
        "fit_window": DEFAULT_FIT_WINDOW,
        "revival_window_start": DEFAULT_REVIVAL_WINDOW_START,
    }
    CONFIGURATION_ERROR = ConfigurationError

    def validate(self) -> None:
        super().validate()
        self.envelope_method
        self.fit_window
        self.revival_window_start

    @property
    def envelope_method(self) -> Optional[str]:
        return self.choice("envelope_method", [m.value for m in EnvelopeMethod])

    @property
    def fit_window(self) -> float:
        """End of the decay-fit window in multiples of the 1/e time."""
        return self.number("fit_window", strictly_positive=True)

    @property
    def revival_window_start(self) -> float:
        return self.number("revival_window_start", strictly_positive=True)

    def method_for(self, frame: Frame) -> EnvelopeMethod:
        """The configured method, else demodulation in the lab frame and transverse otherwise."""
        if self.envelope_method:
            return EnvelopeMethod(self.envelope_method)
        if frame is Frame.LAB:
            return EnvelopeMethod.QUADRATURE_DEMOD
        return EnvelopeMethod.TRANSVERSE


class IntegratorSettings(ConfigSection):
    SECTION = "integrator"
    DEFAULTS = {"tolerance": DEFAULT_INTEGRATOR_TOLERANCE, "max_substeps": DEFAULT_MAX_SUBSTEPS}
    CONFIGURATION_ERROR = GridConfigurationError

    def validate(self) -> None:
        super().validate()
        self.tolerance
        self.max_substeps

    @property
    def tolerance(self) -> float:
        return self.number("tolerance", strictly_positive=True)

    @property
    def max_substeps(self) -> int:
        return self.integer("max_substeps", minimum=1)

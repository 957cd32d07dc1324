import math
from typing import Optional

import structlog

from faraday_sim.constants import DEFAULT_ENSEMBLE_NODES, DEFAULT_PUMPING_CALIBRATION
from faraday_sim.decoherence import EnsembleSpec
from faraday_sim.exceptions.config import DecoherenceConfigurationError
from faraday_sim.utils.configuration.base import ConfigSection

log = structlog.get_logger(__name__)

PUMPING = "pumping"
NO_DECOHERENCE = "none"


class DecoherenceSettings(ConfigSection):
    """Optical pumping model.

    Example::

        decoherence:
          model: pumping
          calibration: 0.25
          loss: 0.0
    """

    SECTION = "decoherence"
    DEFAULTS = {"model": PUMPING, "calibration": DEFAULT_PUMPING_CALIBRATION, "loss": 0.0}
    CONFIGURATION_ERROR = DecoherenceConfigurationError

    def validate(self) -> None:
        super().validate()
        self.model
        self.calibration
        self.loss

    @property
    def model(self) -> str:
        return self.choice("model", [PUMPING, NO_DECOHERENCE])

    @property
    def calibration(self) -> float:
        """Depolarization rate in units of the scattering rate."""
        return self.number("calibration", minimum=0)

    @property
    def loss(self) -> float:
        return self.number("loss", minimum=0)


class EnsembleSettings(ConfigSection):
    """Gaussian spreads of probe intensity and Larmor frequency across the ensemble.

    `plateau_time` is a shorthand for a Larmor spread of sqrt(2)/plateau_time,
    the dephasing time of a Gaussian frequency distribution.
    """

    SECTION = "ensemble"
    DEFAULTS = {
        "gamma_spread": 0.0,
        "larmor_spread": None,
        "plateau_time": None,
        "n_samples": DEFAULT_ENSEMBLE_NODES,
    }
    CONFIGURATION_ERROR = DecoherenceConfigurationError

    def validate(self) -> None:
        super().validate()
        self.exclusive("larmor_spread", "plateau_time")
        self.to_spec()

    @property
    def gamma_spread(self) -> float:
        """Fractional standard deviation of the probe intensity."""
        return self.number("gamma_spread", minimum=0)

    @property
    def larmor_spread(self) -> float:
        """Standard deviation of the Larmor frequency, rad/s."""
        plateau = self.plateau_time
        if plateau is not None:
            return math.sqrt(2) / plateau
        return self.number("larmor_spread", minimum=0) or 0.0

    @property
    def plateau_time(self) -> Optional[float]:
        return self.number("plateau_time", strictly_positive=True)

    @property
    def n_samples(self) -> int:
        return self.integer("n_samples", minimum=1)

    def to_spec(self) -> EnsembleSpec:
        return EnsembleSpec(
            gamma_spread_fractional=self.gamma_spread,
            larmor_spread=self.larmor_spread,
            n_samples=self.n_samples,
        )

import math
from typing import Optional

import structlog

from faraday_sim.constants import (
    DEFAULT_LARMOR_RATIO,
    DEFAULT_POLARIZATION_ANGLE_DEG,
    DEFAULT_SCATTERING_TIME,
    NONLINEARITY_COEFFICIENT,
)
from faraday_sim.exceptions.config import (
    FieldConfigurationError,
    GridConfigurationError,
    ProbeConfigurationError,
)
from faraday_sim.light_shift import (
    FieldConfig,
    Frame,
    ProbeConfig,
    SpeciesPreset,
    critical_angle,
    default_larmor_frequency,
)
from faraday_sim.utils.configuration.base import ConfigSection

log = structlog.get_logger(__name__)

CRITICAL = "critical"


def parse_angle_degrees(value, path: str) -> float:
    """Angle in degrees; the string 'critical' selects arctan(sqrt(2))."""
    if isinstance(value, str) and value.strip().lower() == CRITICAL:
        return math.degrees(critical_angle())
    if isinstance(value, bool):
        raise ProbeConfigurationError(f"{path}: must be a number or '{CRITICAL}', got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ProbeConfigurationError(
            f"{path}: must be a number or '{CRITICAL}', got {value!r}"
        ) from None


class ProbeSettings(ConfigSection):
    """Probe section of a run configuration.

    The probe strength is given by exactly one of `intensity_ratio` (with a
    `detuning`), `scattering_rate` or `scattering_time`. The latter two fix the
    coherent scattering rate directly; `extra_scattering_factor` then scales
    only the decoherence.

    Example::

        probe:
          scattering_time: 2.0e-3     # s
          polarization_angle: critical
          extra_scattering_factor: 1.2
    """

    SECTION = "probe"
    DEFAULTS = {
        "detuning": None,
        "linewidth": None,
        "intensity_ratio": None,
        "scattering_rate": None,
        "scattering_time": None,
        "polarization_angle": DEFAULT_POLARIZATION_ANGLE_DEG,
        "nonlinearity": NONLINEARITY_COEFFICIENT,
        "extra_scattering_factor": 1.0,
    }
    CONFIGURATION_ERROR = ProbeConfigurationError

    def __init__(self, loaded_definition: dict, preset: SpeciesPreset) -> None:
        self.preset = preset
        super().__init__(loaded_definition)

    def validate(self) -> None:
        super().validate()
        self.exclusive("intensity_ratio", "scattering_rate", "scattering_time")
        if self.dict.get("intensity_ratio") is not None and not self.detuning:
            raise self.error("detuning", "must be given and non-zero with probe.intensity_ratio")
        self.to_probe()

    @property
    def detuning(self) -> Optional[float]:
        return self.number("detuning")

    @property
    def linewidth(self) -> float:
        return self.number(
            "linewidth", strictly_positive=True, default=self.preset.gamma_rad_per_s
        )

    @property
    def intensity_ratio(self) -> Optional[float]:
        return self.number("intensity_ratio", minimum=0)

    @property
    def scattering_rate(self) -> Optional[float]:
        return self.number("scattering_rate", minimum=0)

    @property
    def scattering_time(self) -> Optional[float]:
        if any(self.dict.get(key) is not None for key in ("intensity_ratio", "scattering_rate")):
            return None
        return self.number(
            "scattering_time", strictly_positive=True, default=DEFAULT_SCATTERING_TIME
        )

    @property
    def polarization_angle(self) -> float:
        """Angle between probe polarization and field, in degrees."""
        return parse_angle_degrees(
            self.dict.get("polarization_angle", self.DEFAULTS["polarization_angle"]),
            self.path("polarization_angle"),
        )

    @property
    def nonlinearity(self) -> float:
        return self.number("nonlinearity", minimum=0)

    @property
    def extra_scattering_factor(self) -> float:
        return self.number("extra_scattering_factor", minimum=1)

    def to_probe(self) -> ProbeConfig:
        coherent_rate = self.scattering_rate
        if self.scattering_time is not None:
            coherent_rate = 1 / self.scattering_time
        return ProbeConfig(
            detuning=self.detuning or 0.0,
            linewidth=self.linewidth,
            intensity_ratio=self.intensity_ratio or 0.0,
            polarization_angle=math.radians(self.polarization_angle),
            nonlinearity_magnitude=self.nonlinearity,
            extra_scattering_factor=self.extra_scattering_factor,
            coherent_rate=coherent_rate,
        )


class FieldSettings(ConfigSection):
    """Magnetic field section.

    Either `larmor_frequency` (rad/s) or `magnetic_field` (T, converted with the
    preset's g_F) fixes the field; without both, Omega_L = larmor_ratio * |chi|.
    """

    SECTION = "field"
    DEFAULTS = {
        "larmor_frequency": None,
        "magnetic_field": None,
        "larmor_ratio": DEFAULT_LARMOR_RATIO,
    }
    CONFIGURATION_ERROR = FieldConfigurationError

    def validate(self) -> None:
        super().validate()
        self.exclusive("larmor_frequency", "magnetic_field")
        self.exclusive("magnetic_field", "larmor_ratio")
        self.exclusive("larmor_frequency", "larmor_ratio")
        self.larmor_frequency
        self.magnetic_field
        self.larmor_ratio

    @property
    def larmor_frequency(self) -> Optional[float]:
        return self.number("larmor_frequency", minimum=0)

    @property
    def magnetic_field(self) -> Optional[float]:
        return self.number("magnetic_field")

    @property
    def larmor_ratio(self) -> float:
        return self.number("larmor_ratio", strictly_positive=True)

    @property
    def is_fixed(self) -> bool:
        """Whether the field is set in absolute terms rather than relative to chi."""
        return self.larmor_frequency is not None or self.magnetic_field is not None

    def to_field(self, probe: ProbeConfig, preset: SpeciesPreset) -> FieldConfig:
        if self.larmor_frequency is not None:
            return FieldConfig(larmor_frequency=self.larmor_frequency)
        if self.magnetic_field is not None:
            return FieldConfig.from_magnetic_field(self.magnetic_field, preset.gf)
        return FieldConfig(larmor_frequency=default_larmor_frequency(probe, self.larmor_ratio))


class SimulationSettings(ConfigSection):
    """Frame of the propagation and direction of the initial coherent state (degrees)."""

    SECTION = "simulation"
    DEFAULTS = {"frame": None, "initial_polar": 90.0, "initial_azimuth": 0.0}
    CONFIGURATION_ERROR = GridConfigurationError

    def validate(self) -> None:
        super().validate()
        self.frame
        self.initial_polar
        self.initial_azimuth

    @property
    def frame(self) -> Optional[str]:
        return self.choice("frame", [f.value for f in Frame])

    @property
    def initial_polar(self) -> float:
        return self.number("initial_polar")

    @property
    def initial_azimuth(self) -> float:
        return self.number("initial_azimuth")

    def frame_or(self, default: Frame) -> Frame:
        return Frame(self.frame) if self.frame else default

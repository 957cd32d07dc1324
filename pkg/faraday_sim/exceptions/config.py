from faraday_sim.exceptions import FaradaySimError


class ConfigurationError(FaradaySimError, ValueError):
    """Generic error raised while reading or validating a run configuration."""

    exit_code = 1


class UnknownKeyError(ConfigurationError):
    """A config section contained keys it does not know about."""


class ProbeConfigurationError(ConfigurationError):
    """An error occurred while validating the `probe` section."""


class FieldConfigurationError(ConfigurationError):
    """An error occurred while validating the `field` section."""


class DecoherenceConfigurationError(ConfigurationError):
    """An error occurred while validating the `decoherence` or `ensemble` sections."""


class PolarimeterConfigurationError(ConfigurationError):
    pass


class GridConfigurationError(ConfigurationError):
    """An error occurred while validating the `grid`, `analysis` or `integrator` sections."""


class ScanConfigurationError(ConfigurationError):
    """The `scan` section names an unknown parameter or yields no values."""


class PresetError(ConfigurationError):
    """The species preset file is missing keys or carries unknown ones."""

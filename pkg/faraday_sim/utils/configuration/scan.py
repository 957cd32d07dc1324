from typing import List, Optional

import numpy as np
import structlog

from faraday_sim.exceptions.config import ScanConfigurationError
from faraday_sim.utils.configuration.base import ConfigSection
from faraday_sim.utils.configuration.physics import parse_angle_degrees

log = structlog.get_logger(__name__)

SCATTERING_TIME = "scattering_time"
POLARIZATION_ANGLE = "polarization_angle"
SWEEPABLE = (SCATTERING_TIME, POLARIZATION_ANGLE)

RANGE_KEYS = {"start", "stop", "num", "spacing"}
SPACINGS = ("log", "linear")


class ScanSettings(ConfigSection):
    """Swept parameter and its values.

    Values are given either as an explicit list or as a range::

        scan:
          parameter: scattering_time
          range: {start: 1.0e-4, stop: 1.0e-2, num: 5, spacing: log}

    Scattering times are in seconds, polarization angles in degrees (the
    string `critical` is accepted in a value list).
    """

    SECTION = "scan"
    DEFAULTS = {"parameter": None, "values": None, "range": None}
    CONFIGURATION_ERROR = ScanConfigurationError

    def validate(self) -> None:
        super().validate()
        self.exclusive("values", "range")
        self.parameter
        self.values

    @property
    def parameter(self) -> Optional[str]:
        return self.choice("parameter", SWEEPABLE)

    def parameter_or(self, default: str) -> str:
        """The swept parameter, which must agree with `default` when set."""
        parameter = self.parameter
        if parameter is not None and parameter != default:
            raise self.error("parameter", f"this command sweeps {default}, got {parameter!r}")
        return default

    @property
    def values(self) -> Optional[List[float]]:
        """Swept values in ascending order, without duplicates."""
        if self.dict.get("values") is not None:
            values = self._explicit_values()
        elif self.dict.get("range") is not None:
            values = self._range_values()
        else:
            return None
        return sorted(set(values))

    def _explicit_values(self) -> List[float]:
        raw = self.dict["values"]
        if not isinstance(raw, list) or not raw:
            raise self.error("values", f"must be a non-empty list, got {raw!r}")
        values = []
        for index, value in enumerate(raw):
            path = f"{self.path('values')}[{index}]"
            try:
                values.append(parse_angle_degrees(value, path))
            except ValueError:
                raise self.CONFIGURATION_ERROR(
                    f"{path}: must be a number, got {value!r}"
                ) from None
        return values

    def _range_values(self) -> List[float]:
        spec = self.dict["range"]
        if not isinstance(spec, dict):
            raise self.error("range", f"must be a mapping, got {spec!r}")
        unknown = sorted(set(spec) - RANGE_KEYS)
        if unknown:
            raise self.error("range", f"unknown key(s) {', '.join(unknown)}")
        missing = sorted({"start", "stop", "num"} - set(spec))
        if missing:
            raise self.error("range", f"missing key(s) {', '.join(missing)}")
        try:
            start, stop = float(spec["start"]), float(spec["stop"])
            num = int(spec["num"])
        except (TypeError, ValueError):
            raise self.error(
                "range", f"start, stop and num must be numbers, got {spec!r}"
            ) from None
        if num < 1:
            raise self.error("range.num", f"must be >= 1, got {num}")
        spacing = spec.get("spacing", "linear")
        if spacing not in SPACINGS:
            raise self.error(
                "range.spacing", f"must be one of {', '.join(SPACINGS)}, got {spacing!r}"
            )
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise self.error("range", "log spacing needs positive start and stop")
            return np.geomspace(start, stop, num).tolist()
        return np.linspace(start, stop, num).tolist()

    def resolved(self) -> dict:
        return {"parameter": self.parameter, "values": self.values}

import math
from typing import Any, Dict, Optional, Type

import structlog

from faraday_sim.exceptions.config import ConfigurationError, UnknownKeyError

log = structlog.get_logger(__name__)


class ConfigSection:
    """Thin wrapper around one section of a loaded run configuration.

    Subclasses declare their section name, the keys they accept and the
    defaults of those keys. Unknown keys are rejected on construction, and
    every error message carries the dotted key path.
    """

    SECTION: str = ""
    DEFAULTS: Dict[str, Any] = {}
    CONFIGURATION_ERROR: Type[ConfigurationError] = ConfigurationError

    def __init__(self, loaded_definition: dict) -> None:
        section = loaded_definition.get(self.SECTION)
        if section is None:
            section = {}
        if not isinstance(section, dict):
            raise self.CONFIGURATION_ERROR(
                f"{self.SECTION}: must be a mapping, got {type(section).__name__}"
            )
        self.dict = section
        self.validate()

    def validate(self) -> None:
        unknown = sorted(set(self.dict) - set(self.DEFAULTS))
        if unknown:
            raise UnknownKeyError(
                f"{self.SECTION}: unknown key(s) {', '.join(unknown)}; "
                f"known keys are {', '.join(sorted(self.DEFAULTS))}"
            )

    def path(self, key: str) -> str:
        return f"{self.SECTION}.{key}"

    def error(self, key: str, message: str) -> ConfigurationError:
        return self.CONFIGURATION_ERROR(f"{self.path(key)}: {message}")

    def number(
        self,
        key: str,
        minimum: Optional[float] = None,
        strictly_positive: bool = False,
        default: Any = None,
    ) -> Optional[float]:
        """Read a float, accepting numeric strings such as '1e-3'.

        YAML 1.1 loaders read exponent notation without a decimal point as a string.
        """
        value = self.dict.get(key, self.DEFAULTS.get(key) if default is None else default)
        if value is None:
            return None
        if isinstance(value, bool):
            raise self.error(key, f"must be a number, got {value!r}")
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise self.error(key, f"must be a number, got {value!r}") from None
        if not math.isfinite(number):
            raise self.error(key, f"must be finite, got {value!r}")
        if strictly_positive and number <= 0:
            raise self.error(key, f"must be positive, got {number}")
        if minimum is not None and number < minimum:
            raise self.error(key, f"must be >= {minimum}, got {number}")
        return number

    def integer(self, key: str, minimum: Optional[int] = None) -> Optional[int]:
        value = self.dict.get(key, self.DEFAULTS.get(key))
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise self.error(key, f"must be an integer, got {value!r}")
        try:
            number = float(value)
        except ValueError:
            raise self.error(key, f"must be an integer, got {value!r}") from None
        if not number.is_integer():
            raise self.error(key, f"must be an integer, got {value!r}")
        if minimum is not None and number < minimum:
            raise self.error(key, f"must be >= {minimum}, got {int(number)}")
        return int(number)

    def flag(self, key: str) -> bool:
        value = self.dict.get(key, self.DEFAULTS.get(key))
        if not isinstance(value, bool):
            raise self.error(key, f"must be true or false, got {value!r}")
        return value

    def choice(self, key: str, choices) -> Optional[str]:
        value = self.dict.get(key, self.DEFAULTS.get(key))
        if value is None:
            return None
        if value not in choices:
            raise self.error(key, f"must be one of {', '.join(choices)}, got {value!r}")
        return value

    def exclusive(self, *keys: str) -> None:
        present = [key for key in keys if self.dict.get(key) is not None]
        if len(present) > 1:
            raise self.CONFIGURATION_ERROR(
                f"{self.SECTION}: {' and '.join(self.path(k) for k in present)} "
                f"are mutually exclusive"
            )

    def resolved(self) -> Dict[str, Any]:
        """Section contents with defaults filled in, as plain JSON-able values."""
        return {key: getattr(self, key) for key in sorted(self.DEFAULTS)}

import copy
import hashlib
import json
import math
import pathlib
from dataclasses import asdict
from typing import Any, Dict, Optional

import jinja2
import structlog
import yaml

from faraday_sim.constants import DEFAULT_PRESET_FILE, DEFAULT_SPIN
from faraday_sim.exceptions.config import ConfigurationError, UnknownKeyError
from faraday_sim.light_shift import SpeciesPreset, critical_angle, load_species_preset
from faraday_sim.utils.configuration import (
    AnalysisSettings,
    DecoherenceSettings,
    EnsembleSettings,
    FieldSettings,
    GridSettings,
    IntegratorSettings,
    PolarimeterSettings,
    ProbeSettings,
    ScanSettings,
    SimulationSettings,
)

log = structlog.get_logger(__name__)

TOP_LEVEL_KEYS = {
    "spin",
    "probe",
    "field",
    "simulation",
    "decoherence",
    "ensemble",
    "polarimeter",
    "grid",
    "analysis",
    "integrator",
    "scan",
}


class RunConfig:
    """Interface for a run configuration `.yaml` document.

    The document is rendered as a jinja2 template against the species preset
    (plus `pi` and `critical_angle_deg`) and only then parsed as YAML, so that
    values may be written relative to the preset::

        probe:
          linewidth: {{ gamma_rad_per_s }}
          scattering_time: 2.0e-3
          polarization_angle: {{ critical_angle_deg }}

    Every section is validated on construction.
    """

    def __init__(self, loaded: Optional[dict], preset: SpeciesPreset) -> None:
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(
                f"Run configuration must be a mapping, got {type(loaded).__name__}"
            )
        unknown = sorted(set(loaded) - TOP_LEVEL_KEYS)
        if unknown:
            raise UnknownKeyError(
                f"Unknown configuration section(s) {', '.join(unknown)}; "
                f"known sections are {', '.join(sorted(TOP_LEVEL_KEYS))}"
            )
        self._loaded = loaded
        self.preset = preset

        self.probe = ProbeSettings(loaded, preset)
        self.field = FieldSettings(loaded)
        self.simulation = SimulationSettings(loaded)
        self.decoherence = DecoherenceSettings(loaded)
        self.ensemble = EnsembleSettings(loaded)
        self.polarimeter = PolarimeterSettings(loaded)
        self.grid = GridSettings(loaded)
        self.analysis = AnalysisSettings(loaded)
        self.integrator = IntegratorSettings(loaded)
        self.scan = ScanSettings(loaded)
        self.spin

    @classmethod
    def from_file(
        cls,
        path: Optional[pathlib.Path],
        preset_path: pathlib.Path = DEFAULT_PRESET_FILE,
        seed: Optional[int] = None,
    ) -> "RunConfig":
        """Load and validate a configuration file; no file means all defaults."""
        preset = load_species_preset(preset_path)
        loaded: Optional[dict] = {}
        if path is not None:
            loaded = render_config(pathlib.Path(path).read_text(), preset)
        config = cls(loaded, preset)
        if seed is not None:
            config = config.with_override("polarimeter.rng_seed", seed)
        return config

    @property
    def spin(self) -> float:
        value = self._loaded.get("spin", DEFAULT_SPIN)
        if isinstance(value, bool):
            raise ConfigurationError(f"spin: must be a number, got {value!r}")
        try:
            spin = float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"spin: must be a number, got {value!r}") from None
        if spin <= 0 or not (2 * spin).is_integer():
            raise ConfigurationError(f"spin: must be a positive multiple of 1/2, got {spin}")
        return spin

    def with_override(self, dotted_key: str, value: Any, drop: tuple = ()) -> "RunConfig":
        """A copy with `section.key` set to `value` and the `drop` keys removed.

        Dropped keys are given relative to the same section, which lets a sweep
        replace one of a set of mutually exclusive keys.
        """
        section, _, key = dotted_key.partition(".")
        loaded = copy.deepcopy(self._loaded)
        if not key:
            loaded[section] = value
        else:
            target = dict(loaded.get(section) or {})
            for dropped in drop:
                target.pop(dropped, None)
            target[key] = value
            loaded[section] = target
        return RunConfig(loaded, self.preset)

    def resolved(self) -> Dict[str, Any]:
        """The configuration with every default filled in."""
        return {
            "spin": self.spin,
            "preset": asdict(self.preset),
            "probe": self.probe.resolved(),
            "field": self.field.resolved(),
            "simulation": self.simulation.resolved(),
            "decoherence": self.decoherence.resolved(),
            "ensemble": self.ensemble.resolved(),
            "polarimeter": self.polarimeter.resolved(),
            "grid": self.grid.resolved(),
            "analysis": self.analysis.resolved(),
            "integrator": self.integrator.resolved(),
            "scan": self.scan.resolved(),
        }

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of :meth:`resolved`."""
        canonical = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def render_config(text: str, preset: SpeciesPreset) -> Optional[dict]:
    """Render a config document against the preset and parse the resulting YAML."""
    try:
        template = jinja2.Template(text, undefined=jinja2.StrictUndefined)
        rendered = template.render(
            pi=math.pi, critical_angle_deg=math.degrees(critical_angle()), **asdict(preset)
        )
    except jinja2.TemplateError as ex:
        raise ConfigurationError(f"Could not render configuration template: {ex}") from ex
    try:
        return yaml.safe_load(rendered)
    except yaml.YAMLError as ex:
        raise ConfigurationError(f"Configuration is not valid YAML: {ex}") from ex

from faraday_sim.utils.configuration.base import ConfigSection
from faraday_sim.utils.configuration.decoherence import DecoherenceSettings, EnsembleSettings
from faraday_sim.utils.configuration.measurement import (
    AnalysisSettings,
    GridSettings,
    IntegratorSettings,
    PolarimeterSettings,
)
from faraday_sim.utils.configuration.physics import (
    FieldSettings,
    ProbeSettings,
    SimulationSettings,
)
from faraday_sim.utils.configuration.scan import ScanSettings

__all__ = [
    "AnalysisSettings",
    "ConfigSection",
    "DecoherenceSettings",
    "EnsembleSettings",
    "FieldSettings",
    "GridSettings",
    "IntegratorSettings",
    "PolarimeterSettings",
    "ProbeSettings",
    "ScanSettings",
    "SimulationSettings",
]

"""Probe light shift and the single-spin Hamiltonians it produces.

The probe propagates along z, the magnetic field points along y and the linear
probe polarization lies in the x-y plane at an angle theta from the field, so
that (eps.F)^2 = (sin(theta) F_x + cos(theta) F_y)^2.
"""
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
import structlog
from scipy import constants

from faraday_sim.constants import NONLINEARITY_COEFFICIENT
from faraday_sim.exceptions import DimensionMismatchError, InvalidHamiltonianError
from faraday_sim.exceptions.config import (
    FieldConfigurationError,
    PresetError,
    ProbeConfigurationError,
)
from faraday_sim.spin_algebra import SpinOperators, is_hermitian

log = structlog.get_logger(__name__)

#: Angles this close outside [0, pi/2] are clipped rather than rejected.
ANGLE_SLACK = 1e-12


class Frame(Enum):
    LAB = "lab"
    ROTATING = "rotating"


@dataclass(frozen=True)
class SpeciesPreset:
    species_label: str
    gamma_rad_per_s: float
    gf: float


def load_species_preset(path: Path) -> SpeciesPreset:
    """Load a physical-constant preset from a JSON document.

    Example preset::

        {
          "species_label": "133Cs F=4, D2 line",
          "gamma_rad_per_s": 32672563.597333,
          "gf": 0.25
        }

    :raises PresetError: if keys are missing or unknown, or the linewidth is not positive.
    """
    try:
        with Path(path).open() as f:
            loaded = json.load(f)
    except (OSError, json.JSONDecodeError) as ex:
        raise PresetError(f"Could not read species preset {path}: {ex}") from ex

    expected = {"species_label", "gamma_rad_per_s", "gf"}
    if not isinstance(loaded, dict) or set(loaded) != expected:
        found = sorted(loaded) if isinstance(loaded, dict) else type(loaded).__name__
        raise PresetError(
            f"Species preset {path} must define exactly {sorted(expected)}, got {found}"
        )
    preset = SpeciesPreset(
        species_label=str(loaded["species_label"]),
        gamma_rad_per_s=float(loaded["gamma_rad_per_s"]),
        gf=float(loaded["gf"]),
    )
    if preset.gamma_rad_per_s <= 0:
        raise PresetError(f"gamma_rad_per_s must be positive, got {preset.gamma_rad_per_s}")
    return preset


@dataclass(frozen=True)
class ProbeConfig:
    """Probe parameters.

    Either `detuning` together with `intensity_ratio` determines the scattering
    rate, or `coherent_rate` supplies it directly (in which case the detuning
    only enters the reported scalar light shift).
    """

    detuning: float = 0.0
    linewidth: float = 2 * math.pi * 5.2e6
    intensity_ratio: float = 0.0
    polarization_angle: float = 0.0
    nonlinearity_magnitude: float = NONLINEARITY_COEFFICIENT
    extra_scattering_factor: float = 1.0
    coherent_rate: Optional[float] = None

    def __post_init__(self):
        if self.linewidth <= 0:
            raise ProbeConfigurationError(
                f"probe.linewidth: must be positive, got {self.linewidth}"
            )
        if self.intensity_ratio < 0:
            raise ProbeConfigurationError(
                f"probe.intensity_ratio: must be non-negative, got {self.intensity_ratio}"
            )
        if self.coherent_rate is None and self.detuning == 0:
            raise ProbeConfigurationError("probe.detuning: must be non-zero")
        if self.coherent_rate is not None and self.coherent_rate < 0:
            raise ProbeConfigurationError(
                f"probe.scattering_rate: must be non-negative, got {self.coherent_rate}"
            )
        if not -ANGLE_SLACK <= self.polarization_angle <= math.pi / 2 + ANGLE_SLACK:
            raise ProbeConfigurationError(
                f"probe.polarization_angle: must lie in [0, 90] degrees, "
                f"got {math.degrees(self.polarization_angle)}"
            )
        object.__setattr__(
            self, "polarization_angle", min(max(self.polarization_angle, 0.0), math.pi / 2)
        )
        if self.nonlinearity_magnitude < 0:
            raise ProbeConfigurationError(
                f"probe.nonlinearity: must be non-negative, got {self.nonlinearity_magnitude}"
            )
        if self.extra_scattering_factor < 1:
            raise ProbeConfigurationError(
                f"probe.extra_scattering_factor: must be >= 1, got {self.extra_scattering_factor}"
            )


@dataclass(frozen=True)
class FieldConfig:
    """Magnetic field along the y-axis of the simulation frame."""

    larmor_frequency: float = 0.0

    def __post_init__(self):
        if self.larmor_frequency < 0:
            raise FieldConfigurationError(
                f"field.larmor_frequency: must be non-negative, got {self.larmor_frequency}"
            )

    @classmethod
    def from_magnetic_field(cls, b_tesla: float, g_f: float) -> "FieldConfig":
        """Omega_L = |g_F| mu_B |B| / hbar."""
        mu_b = constants.physical_constants["Bohr magneton"][0]
        return cls(larmor_frequency=abs(g_f) * mu_b * abs(b_tesla) / constants.hbar)


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    matrix: np.ndarray
    frame: Frame
    description: str
    #: Rotation rate of the frame about y; zero for lab-frame Hamiltonians.
    frame_frequency: float = 0.0

    def __post_init__(self):
        if not is_hermitian(self.matrix, tolerance=1e-12 * max(1.0, np.abs(self.matrix).max())):
            raise InvalidHamiltonianError(f"Hamiltonian '{self.description}' is not Hermitian")
        self.matrix.setflags(write=False)


def saturation_parameter(probe: ProbeConfig) -> float:
    """s = (Gamma / 2 Delta)^2 I_p / I_0."""
    if probe.detuning == 0:
        raise ProbeConfigurationError("probe.detuning: must be non-zero")
    return (probe.linewidth / (2 * probe.detuning)) ** 2 * probe.intensity_ratio


def coherent_scattering_rate(probe: ProbeConfig) -> float:
    """Photon scattering rate s Gamma / 2 driving the light shift."""
    if probe.coherent_rate is not None:
        return probe.coherent_rate
    return saturation_parameter(probe) * probe.linewidth / 2


def scattering_rate(probe: ProbeConfig) -> float:
    """Total scattering rate gamma_s, including any extra scattering."""
    return coherent_scattering_rate(probe) * probe.extra_scattering_factor


def scattering_time(probe: ProbeConfig) -> float:
    rate = scattering_rate(probe)
    return 1 / rate if rate > 0 else math.inf


def nonlinear_coefficient(probe: ProbeConfig) -> float:
    """chi = -1.2 gamma_s, with the magnitude taken from the probe config."""
    return -probe.nonlinearity_magnitude * coherent_scattering_rate(probe)


def scalar_light_shift(probe: ProbeConfig) -> float:
    """The spin-independent (2/3) U_0 shift, U_0 = s Delta / 2.

    Reported only; it never enters a Hamiltonian.
    """
    u_0 = coherent_scattering_rate(probe) * probe.detuning / probe.linewidth
    return 2 * u_0 / 3


def rwa_geometric_factor(theta: float) -> float:
    return -0.5 * math.sin(theta) ** 2 + math.cos(theta) ** 2


def critical_angle() -> float:
    """Polarization angle at which the averaged nonlinearity vanishes."""
    return math.atan(math.sqrt(2))


def _check_dimensions(ops: SpinOperators) -> None:
    for name in ("fx", "fy", "fz"):
        if getattr(ops, name).shape != (ops.dim, ops.dim):
            raise DimensionMismatchError(f"Spin operator {name} is not {ops.dim}x{ops.dim}")


def build_full_hamiltonian(
    ops: SpinOperators, field: FieldConfig, probe: ProbeConfig
) -> HamiltonianSpec:
    """H = Omega_L F_y + chi (sin(theta) F_x + cos(theta) F_y)^2 in the lab frame."""
    _check_dimensions(ops)
    theta = probe.polarization_angle
    chi = nonlinear_coefficient(probe)
    polarization_projection = math.sin(theta) * ops.fx + math.cos(theta) * ops.fy
    matrix = field.larmor_frequency * ops.fy + chi * (
        polarization_projection @ polarization_projection
    )
    # Products of Hermitian matrices pick up round-off asymmetry.
    matrix = (matrix + matrix.conj().T) / 2
    return HamiltonianSpec(
        matrix=matrix,
        frame=Frame.LAB,
        description=(
            f"full: Omega_L={field.larmor_frequency:.6g}, chi={chi:.6g}, "
            f"theta={math.degrees(theta):.6g}deg"
        ),
    )


def build_rwa_hamiltonian(
    ops: SpinOperators, field: FieldConfig, probe: ProbeConfig, larmor_offset: float = 0.0
) -> HamiltonianSpec:
    """H_rot = chi g(theta) F_y^2 in the frame rotating at Omega_L about y.

    `larmor_offset` adds delta F_y for an atom whose Larmor frequency differs
    from the frame frequency by delta.
    """
    _check_dimensions(ops)
    chi = nonlinear_coefficient(probe)
    factor = rwa_geometric_factor(probe.polarization_angle)
    matrix = chi * factor * (ops.fy @ ops.fy) + larmor_offset * ops.fy
    matrix = (matrix + matrix.conj().T) / 2
    return HamiltonianSpec(
        matrix=matrix,
        frame=Frame.ROTATING,
        description=f"rwa: chi*g(theta)={chi * factor:.6g}, offset={larmor_offset:.6g}",
        frame_frequency=field.larmor_frequency,
    )


def rwa_validity_margin(field: FieldConfig, probe: ProbeConfig) -> float:
    """Omega_L / gamma_s; infinite without scattering."""
    rate = scattering_rate(probe)
    if rate == 0:
        return math.inf
    return field.larmor_frequency / rate


def default_larmor_frequency(probe: ProbeConfig, larmor_ratio: float) -> float:
    """Omega_L = larmor_ratio * |chi|.

    With the nonlinearity switched off, |chi| is taken at the default magnitude
    so that the precession stays tied to the scattering rate.
    """
    magnitude = probe.nonlinearity_magnitude or NONLINEARITY_COEFFICIENT
    return larmor_ratio * magnitude * coherent_scattering_rate(probe)

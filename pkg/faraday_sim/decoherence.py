"""Optical-pumping decoherence channels and ensemble inhomogeneity.

The shipped pumping model is a calibrated substitute for microscopic Raman
jump operators: an isotropic depolarizing channel whose rate is a fixed
fraction of the photon scattering rate, optionally combined with uniform
population loss.
"""
import itertools
import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np
import structlog
from numpy.polynomial.hermite_e import hermegauss

from faraday_sim.constants import DEFAULT_ENSEMBLE_NODES, DEFAULT_SPIN
from faraday_sim.evolution import EvolutionResult
from faraday_sim.exceptions import GridMismatchError
from faraday_sim.exceptions.config import DecoherenceConfigurationError
from faraday_sim.light_shift import ProbeConfig, scattering_rate
from faraday_sim.spin_algebra import build_spin_operators

log = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class DecoherenceChannel:
    """A set of Lindblad jump operators, each carrying the square root of its rate.

    Channels that are not trace preserving drop the L rho L^dagger term, so the
    population they act on leaves the simulated manifold.
    """

    label: str
    lindblad_ops: Tuple[np.ndarray, ...]
    trace_preserving: bool = True

    def __post_init__(self):
        shapes = {op.shape for op in self.lindblad_ops}
        if len(shapes) > 1:
            raise DecoherenceConfigurationError(
                f"Jump operators of channel '{self.label}' have mixed shapes {sorted(shapes)}"
            )

    @property
    def rate_operator(self) -> np.ndarray:
        """Sum of L^dagger L over the jump operators."""
        if not self.lindblad_ops:
            raise DecoherenceConfigurationError(f"Channel '{self.label}' has no jump operators")
        return np.sum([op.conj().T @ op for op in self.lindblad_ops], axis=0)


def _check_rate(rate: float, label: str) -> None:
    if rate < 0 or not math.isfinite(rate):
        raise DecoherenceConfigurationError(f"{label} rate must be finite and >= 0, got {rate}")


def depolarization_channel(rate: float, dim: int) -> DecoherenceChannel:
    """Isotropic depolarization with L_q = sqrt(rate) F_q, q = x, y, z.

    The double commutator sum_q [F_q, [F_q, F_z]] = 2 F_z makes <F_z> (and by
    symmetry <F_x>, <F_y>) decay at exactly `rate`.
    """
    _check_rate(rate, "Depolarization")
    ops = build_spin_operators((dim - 1) / 2)
    amplitude = math.sqrt(rate)
    return DecoherenceChannel(
        label=f"depolarization({rate:.6g}/s)",
        lindblad_ops=tuple(amplitude * op for op in (ops.fx, ops.fy, ops.fz)),
    )


def loss_channel(rate: float, dim: int) -> DecoherenceChannel:
    """Uniform population loss: Tr(rho)(t) = exp(-rate t) without coherent dynamics."""
    _check_rate(rate, "Loss")
    return DecoherenceChannel(
        label=f"loss({rate:.6g}/s)",
        lindblad_ops=(math.sqrt(rate) * np.eye(dim, dtype=complex),),
        trace_preserving=False,
    )


def default_pumping_model(
    probe: ProbeConfig,
    calibration: float,
    loss: float = 0.0,
    dim: int = int(2 * DEFAULT_SPIN + 1),
) -> List[DecoherenceChannel]:
    """Depolarization at calibration * gamma_s, plus loss at loss * gamma_s.

    The default calibration of 0.25 reproduces a critical-angle signal decay
    of four scattering times. It is an empirical setting, not derived physics.
    """
    if calibration < 0:
        raise DecoherenceConfigurationError(
            f"decoherence.calibration: must be >= 0, got {calibration}"
        )
    if loss < 0:
        raise DecoherenceConfigurationError(f"decoherence.loss: must be >= 0, got {loss}")
    gamma_s = scattering_rate(probe)
    channels = []
    if calibration > 0 and gamma_s > 0:
        channels.append(depolarization_channel(calibration * gamma_s, dim))
    if loss > 0 and gamma_s > 0:
        channels.append(loss_channel(loss * gamma_s, dim))
    return channels


@dataclass(frozen=True)
class EnsembleSpec:
    gamma_spread_fractional: float = 0.0
    larmor_spread: float = 0.0
    n_samples: int = DEFAULT_ENSEMBLE_NODES

    def __post_init__(self):
        if self.gamma_spread_fractional < 0:
            raise DecoherenceConfigurationError(
                f"ensemble.gamma_spread: must be >= 0, got {self.gamma_spread_fractional}"
            )
        if self.larmor_spread < 0:
            raise DecoherenceConfigurationError(
                f"ensemble.larmor_spread: must be >= 0, got {self.larmor_spread}"
            )
        if self.n_samples < 1:
            raise DecoherenceConfigurationError(
                f"ensemble.n_samples: must be >= 1, got {self.n_samples}"
            )

    @property
    def is_homogeneous(self) -> bool:
        return self.gamma_spread_fractional == 0 and self.larmor_spread == 0


@dataclass(frozen=True)
class EnsembleSample:
    weight: float
    #: Multiplies the probe intensity (and any directly given scattering rate).
    gamma_factor: float = 1.0
    #: Larmor frequency offset from the frame frequency, rad/s.
    larmor_offset: float = 0.0


def _gauss_hermite(n_samples: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = hermegauss(n_samples)
    return nodes, weights / weights.sum()


def ensemble_samples(spec: EnsembleSpec) -> List[EnsembleSample]:
    """Deterministic Gauss-Hermite samples of the ensemble spreads.

    Each Gaussian spread is sampled on `n_samples` probabilists' Hermite nodes;
    with both spreads present the samples form the tensor product grid.
    """
    if spec.is_homogeneous:
        return [EnsembleSample(weight=1.0)]

    nodes, weights = _gauss_hermite(spec.n_samples)
    gamma_axis = [(1.0, 1.0)]
    if spec.gamma_spread_fractional > 0:
        factors = 1.0 + spec.gamma_spread_fractional * nodes
        if np.any(factors <= 0):
            raise DecoherenceConfigurationError(
                f"ensemble.gamma_spread: {spec.gamma_spread_fractional} puts a quadrature "
                f"node at non-positive intensity"
            )
        gamma_axis = list(zip(weights, factors))
    larmor_axis = [(1.0, 0.0)]
    if spec.larmor_spread > 0:
        larmor_axis = list(zip(weights, spec.larmor_spread * nodes))

    return [
        EnsembleSample(
            weight=float(gamma_weight * larmor_weight),
            gamma_factor=float(factor),
            larmor_offset=float(offset),
        )
        for (gamma_weight, factor), (larmor_weight, offset) in itertools.product(
            gamma_axis, larmor_axis
        )
    ]


def scale_probe(probe: ProbeConfig, factor: float) -> ProbeConfig:
    """Probe seen by an atom at `factor` times the nominal intensity."""
    if factor == 1.0:
        return probe
    coherent_rate = None if probe.coherent_rate is None else probe.coherent_rate * factor
    return replace(
        probe, intensity_ratio=probe.intensity_ratio * factor, coherent_rate=coherent_rate
    )


def ensemble_average(results: Sequence[Tuple[float, EvolutionResult]]) -> EvolutionResult:
    """Weighted ensemble mean of evolution results on a common grid.

    Spin expectations are averaged with the surviving population as extra
    weight, so that the averaged signal trace * <F_z> is the mean signal.

    :raises GridMismatchError: if grids or frames differ.
    """
    if not results:
        raise GridMismatchError("Nothing to average")
    if len(results) == 1:
        weight, result = results[0]
        return replace(
            result, metadata={**result.metadata, "ensemble_weights": [weight]}
        )

    reference = results[0][1]
    for _, result in results[1:]:
        if (
            result.frame is not reference.frame
            or result.frame_frequency != reference.frame_frequency
        ):
            raise GridMismatchError("Cannot average results computed in different frames")
        if len(result.times) != len(reference.times) or not np.allclose(
            result.times, reference.times, rtol=1e-12, atol=0.0
        ):
            raise GridMismatchError("Cannot average results on different time grids")

    weights = np.array([weight for weight, _ in results], dtype=float)
    weights = weights / weights.sum()
    traces = np.array([result.trace_series for _, result in results])
    mean_trace = weights @ traces

    def population_weighted(name: str) -> np.ndarray:
        values = np.array([getattr(result, name) for _, result in results])
        return (weights @ (values * traces)) / mean_trace

    return replace(
        reference,
        fx_series=population_weighted("fx_series"),
        fy_series=population_weighted("fy_series"),
        fz_series=population_weighted("fz_series"),
        trace_series=mean_trace,
        states=None,
        metadata={
            "ensemble_weights": weights.tolist(),
            "ensemble_samples": [result.metadata for _, result in results],
        },
    )

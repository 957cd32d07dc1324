"""Faraday polarimeter signal, shot noise and trial averaging."""
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
import structlog

from faraday_sim.constants import (
    DEFAULT_BIN_TIME,
    DEFAULT_PHOTON_FLUX,
    DEFAULT_ROTATION_GAIN,
    DEFAULT_TRIALS,
)
from faraday_sim.evolution import EvolutionResult, to_lab_frame
from faraday_sim.exceptions import GridMismatchError, InfiniteNoiseError
from faraday_sim.exceptions.config import PolarimeterConfigurationError

log = structlog.get_logger(__name__)


@dataclass(frozen=True)
class PolarimeterConfig:
    rotation_gain: float = DEFAULT_ROTATION_GAIN
    photon_flux: float = DEFAULT_PHOTON_FLUX
    bin_time: float = DEFAULT_BIN_TIME
    n_trials: int = DEFAULT_TRIALS
    rng_seed: int = 0
    shot_noise: bool = True

    def __post_init__(self):
        if self.photon_flux < 0:
            raise PolarimeterConfigurationError(
                f"polarimeter.photon_flux: must be >= 0, got {self.photon_flux}"
            )
        if self.bin_time <= 0:
            raise PolarimeterConfigurationError(
                f"polarimeter.bin_time: must be positive, got {self.bin_time}"
            )
        if self.n_trials < 1:
            raise PolarimeterConfigurationError(
                f"polarimeter.n_trials: must be >= 1, got {self.n_trials}"
            )
        if self.rng_seed < 0:
            raise PolarimeterConfigurationError(
                f"polarimeter.rng_seed: must be >= 0, got {self.rng_seed}"
            )


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """Polarimeter rotation angle per time bin.

    `n_trials` is zero for a noiseless trace. `transverse` holds the
    frame-invariant transverse-spin magnitude in signal units when the trace
    was derived from spin expectation values.
    """

    times: np.ndarray
    mean_signal: np.ndarray
    sigma: np.ndarray
    n_trials: int = 0
    seed: Optional[int] = None
    transverse: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.mean_signal) != len(self.times) or len(self.sigma) != len(self.times):
            raise GridMismatchError(
                f"Signal trace has {len(self.times)} times, {len(self.mean_signal)} values "
                f"and {len(self.sigma)} sigmas"
            )
        if self.transverse is not None and len(self.transverse) != len(self.times):
            raise GridMismatchError("Transverse magnitude does not match the time grid")
        if np.any(self.sigma < 0):
            raise GridMismatchError("Signal sigma must be non-negative")


def faraday_signal(result: EvolutionResult, cfg: PolarimeterConfig) -> SignalTrace:
    """Noiseless rotation angle gain * <F_z> * Tr(rho) in the lab frame."""
    lab = to_lab_frame(result)
    return SignalTrace(
        times=lab.times,
        mean_signal=cfg.rotation_gain * lab.fz_series * lab.trace_series,
        sigma=np.zeros(lab.n_points),
        transverse=abs(cfg.rotation_gain) * lab.transverse_series * lab.trace_series,
    )


def shot_noise_sigma(cfg: PolarimeterConfig) -> float:
    """Balanced-polarimeter shot noise 1 / (2 sqrt(N)) for N photons per bin, in radians."""
    photons = cfg.photon_flux * cfg.bin_time
    if photons <= 0:
        raise InfiniteNoiseError(
            f"No photons per bin (flux {cfg.photon_flux}/s, bin {cfg.bin_time} s): "
            f"shot noise is infinite"
        )
    return 1 / (2 * math.sqrt(photons))


def add_shot_noise(
    trace: SignalTrace, cfg: PolarimeterConfig, seed: Optional[int] = None
) -> SignalTrace:
    """One noisy realization of `trace`.

    Draws come from a Philox counter-based generator keyed by `seed`
    (default: `cfg.rng_seed`), so a seed fixes the realization bin by bin.
    """
    sigma = shot_noise_sigma(cfg)
    seed = cfg.rng_seed if seed is None else seed
    generator = np.random.Generator(np.random.Philox(seed))
    noise = generator.normal(0.0, sigma, size=len(trace.times))
    return replace(
        trace,
        mean_signal=trace.mean_signal + noise,
        sigma=np.sqrt(trace.sigma ** 2 + sigma ** 2),
        n_trials=1,
        seed=seed,
    )


def average_trials(
    trace_generator: Callable[[int], SignalTrace], n_trials: int, base_seed: int
) -> SignalTrace:
    """Mean of `n_trials` realizations generated with seeds base_seed + k.

    The mean is accumulated as deviations from the first trial, so identical
    realizations average to themselves exactly.
    """
    if n_trials < 1:
        raise PolarimeterConfigurationError(f"polarimeter.n_trials: must be >= 1, got {n_trials}")
    first = trace_generator(base_seed)
    deviation_sum = np.zeros_like(first.mean_signal)
    variance_sum = first.sigma ** 2
    for k in range(1, n_trials):
        trial = trace_generator(base_seed + k)
        if len(trial.times) != len(first.times):
            raise GridMismatchError(f"Trial {k} has a different time grid")
        deviation_sum += trial.mean_signal - first.mean_signal
        variance_sum = variance_sum + trial.sigma ** 2
    return replace(
        first,
        mean_signal=first.mean_signal + deviation_sum / n_trials,
        sigma=np.sqrt(variance_sum) / n_trials,
        n_trials=n_trials,
        seed=base_seed,
    )


def synthesize_signal(
    result: EvolutionResult, cfg: PolarimeterConfig
) -> Tuple[SignalTrace, SignalTrace]:
    """Noiseless trace and its trial-averaged noisy counterpart."""
    noiseless = faraday_signal(result, cfg)
    if not cfg.shot_noise:
        return noiseless, noiseless
    noisy = average_trials(
        lambda seed: add_shot_noise(noiseless, cfg, seed), cfg.n_trials, cfg.rng_seed
    )
    log.debug(
        "Synthesized polarimeter signal",
        n_trials=cfg.n_trials,
        seed=cfg.rng_seed,
        sigma_per_trial=shot_noise_sigma(cfg),
    )
    return noiseless, noisy

import math

import numpy as np
import pytest

from faraday_sim.evolution import EvolutionResult
from faraday_sim.exceptions import InfiniteNoiseError
from faraday_sim.light_shift import Frame
from faraday_sim.signal import (
    PolarimeterConfig,
    SignalTrace,
    add_shot_noise,
    faraday_signal,
    shot_noise_sigma,
    synthesize_signal,
)

OMEGA = 2 * math.pi * 1e3


@pytest.fixture
def rotating_result():
    times = np.linspace(0.0, 4e-3, 4000)
    return EvolutionResult(
        times=times,
        fx_series=np.full(len(times), 4.0),
        fy_series=np.zeros(len(times)),
        fz_series=np.zeros(len(times)),
        trace_series=np.full(len(times), 0.5),
        frame=Frame.ROTATING,
        frame_frequency=OMEGA,
    )


def test_signal_is_taken_in_the_lab_frame(rotating_result):
    trace = faraday_signal(rotating_result, PolarimeterConfig(rotation_gain=-2.0))
    expected = -2.0 * (-4.0 * np.sin(OMEGA * rotating_result.times)) * 0.5
    assert np.allclose(trace.mean_signal, expected)
    assert np.allclose(trace.transverse, 4.0)
    assert trace.n_trials == 0


def test_shot_noise_sigma():
    config = PolarimeterConfig(photon_flux=1e12, bin_time=1e-6)
    assert shot_noise_sigma(config) == pytest.approx(5e-4)
    with pytest.raises(InfiniteNoiseError):
        shot_noise_sigma(PolarimeterConfig(photon_flux=0.0))


def test_noise_is_reproducible_per_seed(rotating_result):
    cfg = PolarimeterConfig(rng_seed=11)
    trace = faraday_signal(rotating_result, cfg)
    first = add_shot_noise(trace, cfg)
    again = add_shot_noise(trace, cfg, seed=11)
    other = add_shot_noise(trace, cfg, seed=12)
    assert np.array_equal(first.mean_signal, again.mean_signal)
    assert not np.array_equal(first.mean_signal, other.mean_signal)


def test_trial_averaging_reduces_noise_by_root_n(rotating_result):
    cfg = PolarimeterConfig(n_trials=128, rng_seed=3)
    noiseless, noisy = synthesize_signal(rotating_result, cfg)
    residual = noisy.mean_signal - noiseless.mean_signal
    expected = shot_noise_sigma(cfg) / math.sqrt(128)
    assert np.std(residual) == pytest.approx(expected, rel=0.15)
    assert np.allclose(noisy.sigma, expected)
    assert noisy.n_trials == 128
    assert noisy.seed == 3


def test_shot_noise_has_zero_mean():
    n_bins = 100_000
    cfg = PolarimeterConfig(rng_seed=7)
    quiet = SignalTrace(np.arange(n_bins) * cfg.bin_time, np.zeros(n_bins), np.zeros(n_bins))
    noise = add_shot_noise(quiet, cfg).mean_signal
    sigma = shot_noise_sigma(cfg)
    assert abs(np.mean(noise)) < 5 * sigma / math.sqrt(n_bins)
    assert np.std(noise) == pytest.approx(sigma, rel=2e-2)


def test_noise_variance_scales_inversely_with_trials(rotating_result):
    variances = {}
    for n_trials in (4, 16):
        cfg = PolarimeterConfig(n_trials=n_trials, rng_seed=21)
        noiseless, noisy = synthesize_signal(rotating_result, cfg)
        variances[n_trials] = np.var(noisy.mean_signal - noiseless.mean_signal)
        assert variances[n_trials] == pytest.approx(
            shot_noise_sigma(cfg) ** 2 / n_trials, rel=0.1
        )
    assert variances[4] / variances[16] == pytest.approx(4.0, rel=0.15)


def test_synthesis_is_deterministic(rotating_result):
    cfg = PolarimeterConfig(n_trials=8, rng_seed=5)
    _, first = synthesize_signal(rotating_result, cfg)
    _, second = synthesize_signal(rotating_result, cfg)
    assert np.array_equal(first.mean_signal, second.mean_signal)


def test_disabled_shot_noise_returns_noiseless_trace(rotating_result):
    noiseless, noisy = synthesize_signal(rotating_result, PolarimeterConfig(shot_noise=False))
    assert noisy is noiseless

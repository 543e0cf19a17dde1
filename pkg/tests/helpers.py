"""Shared random-instance builders for the test suite."""

import numpy as np

from lorentzris.channel import Dims, FrequencyChannelSet, sample_taps, taps_to_frequency
from lorentzris.lorentzian import FrequencyGrid


def random_channels(rng, n_bins=3, n_rx=4, n_elements=5, n_users=2, noise_power=1.0, n_taps=2):
    taps = sample_taps(None, Dims(n_rx, n_elements, n_users, n_taps), rng)
    return taps_to_frequency(taps, FrequencyGrid.dft(n_bins), noise_power)


def random_phi(rng, n_bins, n_elements):
    """Feasible (B, N) profile with |phi| <= 1."""
    mag = np.sqrt(rng.uniform(size=(n_bins, n_elements)))
    return mag * np.exp(1j * rng.uniform(0, 2 * np.pi, size=(n_bins, n_elements)))


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def no_ris_channels(freq: FrequencyChannelSet) -> FrequencyChannelSet:
    return FrequencyChannelSet(freq.F, np.zeros_like(freq.J), freq.G, freq.noise_power)

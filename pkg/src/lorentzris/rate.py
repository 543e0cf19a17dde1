"""Achievable sum rate over OFDM bins and its WMMSE surrogate.

Rates are in nats internally; ``RateResult.bits`` converts for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FrequencyChannelSet, effective_channels
from .lorentzian import RISProfile


@dataclass(frozen=True)
class RateResult:
    per_bin_rates: np.ndarray
    average_rate: float
    surrogate: float | None = None

    @property
    def bits(self) -> float:
        return self.average_rate / np.log(2)


def as_phi(freq: FrequencyChannelSet, profile) -> np.ndarray:
    """Accept an RISProfile (N x B) or a raw (B, N) array; return (B, N)."""
    if isinstance(profile, RISProfile):
        phi = profile.response.T
    else:
        phi = np.asarray(profile, dtype=complex)
    if phi.shape != (freq.n_bins, freq.n_elements):
        raise ValueError(f"profile shape {phi.shape} does not match channels")
    return phi


def hermitian(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def logdet_pd(m: np.ndarray) -> np.ndarray:
    """log det of (batched) Hermitian positive definite matrices via Cholesky."""
    chol = np.linalg.cholesky(m)
    return 2 * np.sum(np.log(np.real(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)


def bin_rates(D: np.ndarray, noise_power: float) -> np.ndarray:
    """log det(I + D D^H / sigma^2) per bin.

    Evaluated on the smaller Gram matrix; det(I + X X^H) = det(I + X^H X).
    """
    if not np.all(np.isfinite(D)):
        raise ValueError("non-finite channel entries")
    n_rx, k = D.shape[-2:]
    gram = hermitian(D) @ D if k <= n_rx else D @ hermitian(D)
    eye = np.eye(gram.shape[-1])
    return logdet_pd(eye + gram / noise_power)


def sum_rate(freq: FrequencyChannelSet, profile) -> RateResult:
    D = effective_channels(freq, as_phi(freq, profile))
    per_bin = bin_rates(D, freq.noise_power)
    return RateResult(per_bin, float(np.mean(per_bin)))


def mse_matrices(D: np.ndarray, U: np.ndarray, noise_power: float) -> np.ndarray:
    k = D.shape[-1]
    E = hermitian(U) @ D - np.eye(k)
    return E @ hermitian(E) + noise_power * hermitian(U) @ U


def wmmse_objective(freq: FrequencyChannelSet, profile, U: np.ndarray, S: np.ndarray) -> float:
    """sum_b log det S_b - tr(S_b M_b) + K.

    Raises ``ValueError`` if any S_b is not positive definite.
    """
    D = effective_channels(freq, as_phi(freq, profile))
    M = mse_matrices(D, U, freq.noise_power)
    S = np.asarray(S)
    S_h = 0.5 * (S + hermitian(S))
    try:
        logdet = logdet_pd(S_h)
    except np.linalg.LinAlgError as exc:
        raise ValueError("weight matrices S_b must be positive definite") from exc
    traces = np.real(np.trace(S @ M, axis1=-2, axis2=-1))
    return float(np.sum(logdet - traces + freq.n_users))

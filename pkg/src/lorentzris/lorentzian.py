"""Lorentzian frequency response of resonant RIS elements.

Each element ``n`` reflects with

    phi_n(w) = F_n w**2 / (w_n**2 - w**2 + 1j * kappa_n * w)

where ``F_n`` is the oscillator strength, ``w_n`` the angular resonance
frequency and ``kappa_n`` the damping factor.  All frequencies are
normalized discrete-time frequencies in rad/sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SINGULAR_TOL = 1e-12


class SingularResponseError(ValueError):
    """Raised when a Lorentzian denominator vanishes on the grid."""


@dataclass(frozen=True)
class ParamBounds:
    """Box constraints on the Lorentzian parameters."""

    f_min: float = 1e-6
    f_max: float = 1.0
    omega_min: float = 1e-6
    omega_max: float = 2 * np.pi
    kappa_max: float = 100.0

    def lower(self) -> np.ndarray:
        return np.array([self.f_min, self.omega_min, -self.kappa_max])

    def upper(self) -> np.ndarray:
        return np.array([self.f_max, self.omega_max, self.kappa_max])


@dataclass(frozen=True)
class LorentzianParams:
    """Per-element (F_n, w_n, kappa_n) triplets.

    Stored as three length-N float arrays.  ``theta`` exposes the same data
    as an ``(N, 3)`` array, the layout used by the least-squares solver.
    """

    strength: np.ndarray
    resonance: np.ndarray
    damping: np.ndarray

    def __post_init__(self):
        for name in ("strength", "resonance", "damping"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.strength.shape == self.resonance.shape == self.damping.shape):
            raise ValueError("strength, resonance and damping must have equal length")

    @property
    def n_elements(self) -> int:
        return self.strength.size

    @property
    def theta(self) -> np.ndarray:
        return np.stack([self.strength, self.resonance, self.damping], axis=1)

    @classmethod
    def from_theta(cls, theta: np.ndarray) -> "LorentzianParams":
        theta = np.asarray(theta, dtype=float).reshape(-1, 3)
        return cls(theta[:, 0], theta[:, 1], theta[:, 2])

    def is_feasible(self, bounds: ParamBounds | None = None) -> bool:
        kappa_max = (bounds or ParamBounds()).kappa_max
        return bool(
            np.all(self.strength > 0)
            and np.all(self.strength <= 1)
            and np.all(self.resonance > 0)
            and np.all(np.abs(self.damping) <= kappa_max)
        )

    def to_dict(self) -> dict:
        return {
            "strength": self.strength.tolist(),
            "resonance": self.resonance.tolist(),
            "damping": self.damping.tolist(),
        }


@dataclass(frozen=True)
class FrequencyGrid:
    """Sorted set of B bin frequencies inside [-pi, pi]."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float).reshape(-1)
        if w.size == 0:
            raise ValueError("frequency grid must be non-empty")
        if np.any(np.abs(w) > np.pi + 1e-12):
            raise ValueError("bin frequencies must satisfy |w| <= pi")
        if np.any(np.diff(w) <= 0):
            raise ValueError("bin frequencies must be strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)

    @property
    def n_bins(self) -> int:
        return self.omegas.size

    @classmethod
    def centered(cls, n_bins: int) -> "FrequencyGrid":
        """Bin centers -pi + 2pi(b-1)/B + pi/B; never touches +-pi."""
        b = np.arange(n_bins)
        return cls(-np.pi + 2 * np.pi * b / n_bins + np.pi / n_bins)

    @classmethod
    def dft(cls, n_bins: int) -> "FrequencyGrid":
        """The B-point DFT frequencies 2pi(b-1)/B wrapped into (-pi, pi]."""
        w = 2 * np.pi * np.arange(n_bins) / n_bins
        w = np.where(w > np.pi, w - 2 * np.pi, w)
        return cls(np.sort(w))

    def positive_span(self) -> tuple[float, float]:
        pos = self.omegas[self.omegas > 0]
        if pos.size == 0:
            raise ValueError("grid has no positive frequencies")
        return 0.0, float(pos.max())

    def center_index(self) -> int:
        """Bin closest to the middle of the positive band (0, max w]."""
        _, hi = self.positive_span()
        return int(np.argmin(np.abs(self.omegas - hi / 2)))


@dataclass(frozen=True)
class RISProfile:
    """RIS response on a grid: ``response[n, b] = phi_n(w_b)``."""

    response: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.response.shape[0]

    @property
    def n_bins(self) -> int:
        return self.response.shape[1]

    @property
    def vector(self) -> np.ndarray:
        """vec() of the N x B matrix, i.e. the bin columns stacked."""
        return self.response.T.reshape(-1)

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_elements: int) -> "RISProfile":
        return cls(np.asarray(vec).reshape(-1, n_elements).T.copy())

    def bin(self, b: int) -> np.ndarray:
        return self.response[:, b]

    def bin_matrix(self, b: int) -> np.ndarray:
        return np.diag(self.response[:, b])

    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.response))) if self.response.size else 0.0


def _denominator(params: LorentzianParams, omegas: np.ndarray) -> np.ndarray:
    w = np.asarray(omegas, dtype=float)[None, :]
    return (
        params.resonance[:, None] ** 2
        - w**2
        + 1j * params.damping[:, None] * w
    )


def lorentzian_response(params: LorentzianParams, omegas) -> np.ndarray:
    """Raw ``(N, len(omegas))`` response matrix, no grid validation."""
    w = np.asarray(omegas, dtype=float)
    den = _denominator(params, w)
    if den.size and np.min(np.abs(den)) < SINGULAR_TOL:
        n, b = np.unravel_index(np.argmin(np.abs(den)), den.shape)
        raise SingularResponseError(
            f"singular Lorentzian denominator at element {n}, w={w[b]:.6g}"
        )
    return params.strength[:, None] * w[None, :] ** 2 / den


def evaluate_response(params: LorentzianParams, grid: FrequencyGrid) -> RISProfile:
    """Evaluate every element on every bin.  No clipping is applied."""
    return RISProfile(lorentzian_response(params, grid.omegas))


def response_jacobian(params: LorentzianParams, omegas) -> np.ndarray:
    """Partial derivatives of phi_n(w_b) w.r.t. (F_n, w_n, kappa_n).

    Returns an ``(N, B, 3)`` complex array.  Each response depends only on
    its own element's parameters, so cross-element derivatives are zero and
    are not stored.
    """
    w = np.asarray(omegas, dtype=float)[None, :]
    den = _denominator(params, w[0])
    phi = params.strength[:, None] * w**2 / den
    d_strength = w**2 / den
    d_resonance = -phi * 2 * params.resonance[:, None] / den
    d_damping = -phi * 1j * w / den
    return np.stack(
        [np.broadcast_to(d_strength, phi.shape), d_resonance, d_damping], axis=-1
    )


def quality_factor(params: LorentzianParams) -> np.ndarray:
    if np.any(params.damping == 0):
        raise ZeroDivisionError("quality factor undefined for zero damping")
    return params.resonance / params.damping


def peak_frequency(params: LorentzianParams) -> np.ndarray:
    """Frequency maximizing |phi_n(w)| over w > 0 (inf if monotone)."""
    a = params.resonance**2
    k2 = params.damping**2
    with np.errstate(divide="ignore", invalid="ignore"):
        w_peak = params.resonance * np.sqrt(2 * a / (2 * a - k2))
    return np.where(2 * a > k2, w_peak, np.inf)


def peak_gain(params: LorentzianParams) -> np.ndarray:
    """sup_w |phi_n(w)| / F_n over all real frequencies.

    Equals 2 w_n^2 / (|kappa_n| sqrt(4 w_n^2 - kappa_n^2)) when
    2 w_n^2 > kappa_n^2, otherwise 1 (approached as w -> inf).
    """
    a = params.resonance**2
    k2 = params.damping**2
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 2 * a / np.sqrt(k2 * (4 * a - k2))
    return np.where(2 * a > k2, gain, 1.0)


def project_params(
    params: LorentzianParams, bounds: ParamBounds | None = None
) -> LorentzianParams:
    """Clamp every parameter into its box.  Idempotent."""
    bounds = bounds or ParamBounds()
    return LorentzianParams(
        np.clip(params.strength, bounds.f_min, bounds.f_max),
        np.clip(params.resonance, bounds.omega_min, bounds.omega_max),
        np.clip(params.damping, -bounds.kappa_max, bounds.kappa_max),
    )


def project_theta(theta: np.ndarray, bounds: ParamBounds) -> np.ndarray:
    return np.clip(theta, bounds.lower(), bounds.upper())

"""Closed-form WMMSE block updates and the quadratic form in the RIS response.

For fixed receive filters U_b and weights S_b the WMMSE surrogate equals,
up to terms independent of the RIS,

    -(phi^H A phi + 2 Re{phi^H conj(b)} - c)

with A block diagonal over bins.  Everything here works on the ``(B, N)``
layout; row ``b`` of ``phi`` is the bin-b response, so ``phi.ravel()`` is
the stacked vector over bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .channel import FrequencyChannelSet, effective_channels
from .rate import as_phi, hermitian


@dataclass(frozen=True)
class AuxiliaryVars:
    U: np.ndarray  # (B, N_R, K)
    S: np.ndarray  # (B, K, K)


@dataclass(frozen=True)
class QuadraticForm:
    A: np.ndarray  # (B, N, N) Hermitian PSD blocks
    b: np.ndarray  # (B, N)
    c: float

    @property
    def n_bins(self) -> int:
        return self.A.shape[0]

    @property
    def n_elements(self) -> int:
        return self.A.shape[1]

    def dense_A(self) -> np.ndarray:
        return block_diag(*self.A)

    def b_vector(self) -> np.ndarray:
        return self.b.reshape(-1)

    def apply_A(self, phi: np.ndarray) -> np.ndarray:
        return np.einsum("bij,bj->bi", self.A, phi)

    def value(self, phi: np.ndarray) -> float:
        """phi^H A phi + 2 Re{phi^H conj(b)} - c."""
        quad = np.real(np.vdot(phi, self.apply_A(phi)))
        lin = 2 * np.real(np.sum(np.conj(phi) * np.conj(self.b)))
        return float(quad + lin - self.c)

    def gradient(self, phi: np.ndarray) -> np.ndarray:
        """Real gradient in complex form: d/dRe + 1j d/dIm."""
        return 2 * (self.apply_A(phi) + np.conj(self.b))

    def lambda_max(self) -> float:
        if self.A.size == 0:
            return 0.0
        return float(max(np.max(np.linalg.eigvalsh(self.A)), 0.0))

    def summed(self) -> "QuadraticForm":
        """Single-bin form for a profile repeated identically on every bin."""
        return QuadraticForm(self.A.sum(axis=0)[None], self.b.sum(axis=0)[None], self.c)


def update_U(freq: FrequencyChannelSet, profile) -> np.ndarray:
    """U_b = (sigma^2 I + D_b D_b^H)^{-1} D_b."""
    D = effective_channels(freq, as_phi(freq, profile))
    cov = freq.noise_power * np.eye(freq.n_rx) + D @ hermitian(D)
    return np.linalg.solve(cov, D)


def update_S(freq: FrequencyChannelSet, profile) -> np.ndarray:
    """S_b = I + D_b^H D_b / sigma^2, the inverse MSE matrix at the optimal U_b."""
    D = effective_channels(freq, as_phi(freq, profile))
    return np.eye(freq.n_users) + hermitian(D) @ D / freq.noise_power


def update_aux(freq: FrequencyChannelSet, profile) -> AuxiliaryVars:
    return AuxiliaryVars(update_U(freq, profile), update_S(freq, profile))


def build_quadratic(freq: FrequencyChannelSet, aux: AuxiliaryVars) -> QuadraticForm:
    U, S = aux.U, aux.S
    if U.shape != (freq.n_bins, freq.n_rx, freq.n_users):
        raise ValueError(f"U has shape {U.shape}, incompatible with channels")
    if S.shape != (freq.n_bins, freq.n_users, freq.n_users):
        raise ValueError(f"S has shape {S.shape}, incompatible with channels")
    F, J, G = freq.F, freq.J_eff, freq.G_eff
    Uh = hermitian(U)
    USU = U @ S @ Uh
    R1 = hermitian(F) @ USU @ F
    R2 = J @ hermitian(J)
    R3 = J @ hermitian(G) @ USU @ F
    R4 = J @ S @ Uh @ F
    A = R1 * np.swapaxes(R2, 1, 2)
    A = 0.5 * (A + hermitian(A))
    b = np.diagonal(R3 - R4, axis1=1, axis2=2)

    def tr(x):
        return np.trace(x, axis1=1, axis2=2)

    SUhG = S @ Uh @ G
    c_b = (
        -tr(SUhG @ hermitian(G) @ U)
        + tr(SUhG)
        + tr(S @ hermitian(G) @ U)
        - tr(S)
        - freq.noise_power * tr(S @ Uh @ U)
    )
    return QuadraticForm(A, np.ascontiguousarray(b), float(np.real(np.sum(c_b))))

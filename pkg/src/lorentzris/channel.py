"""Multi-tap Rayleigh channels and their per-bin frequency responses.

Tap arrays are stored tap-major: ``F_taps[q]`` is the RIS->BS matrix of
tap ``q`` (N_R x N), ``J_taps[q]`` is UTs->RIS (N x K) and ``G_taps[q]`` is
UTs->BS (N_R x K).  Frequency-domain sets use the same layout with the bin
index in front.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .lorentzian import FrequencyGrid, RISProfile


@dataclass(frozen=True)
class Dims:
    n_rx: int
    n_elements: int
    n_users: int
    n_taps: int

    def __post_init__(self):
        if min(self.n_rx, self.n_elements, self.n_users, self.n_taps) < 1:
            raise ValueError(f"all dimensions must be >= 1, got {self}")


@dataclass(frozen=True)
class Geometry:
    """Planar node placement (meters) and pathloss exponents."""

    bs_position: np.ndarray
    ris_position: np.ndarray
    ut_positions: np.ndarray
    alpha_ris: float = 2.2
    alpha_direct: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "bs_position", np.asarray(self.bs_position, float).reshape(2))
        object.__setattr__(self, "ris_position", np.asarray(self.ris_position, float).reshape(2))
        object.__setattr__(self, "ut_positions", np.asarray(self.ut_positions, float).reshape(-1, 2))
        pts = np.vstack([self.bs_position, self.ris_position, self.ut_positions])
        if not np.all(np.isfinite(pts)):
            raise ValueError("positions must be finite")
        if self.alpha_ris <= 0 or self.alpha_direct <= 0:
            raise ValueError("pathloss exponents must be positive")

    @classmethod
    def random_users(
        cls,
        n_users: int,
        rng: np.random.Generator,
        center=(15.0, 17.5),
        radius: float = 3.0,
        bs=(0.0, 0.0),
        ris=(15.0, 12.5),
        **kwargs,
    ) -> "Geometry":
        """Users drawn uniformly over a disk; BS and RIS fixed."""
        r = radius * np.sqrt(rng.uniform(size=n_users))
        t = rng.uniform(0, 2 * np.pi, size=n_users)
        uts = np.asarray(center) + np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
        return cls(np.asarray(bs), np.asarray(ris), uts, **kwargs)

    @property
    def n_users(self) -> int:
        return self.ut_positions.shape[0]

    def ris_bs_distance(self) -> float:
        return float(np.linalg.norm(self.ris_position - self.bs_position))

    def ut_ris_distances(self) -> np.ndarray:
        return np.linalg.norm(self.ut_positions - self.ris_position, axis=1)

    def ut_bs_distances(self) -> np.ndarray:
        return np.linalg.norm(self.ut_positions - self.bs_position, axis=1)

    def to_dict(self) -> dict:
        return {
            "bs_position": self.bs_position.tolist(),
            "ris_position": self.ris_position.tolist(),
            "ut_positions": self.ut_positions.tolist(),
            "alpha_ris": self.alpha_ris,
            "alpha_direct": self.alpha_direct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Geometry":
        return cls(**d)


def _encode(arr: np.ndarray) -> list:
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True)
class TapChannelSet:
    F_taps: np.ndarray
    J_taps: np.ndarray
    G_taps: np.ndarray

    def __post_init__(self):
        q = {self.F_taps.shape[0], self.J_taps.shape[0], self.G_taps.shape[0]}
        if len(q) != 1:
            raise ValueError("F, J and G must have the same number of taps")
        n_rx, n = self.F_taps.shape[1:]
        if self.J_taps.shape[1] != n or self.G_taps.shape[1] != n_rx:
            raise ValueError("inconsistent tap dimensions")
        if self.J_taps.shape[2] != self.G_taps.shape[2]:
            raise ValueError("J and G disagree on the number of users")

    @property
    def n_taps(self) -> int:
        return self.F_taps.shape[0]

    @property
    def dims(self) -> Dims:
        q, n_rx, n = self.F_taps.shape
        return Dims(n_rx, n, self.G_taps.shape[2], q)

    def __add__(self, other: "TapChannelSet") -> "TapChannelSet":
        return TapChannelSet(
            self.F_taps + other.F_taps, self.J_taps + other.J_taps, self.G_taps + other.G_taps
        )

    def scale(self, a: complex) -> "TapChannelSet":
        return TapChannelSet(a * self.F_taps, a * self.J_taps, a * self.G_taps)

    def to_json(self) -> str:
        return json.dumps(
            {"F_taps": _encode(self.F_taps), "J_taps": _encode(self.J_taps), "G_taps": _encode(self.G_taps)}
        )

    @classmethod
    def from_json(cls, text: str) -> "TapChannelSet":
        d = json.loads(text)
        return cls(_decode(d["F_taps"]), _decode(d["J_taps"]), _decode(d["G_taps"]))


@dataclass(frozen=True)
class FrequencyChannelSet:
    """Per-bin channel matrices plus noise power and input PSD.

    ``input_psd`` of ``None`` means C_x = I_K on every bin.
    """

    F: np.ndarray
    J: np.ndarray
    G: np.ndarray
    noise_power: float
    input_psd: np.ndarray | None = None
    _psd_sqrt: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.noise_power > 0:
            raise ValueError("noise power must be positive")
        for name in ("F", "J", "G"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.ndim != 3:
                raise ValueError(f"{name} must be a (B, rows, cols) array")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
            object.__setattr__(self, name, arr)
        B, n_rx, n = self.F.shape
        if self.J.shape[:2] != (B, n) or self.G.shape[:2] != (B, n_rx):
            raise ValueError("inconsistent channel dimensions")
        if self.J.shape[2] != self.G.shape[2]:
            raise ValueError("J and G disagree on the number of users")
        if self.input_psd is not None:
            cx = np.asarray(self.input_psd, dtype=complex)
            k = self.n_users
            if cx.shape != (B, k, k):
                raise ValueError("input PSD must be (B, K, K)")
            if not np.allclose(cx, np.conj(np.swapaxes(cx, 1, 2)), atol=1e-12):
                raise ValueError("input PSD must be Hermitian")
            vals, vecs = np.linalg.eigh(cx)
            if np.min(vals) < -1e-12:
                raise ValueError("input PSD must be positive semi-definite")
            root = (vecs * np.sqrt(np.clip(vals, 0, None))[:, None, :]) @ np.conj(
                np.swapaxes(vecs, 1, 2)
            )
            object.__setattr__(self, "input_psd", cx)
            object.__setattr__(self, "_psd_sqrt", root)

    @property
    def n_bins(self) -> int:
        return self.F.shape[0]

    @property
    def n_rx(self) -> int:
        return self.F.shape[1]

    @property
    def n_elements(self) -> int:
        return self.F.shape[2]

    @property
    def n_users(self) -> int:
        return self.G.shape[2]

    @property
    def J_eff(self) -> np.ndarray:
        """J_b C_x^{1/2}; equals J when C_x = I."""
        return self.J if self._psd_sqrt is None else self.J @ self._psd_sqrt

    @property
    def G_eff(self) -> np.ndarray:
        return self.G if self._psd_sqrt is None else self.G @ self._psd_sqrt

    def with_noise_power(self, noise_power: float) -> "FrequencyChannelSet":
        return FrequencyChannelSet(self.F, self.J, self.G, noise_power, self.input_psd)

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.F, self.J, self.G):
            h.update(np.ascontiguousarray(arr, dtype=np.complex128).tobytes())
        h.update(np.float64(self.noise_power).tobytes())
        if self.input_psd is not None:
            h.update(np.ascontiguousarray(self.input_psd, dtype=np.complex128).tobytes())
        return h.hexdigest()[:16]

    def to_json(self) -> str:
        d = {
            "F": _encode(self.F),
            "J": _encode(self.J),
            "G": _encode(self.G),
            "noise_power": self.noise_power,
            "input_psd": None if self.input_psd is None else _encode(self.input_psd),
        }
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "FrequencyChannelSet":
        d = json.loads(text)
        psd = None if d.get("input_psd") is None else _decode(d["input_psd"])
        return cls(_decode(d["F"]), _decode(d["J"]), _decode(d["G"]), float(d["noise_power"]), psd)


def _crandn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def sample_taps(geometry: Geometry | None, dims: Dims, rng_seed) -> TapChannelSet:
    """Draw i.i.d. CN(0, 1) taps scaled by sqrt(d**-alpha) per link.

    ``geometry=None`` disables pathloss (unit gain on every link).
    ``rng_seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    rng = np.random.default_rng(rng_seed)
    q, n_rx, n, k = dims.n_taps, dims.n_rx, dims.n_elements, dims.n_users
    F = _crandn(rng, (q, n_rx, n))
    J = _crandn(rng, (q, n, k))
    G = _crandn(rng, (q, n_rx, k))
    if geometry is not None:
        if geometry.n_users != k:
            raise ValueError("geometry user count does not match dims")
        F = F * np.sqrt(geometry.ris_bs_distance() ** -geometry.alpha_ris)
        J = J * np.sqrt(geometry.ut_ris_distances() ** -geometry.alpha_ris)[None, None, :]
        G = G * np.sqrt(geometry.ut_bs_distances() ** -geometry.alpha_direct)[None, None, :]
    return TapChannelSet(F, J, G)


def dtft(taps: np.ndarray, omegas) -> np.ndarray:
    """sum_tau taps[tau] exp(-j w tau) for every w; taps is (Q, ...)."""
    w = np.asarray(omegas, dtype=float)
    kernel = np.exp(-1j * np.outer(w, np.arange(taps.shape[0])))
    return np.tensordot(kernel, taps, axes=(1, 0))


def taps_to_frequency(
    taps: TapChannelSet,
    grid: FrequencyGrid,
    noise_power: float,
    input_psd: np.ndarray | None = None,
) -> FrequencyChannelSet:
    w = grid.omegas
    return FrequencyChannelSet(
        dtft(taps.F_taps, w), dtft(taps.J_taps, w), dtft(taps.G_taps, w), noise_power, input_psd
    )


def effective_channels(freq: FrequencyChannelSet, phi: np.ndarray) -> np.ndarray:
    """All D_b at once; ``phi`` is (B, N) with row b the bin-b response."""
    phi = np.asarray(phi)
    if phi.shape != (freq.n_bins, freq.n_elements):
        raise ValueError(f"profile shape {phi.shape} does not match channels")
    return freq.G_eff + (freq.F * phi[:, None, :]) @ freq.J_eff


def effective_channel(freq: FrequencyChannelSet, profile: RISProfile, b: int) -> np.ndarray:
    """D_b = (G_b + F_b diag(phi_b) J_b) C_x^{1/2} for bin index ``b`` (0-based)."""
    if profile.n_elements != freq.n_elements or profile.n_bins != freq.n_bins:
        raise ValueError("profile dimensions do not match channels")
    if not 0 <= b < freq.n_bins:
        raise IndexError(f"bin {b} out of range")
    return freq.G_eff[b] + (freq.F[b] * profile.bin(b)[None, :]) @ freq.J_eff[b]

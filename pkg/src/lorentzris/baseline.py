"""Frequency-flat benchmarks.

``optimize_flat`` designs one complex reflection per element, applied on
every bin, by WMMSE alternation with projected gradient on the bin-summed
quadratic.  It stands in for the conventional narrowband RIS designs the
wideband method is compared against.  ``flat_to_lorentzian`` then realizes
that design with resonant elements, matching it only at the center bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FrequencyChannelSet
from .lm_solver import LMProblem, lm_solve
from .lorentzian import (
    FrequencyGrid,
    LorentzianParams,
    ParamBounds,
    lorentzian_response,
    project_params,
)
from .pdd import PDDOptions, minimize_quadratic, project_feasible
from .rate import RateResult, sum_rate
from .wmmse import build_quadratic, update_aux


@dataclass(frozen=True)
class FlatConfig:
    values: np.ndarray
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if np.any(np.abs(v) > 1 + 1e-12):
            raise ValueError("flat reflection values must satisfy |t_n| <= 1")
        object.__setattr__(self, "values", v)

    def profile(self, n_bins: int) -> np.ndarray:
        """(B, N) profile repeating the same values on every bin."""
        return np.tile(self.values, (n_bins, 1))


@dataclass(frozen=True)
class FlatOptions:
    max_iter: int = 500
    eps: float = 1e-6
    seed: int | None = 0
    pg: PDDOptions = PDDOptions(pg_max_iter=500, pg_tol=1e-12)


@dataclass(frozen=True)
class AscentResult:
    phi: np.ndarray
    rate: float
    iterations: int
    converged: bool
    rate_trace: list


def wmmse_ascent(
    freq: FrequencyChannelSet,
    phi0: np.ndarray,
    tie_bins: bool,
    opts: FlatOptions | None = None,
) -> AscentResult:
    """Maximize the sum rate over per-bin (or bin-tied) responses |phi| <= 1.

    Each round refreshes U, S at the current profile and decreases the
    resulting convex quadratic, so the rate never decreases.
    """
    opts = opts or FlatOptions()
    phi = project_feasible(np.asarray(phi0, dtype=complex))
    rate = sum_rate(freq, phi).average_rate
    trace = [rate]
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        quad = build_quadratic(freq, update_aux(freq, phi))
        if tie_bins:
            t, _ = minimize_quadratic(quad.summed(), phi[:1], opts.pg)
            new_phi = np.tile(t[0], (freq.n_bins, 1))
        else:
            new_phi, _ = minimize_quadratic(quad, phi, opts.pg)
        new_rate = sum_rate(freq, new_phi).average_rate
        if new_rate >= rate:
            phi = new_phi
        trace.append(max(new_rate, rate))
        if new_rate <= rate or (new_rate - rate) <= opts.eps * abs(new_rate):
            rate = max(new_rate, rate)
            converged = True
            break
        rate = new_rate
    return AscentResult(phi, rate, it, converged, trace)


def random_flat_values(n_elements: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.exp(1j * rng.uniform(0, 2 * np.pi, size=n_elements))


def optimize_flat(
    freq: FrequencyChannelSet, opts: FlatOptions | None = None, init: np.ndarray | None = None
) -> FlatConfig:
    opts = opts or FlatOptions()
    t0 = random_flat_values(freq.n_elements, opts.seed) if init is None else np.asarray(init, complex)
    res = wmmse_ascent(freq, np.tile(t0, (freq.n_bins, 1)), tie_bins=True, opts=opts)
    return FlatConfig(res.phi[0], res.iterations, res.converged)


def optimize_relaxed(
    freq: FrequencyChannelSet, phi0: np.ndarray, opts: FlatOptions | None = None
) -> AscentResult:
    """Per-bin free responses with |phi| <= 1 (no Lorentzian structure)."""
    return wmmse_ascent(freq, phi0, tie_bins=False, opts=opts)


def _match_with_strength(t: complex, omega_c: float, F: float) -> tuple[float, float, float]:
    """(F, w_n, kappa) with phi(omega_c) = t for a given strength F.

    The denominator must equal F omega_c^2 / t, which fixes w_n and kappa.
    w_n^2 may come out non-positive; callers check.
    """
    den = F * omega_c**2 / t
    wn2 = omega_c**2 + den.real
    return F, float(np.sqrt(max(wn2, 0.0))), float(den.imag / omega_c)


def _strength_limit(t: complex, bounds: ParamBounds) -> float:
    """Largest F keeping the matched resonance strictly positive."""
    if t.real < 0:
        # w_n^2 = w_c^2 (1 + F Re(t) / |t|^2); keep it at least w_c^2 / 2
        return min(bounds.f_max, 0.5 * abs(t) ** 2 / -t.real)
    return bounds.f_max


def _closed_form_match(t: complex, omega_c: float, bounds: ParamBounds) -> tuple[float, float, float]:
    """Exact center match with F = |t| (reduced if the resonance would vanish)."""
    mag = abs(t)
    if mag < bounds.f_min:
        return bounds.f_min, omega_c, omega_c
    F = max(min(mag, _strength_limit(t, bounds)), bounds.f_min)
    return _match_with_strength(t, omega_c, F)


def _passive_match(t: complex, grid: FrequencyGrid, idx: int, bounds: ParamBounds) -> tuple[float, float, float]:
    """Exact center match with the largest F whose grid response stays |phi| <= 1.

    Larger F means lower quality factor, i.e. the broadest response that is
    still passive on the grid.  If no candidate is passive, the least-gain
    candidate is scaled down until it is.
    """
    omega_c = float(grid.omegas[idx])
    mag = abs(t)
    if mag < bounds.f_min:
        return bounds.f_min, omega_c, omega_c
    hi = _strength_limit(t, bounds)
    candidates = np.geomspace(bounds.f_min, hi, 400)[::-1]
    best, best_gain = None, np.inf
    for F in candidates:
        theta = _match_with_strength(t, omega_c, F)
        if theta[1] < bounds.omega_min or abs(theta[2]) > bounds.kappa_max:
            continue
        gain = float(np.max(np.abs(lorentzian_response(LorentzianParams.from_theta(theta), grid.omegas))))
        if gain <= 1 + 1e-12:
            return theta
        if gain < best_gain:
            best, best_gain = theta, gain
    F, wn, kappa = best
    return max(F / best_gain, bounds.f_min), wn, kappa


def flat_to_lorentzian(
    flat: FlatConfig,
    grid: FrequencyGrid,
    center_index: int | None = None,
    bounds: ParamBounds | None = None,
    passive: bool = False,
) -> LorentzianParams:
    """Lorentzian elements reproducing ``flat`` at the center bin only.

    A closed-form match seeds a per-element LM fit of |phi_n(w_c) - t_n|^2.
    The match is underdetermined (three parameters, one complex value).  By
    default F_n = |t_n| is used, which can put |phi_n| far above one at other
    bins.  With ``passive=True`` the strength is chosen so that |phi_n| <= 1
    on the whole grid, sacrificing the center match only when necessary.
    """
    bounds = bounds or ParamBounds()
    idx = grid.center_index() if center_index is None else center_index
    omega_c = float(grid.omegas[idx])
    if omega_c <= 0:
        raise ValueError("center frequency must be positive")
    if passive:
        seeds = np.array([_passive_match(t, grid, idx, bounds) for t in flat.values])
        return project_params(LorentzianParams.from_theta(seeds), bounds)
    seeds = np.array([_closed_form_match(t, omega_c, bounds) for t in flat.values])
    init = project_params(LorentzianParams.from_theta(seeds), bounds)
    problem = LMProblem(flat.values[:, None], [omega_c], bounds)
    return lm_solve(problem, init).params


def center_fit_error(params: LorentzianParams, flat: FlatConfig, grid: FrequencyGrid, center_index=None) -> float:
    idx = grid.center_index() if center_index is None else center_index
    return float(np.max(np.abs(lorentzian_response(params, [grid.omegas[idx]])[:, 0] - flat.values)))


def baseline_flat_rate(freq: FrequencyChannelSet, flat: FlatConfig) -> RateResult:
    """Rate if the RIS really applied ``flat`` on every bin (not achievable)."""
    return sum_rate(freq, flat.profile(freq.n_bins))

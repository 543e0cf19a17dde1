"""Outer block coordinate descent: WMMSE updates, quadratic assembly, PDD."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import FrequencyChannelSet
from .lorentzian import (
    FrequencyGrid,
    LorentzianParams,
    ParamBounds,
    evaluate_response,
    peak_gain,
)
from .pdd import PDDOptions, run_pdd
from .rate import RateResult, sum_rate
from .wmmse import build_quadratic, update_aux

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BCDConfig:
    eps: float = 1e-3
    max_iter: int = 20
    pdd: PDDOptions = field(default_factory=PDDOptions)
    seed: int | None = 0
    verbose: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class BCDResult:
    params: LorentzianParams
    rate: RateResult
    initial_rate: float
    trace: list
    converged: bool
    iterations: int
    pdd_violation: float
    pdd_converged: bool


def init_params(
    n_elements: int,
    grid: FrequencyGrid,
    rng_seed=None,
    bounds: ParamBounds | None = None,
) -> LorentzianParams:
    """Random feasible starting point.

    Resonances are uniform over the positive part of the grid, quality
    factors between 1 and 5.  The strength is set so the peak of |phi_n|
    over *all* frequencies is at most one.
    """
    bounds = bounds or ParamBounds()
    rng = np.random.default_rng(rng_seed)
    _, hi = grid.positive_span()
    omega = np.maximum(rng.uniform(0.0, hi, size=n_elements), bounds.omega_min)
    omega = np.minimum(omega, bounds.omega_max)
    kappa = rng.uniform(omega / 5, omega)
    kappa = np.clip(kappa, -bounds.kappa_max, bounds.kappa_max)
    unit = LorentzianParams(np.ones(n_elements), omega, kappa)
    strength = np.clip(1.0 / peak_gain(unit), bounds.f_min, bounds.f_max)
    return LorentzianParams(strength, omega, kappa)


def run_bcd(
    freq: FrequencyChannelSet,
    grid: FrequencyGrid,
    config: BCDConfig | None = None,
    init: LorentzianParams | None = None,
) -> BCDResult:
    config = config or BCDConfig()
    if grid.n_bins != freq.n_bins:
        raise ValueError("grid and channels disagree on the number of bins")
    params = init if init is not None else init_params(freq.n_elements, grid, config.seed, config.pdd.bounds)
    rate_prev = sum_rate(freq, evaluate_response(params, grid)).average_rate
    initial_rate = rate_prev
    best = (rate_prev, params, np.nan, False)
    trace = []
    converged = False
    m = 0
    for m in range(1, config.max_iter + 1):
        profile = evaluate_response(params, grid)
        aux = update_aux(freq, profile)
        quad = build_quadratic(freq, aux)
        pdd = run_pdd(quad, params, grid.omegas, config.pdd)
        params = pdd.params
        rate = sum_rate(freq, evaluate_response(params, grid)).average_rate
        row = {
            "m": m,
            "rate": rate,
            "pdd_violation": pdd.violation,
            "pdd_outer": pdd.outer_iters,
            "pdd_inner": pdd.inner_iters,
            "pdd_converged": pdd.converged,
        }
        trace.append(row)
        if config.verbose:
            log.info(json.dumps(row))
        if rate > best[0]:
            best = (rate, params, pdd.violation, pdd.converged)
        if rate == rate_prev or abs((rate - rate_prev) / rate) <= config.eps:
            converged = True
            break
        rate_prev = rate
    _, best_params, violation, pdd_ok = best
    final = sum_rate(freq, evaluate_response(best_params, grid))
    return BCDResult(
        params=best_params,
        rate=final,
        initial_rate=initial_rate,
        trace=trace,
        converged=converged,
        iterations=m,
        pdd_violation=violation,
        pdd_converged=pdd_ok,
    )

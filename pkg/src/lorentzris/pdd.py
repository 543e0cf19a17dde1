"""Penalty dual decomposition for the Lorentzian-constrained quadratic.

Solves

    min  phi^H A phi + 2 Re{phi^H conj(b)} - c
    s.t. phi = d(theta),  |phi_i| <= 1

through the augmented Lagrangian

    g = quadratic(phi) + 1/(2 rho) ||phi - d(theta) + rho lam||^2 .

The inner layer alternates projected gradient on ``phi`` with a
Levenberg-Marquardt refit of ``theta``; the outer layer updates the dual
``lam`` and shrinks the penalty ``rho``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .lm_solver import LMOptions, LMProblem, lm_solve
from .lorentzian import LorentzianParams, ParamBounds, lorentzian_response
from .wmmse import QuadraticForm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PDDOptions:
    rho0: float = 1.0
    mu: float = 0.85
    eps_in: float = 1e-4
    eps_out: float = 1e-5
    max_inner: int = 30
    max_outer: int = 300
    pg_max_iter: int = 200
    pg_tol: float = 1e-9
    armijo_sigma: float = 1e-4
    armijo_shrink: float = 0.5
    armijo_max: int = 50
    lm: LMOptions = field(default_factory=LMOptions)
    bounds: ParamBounds = field(default_factory=ParamBounds)
    verbose: bool = False

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not 0 < self.mu < 1:
            raise ValueError("mu must lie in (0, 1)")
        if not (self.eps_in > 0 and self.eps_out > 0):
            raise ValueError("tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration budgets must be >= 1")


@dataclass
class PDDState:
    """Mutable iterate.  ``phi``, ``d`` and ``lam`` are (B, N) arrays."""

    phi: np.ndarray
    params: LorentzianParams
    d: np.ndarray
    lam: np.ndarray
    rho: float
    p_in: int = 0
    p_out: int = 0


@dataclass(frozen=True)
class PDDResult:
    params: LorentzianParams
    phi: np.ndarray
    d: np.ndarray
    violation: float
    converged: bool
    outer_iters: int
    inner_iters: int
    max_response: float
    trace: list
    g_history: list


def project_feasible(z: np.ndarray) -> np.ndarray:
    """Scale every entry with modulus above one back onto the unit circle."""
    mag = np.abs(z)
    out = np.where(mag > 1, z / np.where(mag > 1, mag, 1.0), z)
    # rounding can leave |out| one ulp above 1; nudge inward so that a
    # second projection is a no-op
    over = np.abs(out) > 1
    while np.any(over):
        out = np.where(over, out * (1 - np.finfo(float).eps), out)
        over = np.abs(out) > 1
    return out


def penalty_target(state: PDDState) -> np.ndarray:
    """f = phi + rho * lam, the target of the Lorentzian refit."""
    return state.phi + state.rho * state.lam


def al_value(state: PDDState, quadratic: QuadraticForm, phi: np.ndarray | None = None) -> float:
    phi = state.phi if phi is None else phi
    r = (phi + state.rho * state.lam) - state.d
    return quadratic.value(phi) + float(np.sum(r.real**2 + r.imag**2)) / (2 * state.rho)


def al_gradient(state: PDDState, quadratic: QuadraticForm, phi: np.ndarray | None = None) -> np.ndarray:
    """Real gradient of g w.r.t. phi written in complex form."""
    phi = state.phi if phi is None else phi
    return quadratic.gradient(phi) + (phi - state.d + state.rho * state.lam) / state.rho


def default_step(quadratic: QuadraticForm, rho: float) -> float:
    """Inverse Lipschitz constant of the real gradient."""
    return 1.0 / (2 * quadratic.lambda_max() + 1.0 / rho)


@dataclass(frozen=True)
class PGStep:
    phi: np.ndarray
    value: float
    alpha: float
    stalled: bool


def projected_gradient_step(value, gradient, phi, beta, opts, g0=None) -> PGStep:
    """x = Proj(phi - beta grad); phi+ = phi + alpha (x - phi) with alpha from
    Armijo backtracking along that feasible direction."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    g0 = value(phi) if g0 is None else g0
    grad = gradient(phi)
    x = project_feasible(phi - beta * grad)
    direction = x - phi
    slope = float(np.real(np.vdot(grad, direction)))
    if slope >= 0 or not np.any(direction):
        return PGStep(phi, g0, 0.0, False)
    alpha = 1.0
    for _ in range(opts.armijo_max):
        cand = phi + alpha * direction
        g1 = value(cand)
        if g1 <= g0 + opts.armijo_sigma * alpha * slope:
            return PGStep(cand, g1, alpha, False)
        alpha *= opts.armijo_shrink
    return PGStep(phi, g0, 0.0, True)


def pg_step(
    state: PDDState,
    quadratic: QuadraticForm,
    beta: float,
    opts: PDDOptions | None = None,
    g0: float | None = None,
) -> PGStep:
    """One projected-gradient step on g at ``state.phi`` (state untouched)."""
    return projected_gradient_step(
        lambda p: al_value(state, quadratic, p),
        lambda p: al_gradient(state, quadratic, p),
        state.phi,
        beta,
        opts or PDDOptions(),
        g0,
    )


def projected_gradient(value, gradient, phi, beta, opts, g_log=None):
    """Iterate PG steps until the relative decrease drops below ``pg_tol``."""
    g = value(phi)
    for _ in range(opts.pg_max_iter):
        step = projected_gradient_step(value, gradient, phi, beta, opts, g0=g)
        if step.alpha == 0.0:
            break
        phi = step.phi
        decrease = g - step.value
        g = step.value
        if g_log is not None:
            g_log.append(g)
        if decrease <= opts.pg_tol * max(abs(g), 1e-300):
            break
    return phi, g


def solve_phi(
    state: PDDState, quadratic: QuadraticForm, opts: PDDOptions, g_log: list | None = None
) -> float:
    """Approximately minimize g over the feasible set; updates ``state.phi``."""
    state.phi, g = projected_gradient(
        lambda p: al_value(state, quadratic, p),
        lambda p: al_gradient(state, quadratic, p),
        state.phi,
        default_step(quadratic, state.rho),
        opts,
        g_log,
    )
    return g


def minimize_quadratic(quadratic: QuadraticForm, phi0: np.ndarray, opts: PDDOptions | None = None):
    """PG on the bare quadratic (no penalty) over |phi_i| <= 1."""
    opts = opts or PDDOptions()
    lmax = quadratic.lambda_max()
    beta = 1.0 / (2 * lmax) if lmax > 0 else 1.0
    return projected_gradient(quadratic.value, quadratic.gradient, project_feasible(phi0), beta, opts)


def refit_params(state: PDDState, omegas: np.ndarray, opts: PDDOptions) -> None:
    target = penalty_target(state).T
    fit = lm_solve(LMProblem(target, omegas, opts.bounds), state.params, opts.lm)
    state.params = fit.params
    state.d = lorentzian_response(fit.params, omegas).T


def update_dual(state: PDDState, mu: float) -> None:
    """lam <- lam + (phi - d) / rho, then rho <- mu rho."""
    state.lam = state.lam + (state.phi - state.d) / state.rho
    state.rho = mu * state.rho


def run_pdd(
    quadratic: QuadraticForm,
    init: LorentzianParams,
    omegas,
    opts: PDDOptions | None = None,
    phi0: np.ndarray | None = None,
) -> PDDResult:
    opts = opts or PDDOptions()
    omegas = np.asarray(omegas, dtype=float)
    d0 = lorentzian_response(init, omegas).T
    phi = project_feasible(d0) if phi0 is None else project_feasible(np.asarray(phi0, dtype=complex))
    state = PDDState(phi, init, d0, np.zeros_like(d0), opts.rho0)
    trace: list = []
    g_history: list = []
    best = None
    converged = False
    inner_total = 0
    violation = np.inf
    for p_out in range(1, opts.max_outer + 1):
        state.p_out = p_out
        g_inner = [al_value(state, quadratic)]
        g_prev = g_inner[0]
        for p_in in range(1, opts.max_inner + 1):
            state.p_in = p_in
            solve_phi(state, quadratic, opts, g_inner)
            refit_params(state, omegas, opts)
            g_new = al_value(state, quadratic)
            g_inner.append(g_new)
            inner_total += 1
            if abs(g_new - g_prev) <= opts.eps_in * max(abs(g_new), 1e-300):
                break
            g_prev = g_new
        g_history.append(g_inner)
        diff = state.phi - state.d
        violation = float(np.max(np.abs(diff)))
        row = {"p_out": p_out, "p_in": state.p_in, "g": g_inner[-1], "violation": violation, "rho": state.rho}
        trace.append(row)
        if opts.verbose:
            log.info(json.dumps(row))
        if best is None or violation < best[0]:
            best = (violation, state.params, state.phi.copy(), state.d.copy())
        update_dual(state, opts.mu)
        if violation <= opts.eps_out:
            converged = True
            break
    if converged:
        params, phi_out, d_out = state.params, state.phi, state.d
    else:
        violation, params, phi_out, d_out = best
    return PDDResult(
        params=params,
        phi=phi_out,
        d=d_out,
        violation=violation,
        converged=converged,
        outer_iters=state.p_out,
        inner_iters=inner_total,
        max_response=float(np.max(np.abs(d_out))),
        trace=trace,
        g_history=g_history,
    )


def options_with(opts: PDDOptions, **kw) -> PDDOptions:
    return replace(opts, **kw)

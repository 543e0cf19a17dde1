"""Levenberg-Marquardt fit of Lorentzian parameters to a target response.

Minimizes ||f - d(theta)||^2 where ``d`` stacks the element responses on
the grid.  Element n's responses depend only on its own (F_n, w_n, kappa_n),
so the Jacobian is block diagonal and the damped normal equations split into
independent 3x3 systems.  Each element keeps its own damping factor and
stopping state; since the cost is a sum over elements, accepting per element
is the same as accepting a block-diagonal global step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .lorentzian import (
    SINGULAR_TOL,
    LorentzianParams,
    ParamBounds,
    project_theta,
    response_jacobian,
)

log = logging.getLogger(__name__)


class LMNumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LMOptions:
    max_iter: int = 200
    gtol: float = 1e-8
    xtol: float = 1e-10
    damping0: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 10.0
    damping_max: float = 1e16


@dataclass(frozen=True)
class LMResult:
    params: LorentzianParams
    cost: float
    initial_cost: float
    iterations: int
    cost_history: np.ndarray


class LMProblem:
    """Fit element responses on ``omegas`` to ``target`` (N x B complex)."""

    def __init__(self, target: np.ndarray, omegas, bounds: ParamBounds | None = None):
        self.target = np.asarray(target, dtype=complex)
        self.omegas = np.asarray(omegas, dtype=float)
        self.bounds = bounds or ParamBounds()
        if self.target.ndim != 2 or self.target.shape[1] != self.omegas.size:
            raise ValueError("target must be (N, B) with B = len(omegas)")
        if not np.all(np.isfinite(self.target)):
            raise LMNumericalError("non-finite target values")

    @property
    def n_elements(self) -> int:
        return self.target.shape[0]

    def model(self, theta: np.ndarray) -> np.ndarray:
        """Responses for (N, 3) theta; singular entries become nan."""
        F, wn, kappa = theta[:, 0:1], theta[:, 1:2], theta[:, 2:3]
        w = self.omegas[None, :]
        den = wn**2 - w**2 + 1j * kappa * w
        bad = np.abs(den) < SINGULAR_TOL
        den = np.where(bad, np.nan, den)
        with np.errstate(invalid="ignore"):
            return F * w**2 / den

    def _target(self, rows):
        return self.target if rows is None else self.target[rows]

    def residual(self, theta: np.ndarray, rows=None) -> np.ndarray:
        """Per-element real residuals, shape (N, 2B): [Re(f - d), Im(f - d)].

        ``rows`` selects the elements ``theta`` refers to (default: all).
        """
        r = self._target(rows) - self.model(theta)
        return np.concatenate([r.real, r.imag], axis=1)

    def element_costs(self, theta: np.ndarray, rows=None) -> np.ndarray:
        r = self._target(rows) - self.model(theta)
        costs = np.sum(r.real**2 + r.imag**2, axis=1)
        return np.where(np.isfinite(costs), costs, np.inf)

    def cost(self, theta: np.ndarray) -> float:
        return float(np.sum(self.element_costs(theta)))

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        """Per-element residual Jacobian blocks, shape (N, 2B, 3)."""
        dphi = response_jacobian(LorentzianParams.from_theta(theta), self.omegas)
        return -np.concatenate([dphi.real, dphi.imag], axis=1)

    def dense_jacobian(self, theta: np.ndarray) -> np.ndarray:
        """Full (2NB, 3N) Jacobian of the element-major residual vector."""
        blocks = self.jacobian(theta)
        n, m, _ = blocks.shape
        out = np.zeros((n * m, 3 * n))
        for i in range(n):
            out[i * m:(i + 1) * m, 3 * i:3 * i + 3] = blocks[i]
        return out


def damped_step(
    jac: np.ndarray, res: np.ndarray, damping: np.ndarray, free: np.ndarray | None = None
) -> np.ndarray:
    """Solve (J^T J + mu diag(J^T J)) delta = -J^T r blockwise.

    ``jac`` is (N, M, 3), ``res`` (N, M), ``damping`` (N,).  Coordinates
    with ``free`` False are held fixed (zero step).
    """
    jtj = np.einsum("nmi,nmj->nij", jac, jac)
    grad = np.einsum("nmi,nm->ni", jac, res)
    diag = np.diagonal(jtj, axis1=1, axis2=2)
    scale = np.maximum(diag, 1e-12 * np.max(diag, axis=1, keepdims=True) + 1e-300)
    lhs = jtj + damping[:, None, None] * (scale[:, :, None] * np.eye(3))
    if free is not None:
        pair = free[:, :, None] & free[:, None, :]
        lhs = np.where(pair, lhs, 0.0) + (~free)[:, :, None] * np.eye(3)
        grad = np.where(free, grad, 0.0)
    return -np.linalg.solve(lhs, grad[..., None])[..., 0]


def free_coordinates(theta: np.ndarray, grad: np.ndarray, bounds: ParamBounds) -> np.ndarray:
    """False where a coordinate sits on a bound and descent points outward."""
    at_lo = theta <= bounds.lower()
    at_hi = theta >= bounds.upper()
    return ~((at_lo & (grad > 0)) | (at_hi & (grad < 0)))


def lm_solve(
    problem: LMProblem, init: LorentzianParams, opts: LMOptions | None = None
) -> LMResult:
    opts = opts or LMOptions()
    theta = project_theta(init.theta, problem.bounds)
    costs = problem.element_costs(theta)
    if not np.all(np.isfinite(costs)):
        raise LMNumericalError(
            f"non-finite residuals at the initial point for elements {np.flatnonzero(~np.isfinite(costs))}"
        )
    initial_cost = float(np.sum(costs))
    n = problem.n_elements
    damping = np.full(n, opts.damping0)
    active = np.ones(n, dtype=bool)
    history = [initial_cost]
    it = 0
    while it < opts.max_iter and np.any(active):
        it += 1
        idx = np.flatnonzero(active)
        th = theta[idx]
        jac = problem.jacobian(th)
        res = problem.residual(th, idx)
        grad = np.einsum("nmi,nm->ni", jac, res)
        free = free_coordinates(th, grad, problem.bounds)
        done = np.linalg.norm(np.where(free, grad, 0.0), axis=1) < opts.gtol
        step = damped_step(jac, res, damping[idx], free)
        if not np.all(np.isfinite(step)):
            raise LMNumericalError(f"non-finite LM step at iteration {it}")
        cand = project_theta(th + step, problem.bounds)
        cand_costs = problem.element_costs(cand, idx)
        accept = (cand_costs < costs[idx]) & ~done
        moved = np.linalg.norm(cand - th, axis=1)
        theta[idx[accept]] = cand[accept]
        costs[idx[accept]] = cand_costs[accept]
        damping[idx[accept]] /= opts.damping_down
        damping[idx[~accept]] *= opts.damping_up
        done |= moved < opts.xtol
        done |= damping[idx] > opts.damping_max
        active[idx[done]] = False
        history.append(float(np.sum(costs)))
    return LMResult(
        LorentzianParams.from_theta(theta), float(np.sum(costs)), initial_cost, it, np.array(history)
    )


def lm_fit(
    problem: LMProblem, init: LorentzianParams, opts: LMOptions | None = None
) -> LorentzianParams:
    """Best-fit parameters; never worse than ``init`` after projection."""
    return lm_solve(problem, init, opts).params

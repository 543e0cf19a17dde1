import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import crandn, random_channels, random_phi
from lorentzris.bcd import init_params
from lorentzris.lorentzian import FrequencyGrid, LorentzianParams, lorentzian_response
from lorentzris.pdd import (
    PDDOptions,
    PDDState,
    al_gradient,
    al_value,
    default_step,
    pg_step,
    project_feasible,
    projected_gradient,
    run_pdd,
    update_dual,
)
from lorentzris.wmmse import QuadraticForm, build_quadratic, update_aux

cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def random_quadratic(rng, n_bins=2, n_elements=3):
    X = crandn(rng, n_bins, n_elements, n_elements)
    A = X @ np.conj(np.swapaxes(X, 1, 2))
    return QuadraticForm(A, crandn(rng, n_bins, n_elements), float(rng.standard_normal()))


def random_state(rng, n_bins=2, n_elements=3, rho=0.7):
    grid = FrequencyGrid.centered(n_bins)
    params = init_params(n_elements, grid, rng)
    d = lorentzian_response(params, grid.omegas).T
    return PDDState(random_phi(rng, n_bins, n_elements), params, d, crandn(rng, n_bins, n_elements), rho)


def test_al_value_trivial_cases():
    rng = np.random.default_rng(0)
    zero = QuadraticForm(np.zeros((1, 2, 2)), np.zeros((1, 2)), 0.0)
    d = random_phi(rng, 1, 2)
    state = PDDState(d.copy(), None, d, np.zeros((1, 2)), 0.4)
    assert al_value(state, zero) == 0.0
    e = np.array([[0.6, 0.8j]])
    state.phi = d + e
    assert al_value(state, zero) == pytest.approx(1 / (2 * 0.4), rel=1e-14)


def test_al_value_dense_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        quad = random_quadratic(rng)
        state = random_state(rng)
        phi = state.phi.reshape(-1)
        A = quad.dense_A()
        r = phi - state.d.reshape(-1) + state.rho * state.lam.reshape(-1)
        dense = (
            (phi.conj() @ A @ phi).real
            + 2 * np.real(phi.conj() @ quad.b_vector().conj())
            - quad.c
            + np.vdot(r, r).real / (2 * state.rho)
        )
        assert al_value(state, quad) == pytest.approx(dense, rel=1e-10)


def fd_gradient(state, quad, h=1e-6):
    out = np.zeros_like(state.phi)
    for idx in np.ndindex(state.phi.shape):
        for unit in (1, 1j):
            up, dn = state.phi.copy(), state.phi.copy()
            up[idx] += h * unit
            dn[idx] -= h * unit
            out[idx] += unit * (al_value(state, quad, up) - al_value(state, quad, dn)) / (2 * h)
    return out


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    for _ in range(20):
        quad, state = random_quadratic(rng), random_state(rng)
        fd = fd_gradient(state, quad)
        assert np.linalg.norm(al_gradient(state, quad) - fd) <= 1e-5 * np.linalg.norm(fd)


@settings(max_examples=200, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=8))
def test_projection_idempotent(values):
    z = np.array(values)
    once = project_feasible(z)
    assert np.array_equal(project_feasible(once), once)
    assert np.all(np.abs(once) <= 1 + 1e-15)


@settings(max_examples=300, deadline=None)
@given(cplx, cplx)
def test_projection_non_expansive(z, w):
    pz, pw = project_feasible(np.array([z])), project_feasible(np.array([w]))
    assert abs(pz[0] - pw[0]) <= abs(z - w) + 1e-12


def test_projection_keeps_phase():
    z = np.array([2 * np.exp(0.7j), 0.3 + 0.1j])
    p = project_feasible(z)
    assert abs(p[0]) == pytest.approx(1.0, abs=1e-15)
    assert np.angle(p[0]) == pytest.approx(0.7, abs=1e-15)
    assert p[1] == z[1]


def test_stationary_point_is_fixed():
    # A = I, b chosen so the unconstrained minimizer (inside the disk) is phi
    phi = np.array([[0.2 + 0.1j, -0.3j]])
    quad = QuadraticForm(np.eye(2)[None].astype(complex), np.conj(-phi), 0.0)
    state = PDDState(phi.copy(), None, phi.copy(), np.zeros_like(phi), 1.0)
    assert np.allclose(al_gradient(state, quad), 0)
    step = pg_step(state, quad, 0.5)
    assert np.array_equal(step.phi, phi)


def test_pg_step_decreases_and_rejects_bad_beta():
    rng = np.random.default_rng(3)
    quad, state = random_quadratic(rng), random_state(rng)
    g0 = al_value(state, quad)
    step = pg_step(state, quad, default_step(quad, state.rho))
    assert step.value <= g0
    assert np.all(np.abs(step.phi) <= 1 + 1e-15)
    with pytest.raises(ValueError):
        pg_step(state, quad, 0.0)


def slow_pg(value, gradient, phi, step, iters):
    for _ in range(iters):
        phi = project_feasible(phi - step * gradient(phi))
    return value(phi)


def test_pg_reaches_slow_oracle():
    rng = np.random.default_rng(4)
    opts = PDDOptions(pg_max_iter=20_000, pg_tol=1e-15)
    for _ in range(3):
        quad, state = random_quadratic(rng), random_state(rng)
        value = lambda p: al_value(state, quad, p)
        grad = lambda p: al_gradient(state, quad, p)
        beta = default_step(quad, state.rho)
        _, g = projected_gradient(value, grad, state.phi, beta, opts)
        oracle = slow_pg(value, grad, state.phi, 0.1 * beta, 100_000)
        assert abs(g - oracle) <= 1e-6 * abs(oracle)


def test_dual_update_is_exact():
    phi = np.array([[0.5 + 0.25j, -0.125]])
    d = np.array([[0.25, 0.375j]])
    lam = np.array([[1.0, -2.0 + 0.5j]])
    state = PDDState(phi, None, d, lam.copy(), 0.5)
    update_dual(state, 0.75)
    np.testing.assert_array_equal(state.lam, lam + (phi - d) / 0.5)
    assert state.rho == 0.375


def desk_quadratic(rng, n_elements=6):
    freq = random_channels(rng, n_bins=8, n_elements=n_elements, noise_power=0.1, n_taps=4)
    grid = FrequencyGrid.dft(8)
    init = init_params(n_elements, grid, rng)
    quad = build_quadratic(freq, update_aux(freq, lorentzian_response(init, grid.omegas).T))
    return quad, init, grid


def test_inner_objective_monotone():
    rng = np.random.default_rng(5)
    for _ in range(3):
        quad, init, grid = desk_quadratic(rng)
        res = run_pdd(quad, init, grid.omegas)
        for inner in res.g_history:
            assert np.all(np.diff(inner) <= 1e-12)


def test_constructed_feasible_instance():
    omega = np.array([1.1])
    truth = LorentzianParams(np.array([0.3]), np.array([1.4]), np.array([0.8]))
    t = lorentzian_response(truth, omega)[0, 0]
    assert abs(t) < 1
    a = 2.0
    quad = QuadraticForm(np.array([[[a]]], dtype=complex), np.array([[-a * np.conj(t)]]), 0.0)
    start = LorentzianParams(np.array([0.8]), np.array([2.5]), np.array([1.5]))
    res = run_pdd(quad, start, omega)
    assert res.converged
    assert res.violation <= 1e-5
    assert abs(res.phi[0, 0] - t) < 1e-3


def test_loose_tolerance_stops_after_one_outer_iteration():
    quad, init, grid = desk_quadratic(np.random.default_rng(6))
    res = run_pdd(quad, init, grid.omegas, PDDOptions(eps_out=1.0))
    assert res.outer_iters == 1 and res.converged


def test_violation_settles():
    rng = np.random.default_rng(7)
    for _ in range(3):
        quad, init, grid = desk_quadratic(rng)
        res = run_pdd(quad, init, grid.omegas)
        tail = [row["violation"] for row in res.trace[-3:]]
        assert all(a >= b for a, b in zip(tail, tail[1:]))
        rhos = [row["rho"] for row in res.trace]
        assert all(a > b for a, b in zip(rhos, rhos[1:]))


def test_options_validation():
    with pytest.raises(ValueError):
        PDDOptions(mu=1.0)
    with pytest.raises(ValueError):
        PDDOptions(rho0=0.0)

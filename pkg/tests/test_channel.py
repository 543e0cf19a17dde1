import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import crandn, random_channels
from lorentzris.channel import (
    Dims,
    FrequencyChannelSet,
    Geometry,
    TapChannelSet,
    effective_channel,
    effective_channels,
    sample_taps,
    taps_to_frequency,
)
from lorentzris.lorentzian import FrequencyGrid, RISProfile


def dtft_oracle(taps, omegas):
    """Entry-by-entry DTFT sum with explicit loops."""
    q, r, c = taps.shape
    out = np.zeros((len(omegas), r, c), dtype=complex)
    for b, w in enumerate(omegas):
        for i in range(r):
            for j in range(c):
                out[b, i, j] = sum(taps[t, i, j] * np.exp(-1j * w * t) for t in range(q))
    return out


def test_sampling_deterministic():
    dims = Dims(4, 6, 2, 4)
    geo = Geometry.random_users(2, np.random.default_rng(1))
    a, b = sample_taps(geo, dims, 7), sample_taps(geo, dims, 7)
    for x, y in [(a.F_taps, b.F_taps), (a.J_taps, b.J_taps), (a.G_taps, b.G_taps)]:
        assert np.array_equal(x, y)
    c = sample_taps(geo, dims, 8)
    assert not np.array_equal(a.F_taps, c.F_taps)


def test_unit_variance_without_pathloss():
    taps = sample_taps(None, Dims(1, 100, 1000, 1), 0)
    var = np.mean(np.abs(taps.J_taps) ** 2)
    assert 0.98 <= var <= 1.02
    # circular symmetry: real and imaginary parts carry half the power each
    assert np.mean(taps.J_taps.real**2) == pytest.approx(0.5, rel=0.03)


def test_pathloss_variance_at_ten_meters():
    geo = Geometry([0.0, 0.0], [50.0, 50.0], [[10.0, 0.0]], alpha_direct=3.0)
    taps = sample_taps(geo, Dims(1000, 1, 1, 100), 3)
    var = np.mean(np.abs(taps.G_taps) ** 2)
    assert var == pytest.approx(1e-3, rel=0.05)


def test_users_in_disk():
    geo = Geometry.random_users(500, np.random.default_rng(0), center=(15, 17.5), radius=3)
    r = np.linalg.norm(geo.ut_positions - [15, 17.5], axis=1)
    assert r.max() <= 3
    # uniform in area: half the users fall inside radius 3/sqrt(2)
    assert np.mean(r <= 3 / np.sqrt(2)) == pytest.approx(0.5, abs=0.07)


def test_single_tap_is_flat():
    rng = np.random.default_rng(0)
    taps = TapChannelSet(crandn(rng, 1, 3, 4), crandn(rng, 1, 4, 2), crandn(rng, 1, 3, 2))
    freq = taps_to_frequency(taps, FrequencyGrid.dft(5), 1.0)
    for b in range(5):
        np.testing.assert_array_equal(freq.F[b], taps.F_taps[0])


def test_unit_delay_phase_ramp():
    eye = np.eye(3, dtype=complex)
    F = np.stack([np.zeros((3, 3)), eye])
    taps = TapChannelSet(F, np.zeros((2, 3, 1)), np.zeros((2, 3, 1)))
    grid = FrequencyGrid.dft(8)
    freq = taps_to_frequency(taps, grid, 1.0)
    for b, w in enumerate(grid.omegas):
        np.testing.assert_allclose(freq.F[b], np.exp(-1j * w) * eye, atol=1e-15)


def test_dtft_matches_oracle():
    rng = np.random.default_rng(2)
    taps = sample_taps(None, Dims(3, 4, 2, 4), rng)
    grid = FrequencyGrid.centered(7)
    freq = taps_to_frequency(taps, grid, 1.0)
    for got, src in [(freq.F, taps.F_taps), (freq.J, taps.J_taps), (freq.G, taps.G_taps)]:
        assert np.max(np.abs(got - dtft_oracle(src, grid.omegas))) < 1e-12


@pytest.mark.parametrize("n_bins", [4, 8, 13])
def test_parseval_on_dft_grid(n_bins):
    taps = sample_taps(None, Dims(2, 2, 2, 4), 5)
    freq = taps_to_frequency(taps, FrequencyGrid.dft(n_bins), 1.0)
    lhs = np.mean(np.abs(freq.G[:, 0, 1]) ** 2)
    rhs = np.sum(np.abs(taps.G_taps[:, 0, 1]) ** 2)
    assert abs(lhs - rhs) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), st.integers(0, 1000))
def test_dtft_linearity(a, seed):
    dims = Dims(2, 3, 2, 4)
    t1, t2 = sample_taps(None, dims, seed), sample_taps(None, dims, seed + 1)
    grid = FrequencyGrid.dft(6)
    lhs = taps_to_frequency(t1.scale(a) + t2, grid, 1.0)
    f1, f2 = taps_to_frequency(t1, grid, 1.0), taps_to_frequency(t2, grid, 1.0)
    for x, y, z in [(lhs.F, f1.F, f2.F), (lhs.J, f1.J, f2.J), (lhs.G, f1.G, f2.G)]:
        np.testing.assert_allclose(x, a * y + z, atol=1e-10 * (1 + abs(a)))


def test_effective_channel_special_cases():
    rng = np.random.default_rng(3)
    freq = random_channels(rng, n_bins=2)
    zero = RISProfile(np.zeros((5, 2), dtype=complex))
    np.testing.assert_array_equal(effective_channel(freq, zero, 1), freq.G[1])
    nog = FrequencyChannelSet(freq.F, freq.J, np.zeros_like(freq.G), 1.0)
    ones = RISProfile(np.ones((5, 2), dtype=complex))
    np.testing.assert_allclose(effective_channel(nog, ones, 0), freq.F[0] @ freq.J[0], atol=1e-14)


def test_effective_channel_naive_oracle():
    rng = np.random.default_rng(4)
    freq = random_channels(rng, n_bins=4)
    prof = RISProfile(crandn(rng, 5, 4))
    for b in range(4):
        naive = freq.G[b] + freq.F[b] @ np.diag(prof.response[:, b]) @ freq.J[b]
        assert np.max(np.abs(effective_channel(freq, prof, b) - naive)) < 1e-12


def test_effective_channel_is_affine():
    rng = np.random.default_rng(5)
    freq = random_channels(rng, n_bins=3)
    p, q = crandn(rng, 3, 5), crandn(rng, 3, 5)
    t = 0.3
    lhs = effective_channels(freq, t * p + (1 - t) * q)
    rhs = t * effective_channels(freq, p) + (1 - t) * effective_channels(freq, q)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_input_psd_folds_in():
    rng = np.random.default_rng(6)
    base = random_channels(rng, n_bins=2)
    root = np.array([[1.0, 0.2], [0.2, 0.5]])
    cx = np.stack([root @ root] * 2)
    freq = FrequencyChannelSet(base.F, base.J, base.G, 1.0, cx)
    prof = RISProfile(crandn(rng, 5, 2))
    expected = (base.G[0] + base.F[0] @ np.diag(prof.response[:, 0]) @ base.J[0]) @ root
    np.testing.assert_allclose(effective_channel(freq, prof, 0), expected, atol=1e-12)


def test_dimension_mismatch():
    rng = np.random.default_rng(7)
    freq = random_channels(rng, n_bins=2)
    with pytest.raises(ValueError):
        effective_channel(freq, RISProfile(np.zeros((4, 2), dtype=complex)), 0)
    with pytest.raises(ValueError):
        FrequencyChannelSet(freq.F, freq.J[:, :3], freq.G, 1.0)
    with pytest.raises(ValueError):
        Dims(0, 1, 1, 1)


def test_json_round_trip():
    rng = np.random.default_rng(8)
    taps = sample_taps(None, Dims(2, 3, 2, 4), rng)
    back = TapChannelSet.from_json(taps.to_json())
    assert np.array_equal(back.J_taps, taps.J_taps)
    freq = taps_to_frequency(taps, FrequencyGrid.dft(4), 0.1)
    again = FrequencyChannelSet.from_json(freq.to_json())
    assert again.digest() == freq.digest()
    geo = Geometry.random_users(3, rng)
    assert np.array_equal(Geometry.from_dict(geo.to_dict()).ut_positions, geo.ut_positions)

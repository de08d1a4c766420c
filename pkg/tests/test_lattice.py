import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from galerkin_ns.lattice import (SpectralField, WaveIndex, basis_eval, besov_norm, complete, enstrophy,
                                 grad_perp_grid, heat_semigroup, lattice, lp_norm, sobolev_norm, stokes_apply,
                                 synthesize, vorticity_and_stream)

from conftest import random_coeffs

nonzero_k = st.tuples(st.integers(-6, 6), st.integers(-6, 6)).filter(lambda k: k != (0, 0))


def test_half_lattice_counts():
    # |k| <= N lattice points minus the origin, halved
    for N in (1, 2, 4, 8, 16):
        full = sum(1 for a in range(-N, N + 1) for b in range(-N, N + 1) if 0 < a * a + b * b <= N * N)
        assert lattice(N).size == full // 2
    assert lattice(8).size == 98


def test_lattice_order_and_membership():
    lat = lattice(6)
    pairs = list(zip(lat.k1.tolist(), lat.k2.tolist()))
    assert pairs == sorted(pairs)
    assert all(WaveIndex(a, b).in_half_lattice() for a, b in pairs)
    assert pairs[0] == (0, 1)


@given(nonzero_k, st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_basis_modulus(k, x, y):
    assert abs(np.linalg.norm(basis_eval(WaveIndex(*k), (x, y))) - 1 / (2 * np.pi)) < 1e-15


@given(nonzero_k)
def test_basis_conjugation_rule(k):
    xi = (0.3, 1.7)
    kk = WaveIndex(*k)
    np.testing.assert_allclose(basis_eval(-kk, xi), -np.conj(basis_eval(kk, xi)), atol=1e-16)


def test_single_mode_synthesis():
    u = SpectralField.from_modes(4, {(1, 0): 1.0})
    g = synthesize(u, 17)
    x = 2 * np.pi * np.arange(17) / 17
    X, _ = np.meshgrid(x, x, indexing="ij")
    np.testing.assert_allclose(g.values[..., 0], 0, atol=1e-15)
    np.testing.assert_allclose(g.values[..., 1], np.cos(X) / np.pi, atol=1e-15)


def test_synthesis_matches_direct_sum(rng):
    N, M = 4, 17
    lat = lattice(N)
    u = SpectralField(N, random_coeffs(rng, lat.size))
    g = synthesize(u, M)
    for i, j in [(0, 0), (3, 5), (16, 2)]:
        xi = (2 * np.pi * i / M, 2 * np.pi * j / M)
        direct = sum(u[WaveIndex(a, b)] * basis_eval(WaveIndex(a, b), xi)
                     for a, b in zip(lat.full_k1.tolist(), lat.full_k2.tolist()))
        np.testing.assert_allclose(g.values[i, j], direct.real, atol=1e-13)
        assert np.max(np.abs(direct.imag)) < 1e-13


def test_synthesis_preconditions():
    u = SpectralField.zeros(4)
    with pytest.raises(ValueError):
        synthesize(u, 16)
    bad = np.zeros(lattice(4).size, dtype=complex)
    bad[0] = np.nan
    with pytest.raises(ValueError):
        synthesize(SpectralField(4, bad))


def test_divergence_free(rng):
    N, M = 5, 21
    u = SpectralField(N, random_coeffs(rng, lattice(N).size))
    v = synthesize(u, M).values
    m = np.fft.fftfreq(M, 1 / M)
    d1 = np.fft.ifft2(1j * m[:, None] * np.fft.fft2(v[..., 0])).real
    d2 = np.fft.ifft2(1j * m[None, :] * np.fft.fft2(v[..., 1])).real
    assert np.max(np.abs(d1 + d2)) < 1e-12


def test_parseval(rng):
    N = 6
    u = SpectralField(N, random_coeffs(rng, lattice(N).size))
    assert math.isclose(lp_norm(synthesize(u), 2), sobolev_norm(u, 0), rel_tol=1e-12)
    assert math.isclose(sobolev_norm(SpectralField.from_modes(3, {(1, 0): 1}), 0), math.sqrt(2), rel_tol=1e-15)


def _abs_cos_moment(p):
    return math.gamma((p + 1) / 2) / (math.sqrt(math.pi) * math.gamma(p / 2 + 1))


@pytest.mark.parametrize("p", [4, 6])
def test_lp_single_mode_even_p_exact(p):
    # u = k_perp cos(k.xi) / (pi |k|), so ||u||_p^p = 4 pi^2 E|cos|^p / pi^p
    u = SpectralField.from_modes(3, {(2, 1): 1.0})
    exact = (4 * np.pi**2 * _abs_cos_moment(p) / np.pi**p) ** (1 / p)
    assert abs(lp_norm(synthesize(u, p * 3 + 1), p) - exact) < 1e-13
    assert math.isclose(_abs_cos_moment(4), 3 / 8)


@pytest.mark.parametrize("p", [2.5, 3, 3.5, 5])
@pytest.mark.parametrize("N", [1, 3, 8])
def test_lp_single_mode_odd_p_algebraic_rate(p, N):
    # |cos|^p has a kink of order p at its zeros, so the trapezoid error
    # decays like M^-(p+1) rather than spectrally
    u = SpectralField.from_modes(N, {(1, 0): 1.0})
    exact = (4 * np.pi**2 * _abs_cos_moment(p) / np.pi**p) ** (1 / p)
    errs = []
    for M in (8 * N + 1, 16 * N + 1, 32 * N + 1):
        err = abs(lp_norm(synthesize(u, M), p) - exact) / exact
        assert err <= 2.0 * M ** -(p + 1)
        errs.append(err)
    assert errs[0] > errs[1] > errs[2]
    assert math.isclose(_abs_cos_moment(3), 4 / (3 * np.pi))


@given(st.floats(-2, 2))
def test_besov_equals_sobolev_on_unit_block(s):
    u = SpectralField.from_modes(4, {(1, 0): 0.7 - 0.2j, (0, 1): 0.1j})
    assert math.isclose(besov_norm(u, s, 2, 2), sobolev_norm(u, s), rel_tol=1e-12)


@given(st.floats(-1.5, 1.5))
def test_besov_22_within_dyadic_factor_of_sobolev(s):
    rng = np.random.default_rng(3)
    u = SpectralField(8, random_coeffs(rng, lattice(8).size))
    ratio = besov_norm(u, s, 2, 2) / sobolev_norm(u, s)
    assert 2.0 ** -abs(s) - 1e-12 <= ratio <= 2.0 ** abs(s) + 1e-12


@given(st.floats(0.1, 10))
def test_besov_homogeneous(lam):
    rng = np.random.default_rng(4)
    u = SpectralField(6, random_coeffs(rng, lattice(6).size))
    assert math.isclose(besov_norm(u * lam, -1 / 6, 3, 3), lam * besov_norm(u, -1 / 6, 3, 3), rel_tol=1e-12)


def test_vorticity_and_stream(rng):
    N, M = 5, 21
    u = SpectralField(N, random_coeffs(rng, lattice(N).size))
    omega, psi = vorticity_and_stream(u)
    v = synthesize(u, M).values
    m = np.fft.fftfreq(M, 1 / M)
    curl = (np.fft.ifft2(1j * m[:, None] * np.fft.fft2(v[..., 1]))
            - np.fft.ifft2(1j * m[None, :] * np.fft.fft2(v[..., 0]))).real
    np.testing.assert_allclose(omega.synthesize(M), curl, atol=1e-12)
    np.testing.assert_allclose(grad_perp_grid(psi, M), v, atol=1e-12)
    # enstrophy = ||curl u||_L2^2
    assert math.isclose((2 * np.pi / M) ** 2 * np.sum(curl**2), enstrophy(u), rel_tol=1e-12)


def test_field_completion_and_restriction(rng):
    u = SpectralField(6, random_coeffs(rng, lattice(6).size))
    assert u[(-1, -2)] == -np.conj(u[(1, 2)])
    assert u[(7, 0)] == 0
    r = u.restrict(3)
    assert r.embed(6).restrict(3).coeffs.tolist() == r.coeffs.tolist()
    for k, c in r.to_dict().items():
        assert u[k] == c
    np.testing.assert_array_equal(complete(u.coeffs)[lattice(6).size:], -np.conj(u.coeffs))
    with pytest.raises(ValueError):
        u + r
    with pytest.raises(ValueError):
        u.coeffs[0] = 1


def test_semigroup_and_stokes(rng):
    u = SpectralField(4, random_coeffs(rng, lattice(4).size))
    np.testing.assert_allclose(stokes_apply(u).coeffs, u.coeffs * lattice(4).norm_sq)
    a = heat_semigroup(heat_semigroup(u, 0.1), 0.2)
    np.testing.assert_allclose(a.coeffs, heat_semigroup(u, 0.3).coeffs, rtol=1e-13)
    assert heat_semigroup(u, 0) is u
    with pytest.raises(ValueError):
        heat_semigroup(u, -1)

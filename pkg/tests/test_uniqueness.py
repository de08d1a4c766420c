import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from galerkin_ns.lattice import SpectralField, besov_norm, lattice
from galerkin_ns.measure import MeasureParams, sample_coeffs, sample_mu_nu
from galerkin_ns.uniqueness import (BesovParams, FieldPath, bilinear_estimate_batch, bilinear_estimate_probe,
                                    contraction_factor, geometric_ratio, iterate_mild_map, mild_map, path_norms,
                                    probe_paths, shared_noise_divergence, t_star, validate_params)

BP = BesovParams.reference()


def test_reference_parameters_valid():
    assert validate_params(BP) == []
    assert BP.lalpha_exponent == Fraction(1, 12)
    assert BP.sup_exponent == Fraction(1, 8)


def test_named_violations():
    assert "0 < s" in validate_params(BesovParams(0, Fraction(1, 2), 3, 3, 3))
    assert "a < 2/p" in validate_params(BesovParams(Fraction(1, 6), Fraction(2, 3), 3, 3, 3))
    with pytest.raises(ValueError):
        validate_params(BesovParams(Fraction(1, 6), Fraction(1, 2), 3, 3, 1))
    with pytest.raises(ValueError):
        validate_params(BesovParams(float("nan"), 0.5, 3, 3, 3))


@given(st.floats(2.05, 12.0), st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(1.01, 10.0))
def test_accepted_parameters_imply_young_conditions(p, fs, fa, alpha):
    s = fs * (1 - 2 / p)
    a = s + fa * (2 / p - s)
    bp = BesovParams(s, a, p, p, alpha)
    assume(validate_params(bp) == [])
    assert (s + 2 / p + 1) / 2 < 1
    assert (-a + 2 / p + 1) / 2 * alpha / (alpha - 1) < 1
    assert bp.lalpha_exponent > 0 and bp.sup_exponent > 0


@given(st.floats(1.0, 2.0), st.floats(0.01, 1.0), st.floats(0.01, 2.0), st.floats(1.01, 10.0))
def test_p_at_most_two_always_rejected(p, s, a, alpha):
    assert validate_params(BesovParams(s, a, p, p, alpha)) != []


def test_t_star_arithmetic():
    assert abs(t_star(1.0, 1.0, 1.0, BP) - 2.0**-12) <= 1e-15
    assert t_star(1.0, 1.0, 2.0, BP) < t_star(1.0, 1.0, 1.0, BP)
    with pytest.raises(ValueError):
        t_star(0.0, 1.0, 1.0, BP)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10))
def test_t_star_monotone_in_n_t(c1, c2, nt):
    assert t_star(c1, c2, 2 * nt, BP) < t_star(c1, c2, nt, BP)


def test_bilinear_probe_single_mode_and_zero():
    u = SpectralField.from_modes(6, {(1, 2): 0.5 + 0.1j})
    assert bilinear_estimate_probe(u, u, BP) < 1e-14
    with pytest.raises(ZeroDivisionError):
        bilinear_estimate_probe(u, SpectralField.zeros(6), BP)


@given(st.floats(-5, 5).filter(lambda x: abs(x) > 0.01), st.floats(-5, 5).filter(lambda x: abs(x) > 0.01))
def test_bilinear_probe_scale_invariant(lam, mu):
    u = sample_mu_nu(MeasureParams(1.0, 6, 0))
    v = sample_mu_nu(MeasureParams(1.0, 6, 1))
    assert math.isclose(bilinear_estimate_probe(u * lam, v * mu, BP), bilinear_estimate_probe(u, v, BP),
                        rel_tol=1e-12)


def test_bilinear_probe_sup_stable_in_n():
    sups = []
    for N in (8, 12):
        u = sample_coeffs(MeasureParams(1.0, N, 0), 200)
        v = sample_coeffs(MeasureParams(1.0, N, 1), 200) * np.exp(-0.05 * lattice(N).norm_sq)
        sups.append(float(bilinear_estimate_batch(u, v, N, BP).max()))
    assert np.isfinite(sups).all()
    assert abs(sups[1] / sups[0] - 1) < 0.2


def frozen_pair(N=6, T=0.5, steps=16):
    u = sample_mu_nu(MeasureParams(1.0, N, 2), 0)
    ut = sample_mu_nu(MeasureParams(1.0, N, 2), 1)
    return FieldPath.frozen(u, T, steps), FieldPath.frozen(ut, T, steps)


def test_mild_map_trivial_cases():
    U, UT = frozen_pair()
    zero = U * 0
    assert not np.any(mild_map(zero, U, UT).coeffs)
    v = probe_paths(6, U.steps, U.dt, 2, seed=1)[0]
    assert not np.any(mild_map(v, zero, zero).coeffs)
    w = mild_map(v, U, UT)
    assert not np.any(w.coeffs[0])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_mild_map_linear(a, b):
    U, UT = frozen_pair()
    v1, v2 = probe_paths(6, U.steps, U.dt, 2, seed=5)
    lhs = mild_map(a * v1 + b * v2, U, UT).coeffs
    rhs = a * mild_map(v1, U, UT).coeffs + b * mild_map(v2, U, UT).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_mild_map_grid_mismatch():
    U, UT = frozen_pair()
    V, _ = frozen_pair(steps=8)
    with pytest.raises(ValueError):
        mild_map(V, U, UT)
    with pytest.raises(ValueError):
        FieldPath(6, 0.1, np.zeros((3, 5)))


def test_mild_map_converges_under_refinement():
    # w(T) for a time-smooth v should converge at first order as dt -> 0
    N, T = 5, 0.2
    u = sample_mu_nu(MeasureParams(1.0, N, 3), 0)
    ut = sample_mu_nu(MeasureParams(1.0, N, 3), 1)
    shape = sample_mu_nu(MeasureParams(1.0, N, 3), 2).coeffs
    ends = []
    for steps in (20, 40, 80, 160):
        t = np.linspace(0, T, steps + 1)[:, None]
        v = FieldPath(N, T / steps, np.sin(np.pi * t / T) * shape)
        ends.append(mild_map(v, FieldPath.frozen(u, T, steps), FieldPath.frozen(ut, T, steps)).coeffs[-1])
    d = [np.max(np.abs(ends[i + 1] - ends[i])) for i in range(3)]
    assert d[1] < 0.6 * d[0] and d[2] < 0.6 * d[1]


def test_mild_map_variation_of_constants_oracle():
    # constant forcing F: w(t_n) = -(1 - e^{-nu|k|^2 t_n})/(nu|k|^2) F exactly, up to v_0 = 0
    N, steps, T = 4, 10, 0.3
    U, UT = frozen_pair(N, T, steps)
    shape = sample_mu_nu(MeasureParams(1.0, N, 9), 0).coeffs
    c = np.repeat(shape[None, :], steps + 1, axis=0)
    c[0] = 0
    v = FieldPath(N, T / steps, c)
    w = mild_map(v, U, UT)
    lat = lattice(N)
    from galerkin_ns.nonlinearity import bilinear_coeffs
    F = bilinear_coeffs(U.coeffs[0], shape, N) + bilinear_coeffs(shape, UT.coeffs[0], N)
    lam = lat.norm_sq
    dt = T / steps
    expected = -(1 - np.exp(-lam * (T - dt))) / lam * F
    np.testing.assert_allclose(w.coeffs[-1], expected, rtol=1e-10, atol=1e-14)


@given(st.floats(0.01, 100))
def test_path_norms_homogeneous(lam):
    v = probe_paths(5, 8, 0.01, 1, seed=4)[0]
    a, b = path_norms(v, BP), path_norms(v * lam, BP)
    assert math.isclose(b.v_norm, lam * a.v_norm, rel_tol=1e-12)


def test_path_norm_definitions():
    u = sample_mu_nu(MeasureParams(1.0, 5, 1))
    P = FieldPath.frozen(u, 1.0, 4)
    n = path_norms(P, BP)
    assert math.isclose(n.sup_neg, besov_norm(u, -1 / 6, 3, 3), rel_tol=1e-13)
    assert math.isclose(n.lalpha_pos, besov_norm(u, 1 / 2, 3, 3), rel_tol=1e-13)


def test_probe_paths_start_at_zero_and_hit_blocks():
    paths = probe_paths(8, 6, 0.1, 10, seed=0)
    lat = lattice(8)
    for i, p in enumerate(paths):
        assert not np.any(p.coeffs[0])
        if i % 2:
            support = np.flatnonzero(np.any(p.coeffs != 0, axis=0))
            assert np.all(lat.block_mask((i // 2) % lat.dyadic_levels)[support])


def test_contraction_report_small():
    U, UT = frozen_pair(5, 0.01, 8)
    rep = contraction_factor(U, UT, BP, probes=10, seed=1)
    assert rep.T_star > 0 and rep.probes == 10
    assert 0 < rep.measured_factor < 1
    assert rep.contracts
    with pytest.raises(ValueError):
        contraction_factor(U, UT, BP, probes=9)


def test_contraction_factor_invariant_under_path_scaling_of_probes():
    # the map is linear in v, so ratio norms are scale free
    U, UT = frozen_pair(5, 0.05, 8)
    v = probe_paths(5, 8, U.dt, 1, seed=3)[0]
    r1 = path_norms(mild_map(v, U, UT), BP).v_norm / path_norms(v, BP).v_norm
    r2 = path_norms(mild_map(v * 37.0, U, UT), BP).v_norm / path_norms(v * 37.0, BP).v_norm
    assert math.isclose(r1, r2, rel_tol=1e-12)


def test_iteration_contracts_and_is_nilpotent():
    U, UT = frozen_pair(5, 0.05, 8)
    v = probe_paths(5, 8, U.dt, 1, seed=7)[0]
    norms = iterate_mild_map(v, U, UT, BP, 10)
    assert np.all(np.diff(norms[norms > 0]) < 0)
    # each application pushes the first nonzero time index forward by one
    assert norms[-1] == 0
    assert 0 < geometric_ratio(norms) < 1
    assert geometric_ratio(np.array([2.0, 1.0, 0.5, 0.0])) == pytest.approx(0.5)
    assert geometric_ratio(np.array([1.0, 0.0])) == 0.0


def test_shared_noise_divergence_edges():
    same = shared_noise_divergence(6, 6, 1.0, 0.01, 1e-3, 0, BP, stride=5)
    assert np.all(same.distance == 0)
    c = shared_noise_divergence(3, 6, 1.0, 0.01, 1e-3, 0, BP, stride=5)
    x = sample_mu_nu(MeasureParams(1.0, 6, 0))
    high = x - x.restrict(3).embed(6)
    assert math.isclose(c.distance[0], besov_norm(high, -1 / 6, 3, 3), rel_tol=1e-13)
    with pytest.raises(ValueError):
        shared_noise_divergence(6, 3, 1.0, 0.01, 1e-3, 0, BP)

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from galerkin_ns.lattice import lattice, synthesize
from galerkin_ns.measure import (MeasureParams, hnorm_expectation_analytic, hnorm_power_samples,
                                 linear_functional_samples, linear_functional_variance, mode_covariance,
                                 moment_coefficient, moment_target, moment_test, sample_coeffs, sample_ensemble,
                                 sample_mu_nu)


def test_moment_coefficients():
    assert [moment_coefficient(n) for n in (1, 2, 3, 4)] == [1, 3, 15, 105]
    with pytest.raises(ValueError):
        moment_coefficient(0)


def test_single_mode_moment_targets():
    gamma = {(1, 0): 1.0}
    assert linear_functional_variance(1.0, gamma) == 1.0
    assert moment_target(1.0, gamma, 2) == 3.0
    assert moment_target(1.0, gamma, 3) == 15.0


def test_params_validation():
    with pytest.raises(ValueError):
        MeasureParams(0.0, 4)
    with pytest.raises(ValueError):
        MeasureParams(1.0, 0)


def test_mode_variances():
    M = 40_000
    c = sample_coeffs(MeasureParams(2.0, 4, 1), M)
    var = np.mean(np.abs(c) ** 2, axis=0)
    target = 1 / (2 * 2.0 * lattice(4).norm_sq)
    # |u_k|^2 is exponential: relative SE = 1/sqrt(M)
    assert np.all(np.abs(var / target - 1) < 5 / math.sqrt(M))
    assert mode_covariance(2.0, (1, 1)) == 1 / 8


def test_prefix_property_and_determinism():
    big = sample_mu_nu(MeasureParams(1.0, 12, 7), 3)
    small = sample_mu_nu(MeasureParams(1.0, 5, 7), 3)
    np.testing.assert_array_equal(big.restrict(5).coeffs, small.coeffs)
    np.testing.assert_array_equal(sample_coeffs(MeasureParams(1.0, 5, 7), 2, start=3)[0], small.coeffs)
    assert not np.array_equal(sample_mu_nu(MeasureParams(1.0, 5, 8), 3).coeffs, small.coeffs)
    assert len(sample_ensemble(MeasureParams(1.0, 5, 7), 4)) == 4


def test_samples_synthesize_to_real_fields():
    u = sample_mu_nu(MeasureParams(1.0, 8, 0))
    g = synthesize(u)
    assert np.all(np.isfinite(g.values))


def test_modes_uncorrelated():
    c = sample_coeffs(MeasureParams(1.0, 3, 4), 50_000)
    cov = (c.conj().T @ c) / c.shape[0]
    off = cov - np.diag(np.diag(cov))
    assert np.max(np.abs(off)) < 5 * np.max(np.abs(np.diag(cov))) / math.sqrt(c.shape[0])
    # circular: E u_k u_k = 0
    assert np.max(np.abs(np.mean(c * c, axis=0))) < 0.02


def test_linear_functional_rejects_bad_support():
    with pytest.raises(ValueError):
        linear_functional_samples(MeasureParams(1.0, 4, 0), {(-1, 0): 1.0}, 10)
    with pytest.raises(ValueError):
        linear_functional_samples(MeasureParams(1.0, 4, 0), {(5, 0): 1.0}, 10)
    assert np.all(linear_functional_samples(MeasureParams(1.0, 4, 0), {}, 10) == 0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_moment_test_passes(n):
    rep = moment_test(MeasureParams(1.0, 8, 11), {(1, 0): 1.0, (2, 3): 0.25j}, n, 50_000)
    assert rep.passed, rep.summary()


def test_moment_test_needs_samples():
    with pytest.raises(ValueError):
        moment_test(MeasureParams(1.0, 4, 0), {(1, 0): 1.0}, 1, 99)


@given(st.floats(0.25, 4.0))
def test_variance_scales_inversely_with_nu(nu):
    gamma = {(1, 0): 1.0, (1, 1): 2.0}
    assert math.isclose(linear_functional_variance(nu, gamma) * nu, linear_functional_variance(1.0, gamma))


@pytest.mark.parametrize("s, n", [(0.5, 2), (1.0, 1), (0.25, 3)])
def test_hnorm_expectation_against_grid_monte_carlo(s, n):
    params = MeasureParams(1.0, 4, 3)
    x = hnorm_power_samples(params, s, n, 4000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - hnorm_expectation_analytic(1.0, s, n, 4)) < 4 * se

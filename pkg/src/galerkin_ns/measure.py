"""Sampling and moment identities of the truncated enstrophy measure.

Under mu_nu the half-lattice coefficients are independent circular complex
Gaussians with E|u_k|^2 = 1 / (2 nu |k|^2).  Each mode draws from its own
counter-based stream keyed by (seed, k1, k2), so sample ``j`` of mode ``k``
is the same number whatever the truncation or the order of evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .lattice import SpectralField, WaveIndex, _synthesize_coeffs, lattice, min_grid
from .report import ExperimentReport, MetricRow, mean_and_se


@dataclass(frozen=True)
class MeasureParams:
    nu: float
    N: int
    seed: int = 0

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got nu={self.nu}")
        if self.N < 1:
            raise ValueError(f"truncation must be >= 1, got N={self.N}")


def mode_covariance(nu: float, k) -> float:
    """E|u_k|^2 = 1 / (2 nu |k|^2)."""
    k = k if isinstance(k, WaveIndex) else WaveIndex(*k)
    return 1.0 / (2.0 * nu * k.norm_sq)


def mode_variances(nu: float, N: int) -> np.ndarray:
    return 1.0 / (2.0 * nu * lattice(N).norm_sq)


def standard_modes(seed: int, k1, k2, sample) -> np.ndarray:
    """Unit circular complex normals for modes (k1, k2) and sample indices (broadcast)."""
    return rng.complex_gaussian((sample, k1, k2, rng.TAG_MEASURE), (seed, 0))


def sample_coeffs(params: MeasureParams, count: int, start: int = 0) -> np.ndarray:
    """Samples ``start .. start+count-1`` as an array of shape (count, n_modes)."""
    lat = lattice(params.N)
    idx = np.arange(start, start + count)[:, None]
    z = standard_modes(params.seed, lat.k1[None, :], lat.k2[None, :], idx)
    return z * np.sqrt(mode_variances(params.nu, params.N))


def sample_mu_nu(params: MeasureParams, index: int = 0) -> SpectralField:
    """One draw from the truncated measure (sample ``index`` of the seeded stream)."""
    return SpectralField(params.N, sample_coeffs(params, 1, index)[0])


def sample_ensemble(params: MeasureParams, count: int, start: int = 0) -> list[SpectralField]:
    return [SpectralField(params.N, c) for c in sample_coeffs(params, count, start)]


def moment_coefficient(n: int) -> int:
    """(2n)! / (2^n n!), the 2n-th moment of a unit real Gaussian."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.factorial(2 * n) // (2**n * math.factorial(n))


def linear_functional_variance(nu: float, gamma: dict) -> float:
    """sum over the full lattice of |gamma_k|^2 E|u_k|^2 for half-lattice gamma.

    gamma is completed like a velocity field, so the functional
    sum_k u_k gamma_k over all k != 0 is real and each +-k pair counts twice.
    """
    return 2.0 * sum(abs(g) ** 2 * mode_covariance(nu, k) for k, g in gamma.items())


def moment_target(nu: float, gamma: dict, n: int) -> float:
    return moment_coefficient(n) * linear_functional_variance(nu, gamma) ** n


def linear_functional_samples(params: MeasureParams, gamma: dict, count: int, start: int = 0) -> np.ndarray:
    """Real samples of X = sum_{k != 0} u_k gamma_k = 2 Re sum_{k in Z^2_+} u_k gamma_k.

    Only the modes in the support of gamma are drawn.
    """
    if not gamma:
        return np.zeros(count)
    keys = [k if isinstance(k, WaveIndex) else WaveIndex(*k) for k in gamma]
    for k in keys:
        if not k.in_half_lattice() or k.norm_sq > params.N**2:
            raise ValueError(f"gamma index {k} outside the truncated half lattice")
    k1 = np.array([k.k1 for k in keys])
    k2 = np.array([k.k2 for k in keys])
    sigma = np.sqrt(1.0 / (2.0 * params.nu * (k1 * k1 + k2 * k2)))
    g = np.array(list(gamma.values()), dtype=complex)
    idx = np.arange(start, start + count)[:, None]
    u = standard_modes(params.seed, k1[None, :], k2[None, :], idx) * sigma
    return 2.0 * np.real(u @ g)


def moment_test(params: MeasureParams, gamma: dict, n: int, M: int, gate: float = 3.0) -> ExperimentReport:
    """Monte Carlo check of E|X|^(2n) = (2n)!/(2^n n!) (E X^2)^n for the real functional X."""
    if M < 100:
        raise ValueError(f"sample count too small: M={M} < 100")
    x = linear_functional_samples(params, gamma, M)
    mean, se = mean_and_se(np.abs(x) ** (2 * n))
    target = moment_target(params.nu, gamma, n) if gamma else 0.0
    report = ExperimentReport("moment-test", seed=params.seed)
    report.add(MetricRow(f"E|X|^{2 * n}", mean, target, se, gate, "se"))
    return report


def hnorm_expectation_analytic(nu: float, s: float, n: int, N: int) -> float:
    """E ||u||^(2n) in H_{2n}^(-s) for the truncated measure.

    At each point the velocity sum_k u_k |k|^(-s) e_k(xi) is a centred
    isotropic Gaussian 2-vector with E|V|^2 = sum_k |k|^(-2s) E|u_k|^2 / (4 pi^2),
    hence E|V|^(2n) = n! (E|V|^2)^n, integrated over an area of 4 pi^2.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    lat = lattice(N)
    point_var = 2.0 * np.sum(lat.norm ** (-2.0 * s) * mode_variances(nu, N)) / (4 * np.pi**2)
    return math.factorial(n) * 4 * np.pi**2 * float(point_var) ** n


def hnorm_power_samples(params: MeasureParams, s: float, n: int, count: int, M: int | None = None) -> np.ndarray:
    """Quadrature values of ||u||^(2n)_{H_{2n}^(-s)} for ``count`` samples."""
    lat = lattice(params.N)
    M = max(min_grid(params.N), 2 * n * params.N + 1) if M is None else M
    out = np.empty(count)
    step = 256
    for start in range(0, count, step):
        c = sample_coeffs(params, min(step, count - start), start) * lat.norm ** (-s)
        values = _synthesize_coeffs(c, params.N, M).real
        mag = np.sum(values * values, axis=-1)
        out[start:start + c.shape[0]] = (2 * np.pi / M) ** 2 * np.sum(mag**n, axis=(-2, -1))
    return out

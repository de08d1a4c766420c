"""Gated experiments, one function per check, each returning an ExperimentReport.

The CLI and the acceptance tests both call these; nothing here writes files.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import GalerkinSystem, simulate
from .lattice import WaveIndex, lattice
from .measure import MeasureParams, moment_target, linear_functional_samples, sample_coeffs, sample_mu_nu
from .nonlinearity import (bnorm_majorant, bnorm_second_moment_analytic, bnorm_sq_batch, coefficient_table,
                           convolution_series, galerkin_increment_analytic, galerkin_increment_batch,
                           nonlinear_coeffs)
from .report import ExperimentReport, MetricRow, mean_and_se
from .uniqueness import (BesovParams, DivergenceCurve, FieldPath, find_contraction_horizon, geometric_ratio,
                         iterate_mild_map, probe_paths, shared_noise_divergence, t_star, validate_params)


def gamma_profiles(N: int) -> dict[str, dict]:
    """Three test functionals: one mode, two modes with a complex weight, and a 1/|k| spread."""
    spread = {}
    lat = lattice(min(N, 4))
    for k1, k2, nrm in zip(lat.k1, lat.k2, lat.norm):
        spread[(int(k1), int(k2))] = 1.0 / nrm
    return {
        "single": {(1, 0): 1.0},
        "pair": {(1, 0): 1.0, (1, 1): 0.5 - 0.5j},
        "spread": spread,
    }


def coefficient_check(N: int, tol: float = 1e-14) -> ExperimentReport:
    """Symmetry c_{h,k} = c_{k-h,k} entry by entry and |c|^2 <= |k|^2/(4 pi^2)."""
    t = coefficient_table(N)
    lat = lattice(N)
    width = 2 * lat.size
    key = t.k_idx * width + t.h_idx
    order = np.argsort(key)
    partner = order[np.searchsorted(key[order], t.k_idx * width + t.j_idx)]
    if not np.array_equal(t.h_idx[partner], t.j_idx):
        raise AssertionError("partner lookup failed")
    sym_err = float(np.max(np.abs(t.c - t.c[partner])))
    bound = float(np.max(np.abs(t.c) ** 2 * 4 * np.pi**2 / lat.norm_sq[t.k_idx]))
    report = ExperimentReport("check-coefficients")
    report.add(MetricRow(f"max |c_hk - c_(k-h)k| N={N}", sym_err, 0.0, 0.0, tol, "abs"))
    report.add(MetricRow(f"max |c_hk|^2 4pi^2/|k|^2 N={N}", bound, 1.0, 0.0, 0.0, "max"))
    report.notes.append(f"{t.c.size} ordered triads")
    return report


def conservation_check(nu: float, Ns=(4, 8, 16), M: int = 100, seed: int = 0, tol: float = 1e-10) -> ExperimentReport:
    """Relative enstrophy flux |sum B_k |k|^2 conj(u_k)| / sum |B_k| |k|^2 |u_k| on mu_nu samples."""
    report = ExperimentReport("check-conservation", seed=seed)
    for N in Ns:
        lat = lattice(N)
        u = sample_coeffs(MeasureParams(nu, N, seed), M)
        b = nonlinear_coeffs(u, N)
        flux = 2.0 * np.sum((b * np.conj(u)).real * lat.norm_sq, axis=-1)
        scale = 2.0 * np.sum(np.abs(b) * np.abs(u) * lat.norm_sq, axis=-1)
        rel = float(np.max(np.abs(flux) / scale))
        report.add(MetricRow(f"max relative enstrophy flux N={N}", rel, 0.0, 0.0, tol, "abs"))
    return report


def moment_suite(nu: float, N: int, M: int, seed: int = 0, ns=(1, 2, 3), gate: float = 3.0) -> ExperimentReport:
    report = ExperimentReport("moment-test", seed=seed)
    params = MeasureParams(nu, N, seed)
    for name, gamma in gamma_profiles(N).items():
        x = linear_functional_samples(params, gamma, M)
        for n in ns:
            mean, se = mean_and_se(np.abs(x) ** (2 * n))
            report.add(MetricRow(f"E|X_{name}|^{2 * n}", mean, moment_target(nu, gamma, n), se, gate, "se"))
    return report


def bnorm_test(nu: float, N: int, M: int, r: float = 0.5, seed: int = 0, Ns=(4, 8, 16, 24),
               gate: float = 3.0, variation: float = 0.25) -> ExperimentReport:
    """Monte Carlo E||B^N||^2_{H^(-r-1)} against its exact value, and the analytic/majorant ratio over N."""
    report = ExperimentReport("bnorm-test", seed=seed)
    vals = bnorm_sq_batch(sample_coeffs(MeasureParams(nu, N, seed), M), N, r)
    mean, se = mean_and_se(vals)
    report.add(MetricRow(f"E||B^{N}||^2_H^-{r + 1:g}", mean, bnorm_second_moment_analytic(nu, r, N), se, gate, "se"))
    ratios = [bnorm_second_moment_analytic(nu, r, n) * nu**2 / bnorm_majorant(r, n) for n in Ns]
    for n, q in zip(Ns, ratios):
        report.notes.append(f"analytic*nu^2/majorant at N={n}: {q:.6g}")
    report.add(MetricRow(f"max/min - 1 of analytic*nu^2/majorant over N={list(Ns)}",
                         max(ratios) / min(ratios) - 1.0, variation, 0.0, 0.0, "max"))
    return report


def galerkin_convergence_test(nu: float, M: int, r: float = 0.5, seed: int = 0, Ns=(4, 8, 16),
                              gate: float = 3.0) -> ExperimentReport:
    """E||B^{2N} - B^N||^2_{H^(-r-1)} by Monte Carlo for each N, required to decrease along Ns."""
    report = ExperimentReport("galerkin-convergence", seed=seed)
    means = []
    for N in Ns:
        vals = galerkin_increment_batch(sample_coeffs(MeasureParams(nu, 2 * N, seed), M), N, r)
        mean, se = mean_and_se(vals)
        means.append(mean)
        report.add(MetricRow(f"E||B^{2 * N} - B^{N}||^2_H^-{r + 1:g}", mean,
                             galerkin_increment_analytic(nu, r, N), se, gate, "se"))
    for (n0, m0), (n1, m1) in zip(zip(Ns, means), zip(Ns[1:], means[1:])):
        report.add(MetricRow(f"increment ratio N={n1}/N={n0}", m1 / m0, 1.0, 0.0, 0.0, "max"))
    return report


def series_shape_test(kmax: int = 64, R: int = 256, factor: float = 10.0) -> ExperimentReport:
    """S(k) = sum_h 1/(|h|^2|k-h|^2) against log|k|/|k|^2 along k = (m, 0), m = 2..kmax."""
    report = ExperimentReport("series-bound")
    shapes, tails = {}, []
    for m in range(2, kmax + 1):
        res = convolution_series(WaveIndex(m, 0), R)
        shapes[m] = res.upper * m * m / math.log(m)
        tails.append(res.tail_bound / res.partial_sum)
    vals = np.array(list(shapes.values()))
    ref = shapes.get(4, vals[0])
    report.add(MetricRow("max shape / shape(|k|=4)", float(vals.max() / ref), factor, 0.0, 0.0, "max"))
    report.add(MetricRow("max tail bound / partial sum", float(max(tails)), 1e-2, 0.0, 0.0, "max"))
    report.notes.append(f"shape max/min = {vals.max() / vals.min():.6g} over |k| in [2,{kmax}], R={R}")
    report.notes.append("shape at |k|=" + " ".join(f"{m}:{v:.5g}" for m, v in shapes.items()))
    return report


def contraction_test(nu: float, N: int, bp: BesovParams, seed: int = 0, probes: int = 10, T0: float = 1.0,
                     steps: int = 32, iterations: int = 10, slack: float = 0.05):
    """Frozen mu_nu paths u, u~ at truncation N; returns (report, ContractionReport)."""
    report = ExperimentReport("contraction-test", seed=seed)
    report.add(MetricRow("violated parameter clauses", float(len(validate_params(bp))), 0.0, 0.0, 0.0, "abs"))
    report.add(MetricRow("T* arithmetic (C1=C2=N_T=1)", t_star(1.0, 1.0, 1.0, bp), 2.0**-12, 0.0, 1e-15, "abs"))
    params = MeasureParams(nu, N, seed)
    u, ut = sample_mu_nu(params, 0), sample_mu_nu(params, 1)
    rep = find_contraction_horizon(u, ut, bp, T0=T0, steps=steps, probes=probes, seed=seed, nu=nu)
    report.add(MetricRow("T / T*", rep.T / rep.T_star, 1.0, 0.0, 0.0, "max"))
    report.add(MetricRow("measured contraction factor", rep.measured_factor, 1.0, 0.0, 0.0, "max"))
    U, UT = FieldPath.frozen(u, rep.T, steps), FieldPath.frozen(ut, rep.T, steps)
    # fresh probes, disjoint from those that produced the factor
    for i, v in enumerate(probe_paths(N, steps, rep.T / steps, 10, seed + 1_000_003, nu)):
        g = geometric_ratio(iterate_mild_map(v, U, UT, bp, iterations, nu))
        report.add(MetricRow(f"geometric ratio probe {i}", g, rep.measured_factor + slack, 0.0, 0.0, "max"))
    report.notes.append(f"T={rep.T:g} C1={rep.C1:.6g} C2={rep.C2:.6g} N_T={rep.N_T:.6g} T*={rep.T_star:.6g} "
                        f"probes={rep.probes}")
    return report, rep


def uniqueness_divergence_test(nu: float, T: float, dt: float, bp: BesovParams, seeds=range(5),
                               pairs=((4, 8), (8, 16), (12, 24)), stride: int = 10, required: int = 4):
    """Shared-noise divergence curves per seed; returns (report, curves)."""
    seeds = list(seeds)
    report = ExperimentReport("uniqueness-divergence", seed=seeds[0])
    a = simulate(sample_mu_nu(MeasureParams(nu, 8, seeds[0])), GalerkinSystem(nu, 8), T, dt, seeds[0], stride=stride)
    b = simulate(sample_mu_nu(MeasureParams(nu, 8, seeds[0])), GalerkinSystem(nu, 8), T, dt, seeds[0], stride=stride)
    same = max(float(np.max(np.abs(x.coeffs - y.coeffs))) for x, y in zip(a.states, b.states))
    report.add(MetricRow("rerun max |difference| (same seed, N=8)", same, 0.0, 0.0, 0.0, "abs"))
    curves: list[DivergenceCurve] = []
    good = 0
    for seed in seeds:
        maxima = []
        for N1, N2 in pairs:
            c = shared_noise_divergence(N1, N2, nu, T, dt, seed, bp, stride=stride)
            curves.append(c)
            maxima.append(c.max_distance)
        ok = all(m1 <= m0 for m0, m1 in zip(maxima, maxima[1:]))
        good += ok
        report.notes.append(f"seed {seed}: time-max distances " + " ".join(f"{m:.6g}" for m in maxima)
                            + (" nonincreasing" if ok else " NOT monotone"))
    report.add(MetricRow(f"seeds with nonincreasing time-max distance (of {len(seeds)})", float(good),
                         float(required), 0.0, 0.0, "min"))
    return report, curves

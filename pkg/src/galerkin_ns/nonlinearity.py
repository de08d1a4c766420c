"""Galerkin-truncated advection term B^N and its analytic companions.

Projecting (u.grad)v onto e_k with the plane-wave basis gives

    B_k(u, v) = sum_h d_{h,k} u_h v_{k-h},
    d_{h,k}   = i (h_perp.k) ((k-h).k) / (2 pi |h| |k-h| |k|),

over 0 < |h|, |k-h|, |k| <= N.  The symmetrized coefficient
c_{h,k} = (d_{h,k} + d_{k-h,k}) / 2 is purely imaginary and has the modulus of
the classical real coefficient (1/4pi)(h_perp.k)/(|h||k-h|) (|k| - 2 h.k/|k|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .lattice import SpectralField, WaveIndex, complete, lattice

# ensemble rows evaluated per sparse product; bounds the (rows x pairs) scratch array
_CHUNK_ENTRIES = 4_000_000


def bilinear_coefficient(h: WaveIndex, k: WaveIndex) -> complex:
    """d_{h,k}, the weight of u_h v_{k-h} in the k-th component of (u.grad)v."""
    h = h if isinstance(h, WaveIndex) else WaveIndex(*h)
    k = k if isinstance(k, WaveIndex) else WaveIndex(*k)
    if h == k:
        raise ValueError("degenerate indices: h == k")
    j1, j2 = k.k1 - h.k1, k.k2 - h.k2
    cross = -h.k2 * k.k1 + h.k1 * k.k2
    dot = j1 * k.k1 + j2 * k.k2
    return 1j * cross * dot / (2 * math.pi * h.norm * math.hypot(j1, j2) * k.norm)


def symmetrized_coefficient(h: WaveIndex, k: WaveIndex) -> complex:
    h = h if isinstance(h, WaveIndex) else WaveIndex(*h)
    k = k if isinstance(k, WaveIndex) else WaveIndex(*k)
    j = WaveIndex(k.k1 - h.k1, k.k2 - h.k2)
    return 0.5 * (bilinear_coefficient(h, k) + bilinear_coefficient(j, k))


@dataclass(frozen=True)
class CoefficientTable:
    """All admissible triads of truncation N.

    Ordered entries (one per (k, h)) drive the bilinear form B(u, v);
    symmetric entries (one per unordered pair {h, k-h}) drive B(u, u) at half
    the cost.  Indices ``h_idx``/``j_idx`` point into the full-lattice vector
    of :func:`galerkin_ns.lattice.complete`, ``k_idx`` into the half lattice.
    """

    N: int
    k_idx: np.ndarray
    h_idx: np.ndarray
    j_idx: np.ndarray
    d: np.ndarray
    c: np.ndarray
    sym_k_idx: np.ndarray
    sym_h_idx: np.ndarray
    sym_j_idx: np.ndarray
    sym_weight: np.ndarray

    @property
    def n_modes(self) -> int:
        return lattice(self.N).size

    @property
    def ordered_matrix(self) -> sp.csr_matrix:
        return _scatter(self.N, "ordered")

    @property
    def symmetric_matrix(self) -> sp.csr_matrix:
        return _scatter(self.N, "symmetric")


@lru_cache(maxsize=None)
def coefficient_table(N: int) -> CoefficientTable:
    lat = lattice(N)
    kk1, kk2 = lat.k1[:, None], lat.k2[:, None]
    hh1, hh2 = lat.full_k1[None, :], lat.full_k2[None, :]
    j1, j2 = kk1 - hh1, kk2 - hh2
    jsq = j1 * j1 + j2 * j2
    admissible = (jsq > 0) & (jsq <= N * N)
    k_idx, h_pos = np.nonzero(admissible)
    j_idx = lat.full_index(j1[k_idx, h_pos], j2[k_idx, h_pos])
    assert np.all(j_idx >= 0)

    k1, k2 = lat.k1[k_idx], lat.k2[k_idx]
    h1, h2 = lat.full_k1[h_pos], lat.full_k2[h_pos]
    q1, q2 = k1 - h1, k2 - h2
    knorm = lat.norm[k_idx]
    hnorm = np.hypot(h1, h2)
    qnorm = np.hypot(q1, q2)
    cross = (-h2 * k1 + h1 * k2).astype(float)
    d = 1j * cross * (q1 * k1 + q2 * k2) / (2 * np.pi * hnorm * qnorm * knorm)
    # partner entry d_{k-h,k}: cross product flips sign, projection becomes h.k
    d_partner = 1j * (-cross) * (h1 * k1 + h2 * k2) / (2 * np.pi * hnorm * qnorm * knorm)
    c = 0.5 * (d + d_partner)

    keep = h_pos <= j_idx
    weight = np.where(h_pos[keep] == j_idx[keep], c[keep], 2 * c[keep])
    return CoefficientTable(
        N=N,
        k_idx=k_idx,
        h_idx=h_pos,
        j_idx=j_idx,
        d=d,
        c=c,
        sym_k_idx=k_idx[keep],
        sym_h_idx=h_pos[keep],
        sym_j_idx=j_idx[keep],
        sym_weight=weight,
    )


@lru_cache(maxsize=None)
def _scatter(N: int, kind: str) -> sp.csr_matrix:
    t = coefficient_table(N)
    if kind == "ordered":
        rows, data = t.k_idx, t.d
    else:
        rows, data = t.sym_k_idx, t.sym_weight
    return sp.csr_matrix((data, (rows, np.arange(rows.size))), shape=(t.n_modes, rows.size))


def _chunks(batch: int, entries: int):
    step = max(1, _CHUNK_ENTRIES // max(entries, 1))
    for start in range(0, batch, step):
        yield slice(start, min(batch, start + step))


def nonlinear_coeffs(coeffs: np.ndarray, N: int) -> np.ndarray:
    """B^N(u) for a batch of half-lattice coefficient arrays (last axis = modes)."""
    t = coefficient_table(N)
    S = t.symmetric_matrix
    coeffs = np.asarray(coeffs, dtype=complex)
    flat = coeffs.reshape(-1, coeffs.shape[-1])
    out = np.empty_like(flat)
    for rows in _chunks(flat.shape[0], t.sym_weight.size):
        full = complete(flat[rows])
        prod = full[:, t.sym_h_idx] * full[:, t.sym_j_idx]
        out[rows] = (S @ prod.T).T
    return out.reshape(coeffs.shape)


def bilinear_coeffs(u: np.ndarray, v: np.ndarray, N: int) -> np.ndarray:
    """B^N(u, v) for batches; k-th entry sum_h d_{h,k} u_h v_{k-h}."""
    t = coefficient_table(N)
    S = t.ordered_matrix
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    u, v = np.broadcast_arrays(u, v)
    fu = u.reshape(-1, u.shape[-1])
    fv = v.reshape(-1, v.shape[-1])
    out = np.empty_like(fu)
    for rows in _chunks(fu.shape[0], t.d.size):
        prod = complete(fu[rows])[:, t.h_idx] * complete(fv[rows])[:, t.j_idx]
        out[rows] = (S @ prod.T).T
    return out.reshape(u.shape)


def nonlinear_term(u: SpectralField) -> SpectralField:
    return SpectralField(u.N, nonlinear_coeffs(u.coeffs, u.N))


def bilinear_term(u: SpectralField, v: SpectralField) -> SpectralField:
    if u.N != v.N:
        raise ValueError(f"truncation mismatch: N={u.N} vs N={v.N}")
    return SpectralField(u.N, bilinear_coeffs(u.coeffs, v.coeffs, u.N))


def enstrophy_flux(u: SpectralField) -> complex:
    """sum over 0 < |k| <= N of B_k^N(u) |k|^2 conj(u_k); zero for every u.

    Summed with math.fsum in lattice order so that the cancellation is
    resolved to rounding of the individual terms.
    """
    b = complete(nonlinear_coeffs(u.coeffs, u.N))
    full_u = u.full()
    lat = u.lattice
    ksq = np.concatenate([lat.norm_sq, lat.norm_sq])
    terms = b * ksq * np.conj(full_u)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def enstrophy_flux_batch(coeffs: np.ndarray, N: int) -> np.ndarray:
    lat = lattice(N)
    b = nonlinear_coeffs(coeffs, N)
    # the -k half contributes the complex conjugate of the +k half
    return 2.0 * np.sum((b * np.conj(coeffs)).real * lat.norm_sq, axis=-1)


def bnorm_sq_batch(coeffs: np.ndarray, N: int, r: float) -> np.ndarray:
    """||B^N(u)||^2 in H_2^(-r-1) for a batch."""
    lat = lattice(N)
    b = nonlinear_coeffs(coeffs, N)
    return 2.0 * np.sum(np.abs(b) ** 2 * lat.norm ** (-2.0 * r - 2.0), axis=-1)


def galerkin_increment_batch(coeffs: np.ndarray, N: int, r: float) -> np.ndarray:
    """||B^{2N}(u) - B^N(u^N)||^2 in H_2^(-r-1) for a batch drawn at truncation 2N.

    u^N keeps the modes |k| <= N; B^N(u^N) is zero-padded before subtracting.
    """
    big = lattice(2 * N)
    keep = big.restriction(N)
    diff = nonlinear_coeffs(coeffs, 2 * N)
    diff[..., keep] -= nonlinear_coeffs(coeffs[..., keep], N)
    return 2.0 * np.sum(np.abs(diff) ** 2 * big.norm ** (-2.0 * r - 2.0), axis=-1)


def _pair_variance_sum(N: int, nu: float, r: float, exclude_N: int | None = None) -> float:
    t = coefficient_table(N)
    lat = lattice(N)
    full_sq = np.concatenate([lat.norm_sq, lat.norm_sq]).astype(float)
    hsq = full_sq[t.h_idx]
    jsq = full_sq[t.j_idx]
    ksq = lat.norm_sq[t.k_idx].astype(float)
    mask = np.ones(t.c.size, dtype=bool)
    if exclude_N is not None:
        mask = ~((hsq <= exclude_N**2) & (jsq <= exclude_N**2) & (ksq <= exclude_N**2))
    # |c|^2 + Re(c_{h,k} conj(c_{k-h,k})) with c symmetric -> 2|c|^2
    per_pair = 2.0 * np.abs(t.c[mask]) ** 2 / ((2 * nu * hsq[mask]) * (2 * nu * jsq[mask]))
    weights = ksq[mask] ** (-r - 1.0)
    # half lattice only; E|B_{-k}|^2 = E|B_k|^2
    return 2.0 * math.fsum(per_pair * weights)


def bnorm_second_moment_analytic(nu: float, r: float, N: int) -> float:
    """Exact E ||B^N(u)||^2_{H^(-r-1)} under the truncated enstrophy measure."""
    if r <= 0:
        raise ValueError("r must be positive")
    if N < 2:
        raise ValueError("N must be >= 2")
    return _pair_variance_sum(N, nu, r)


def galerkin_increment_analytic(nu: float, r: float, N: int) -> float:
    """Exact E ||B^{2N}(u) - B^N(u)||^2_{H^(-r-1)} with u drawn at truncation 2N."""
    return _pair_variance_sum(2 * N, nu, r, exclude_N=N)


def bnorm_majorant(r: float, N: int) -> float:
    """sum over 2 <= |k| <= N of log|k| / |k|^(2+2r), full lattice."""
    if r <= 0:
        raise ValueError("r must be positive")
    lat = lattice(N)
    norm = lat.norm[lat.norm_sq >= 4]
    return 2.0 * math.fsum(np.log(norm) / norm ** (2 + 2 * r))


@dataclass(frozen=True)
class SeriesResult:
    k: WaveIndex
    R: int
    partial_sum: float
    tail_bound: float

    @property
    def upper(self) -> float:
        return self.partial_sum + self.tail_bound


def series_tail_bound(k_norm: float, R: float) -> float:
    """Rigorous bound on sum over |h| > R of 1/(|h|^2 |k-h|^2) when R >= 4|k|.

    For |h| > R >= 4|k|, |k-h| >= 3|h|/4.  Each lattice point owns the unit
    square around it, on which |x| <= |h| + 1/sqrt(2); integrating the
    decreasing majorant over |x| > R - 1/sqrt(2) bounds the lattice sum.
    """
    delta = math.sqrt(0.5)
    rho = R - 2 * delta
    integral = 2 * math.pi * (1.0 / (2 * rho**2) + delta / (3 * rho**3))
    return (16.0 / 9.0) * integral


@lru_cache(maxsize=8)
def _disk(R: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.arange(-R, R + 1)
    g1, g2 = np.meshgrid(r, r, indexing="ij")
    g1, g2 = g1.ravel(), g2.ravel()
    keep = (g1 * g1 + g2 * g2 <= R * R) & ((g1 != 0) | (g2 != 0))
    return g1[keep], g2[keep]


def convolution_series(k: WaveIndex, R: int) -> SeriesResult:
    """Partial sum of sum_{h != 0, k} 1/(|h|^2 |k-h|^2) over |h| <= R, plus its tail bound."""
    k = k if isinstance(k, WaveIndex) else WaveIndex(*k)
    if R < 4 * k.norm:
        raise ValueError(f"cutoff too small: R={R} < 4|k|={4 * k.norm:.3f}")
    h1, h2 = _disk(R)
    j1, j2 = k.k1 - h1, k.k2 - h2
    jsq = j1 * j1 + j2 * j2
    keep = jsq > 0
    terms = 1.0 / ((h1[keep] ** 2 + h2[keep] ** 2).astype(float) * jsq[keep])
    return SeriesResult(k, R, math.fsum(terms), series_tail_bound(k.norm, R))

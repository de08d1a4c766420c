"""Wave-index lattice, truncated divergence-free fields and their norms.

A velocity field on the torus [0, 2pi)^2 is written u = sum_k u_k e_k with
e_k(xi) = k_perp / (2 pi |k|) exp(i k.xi), k_perp = (-k2, k1).  Only the
half lattice k1 > 0 or (k1 = 0, k2 > 0) is stored.  Because
e_{-k} = -conj(e_k), a real field has u_{-k} = -conj(u_k); that is the
completion rule used everywhere below (see :func:`complete`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, order=True)
class WaveIndex:
    k1: int
    k2: int

    def __post_init__(self):
        if self.k1 == 0 and self.k2 == 0:
            raise ValueError("zero wave index")

    @property
    def perp(self) -> tuple[int, int]:
        return (-self.k2, self.k1)

    @property
    def norm(self) -> float:
        return math.hypot(self.k1, self.k2)

    @property
    def norm_sq(self) -> int:
        return self.k1 * self.k1 + self.k2 * self.k2

    def in_half_lattice(self) -> bool:
        return self.k1 > 0 or (self.k1 == 0 and self.k2 > 0)

    def __neg__(self) -> "WaveIndex":
        return WaveIndex(-self.k1, -self.k2)


def in_half_lattice(k1, k2):
    k1 = np.asarray(k1)
    k2 = np.asarray(k2)
    return (k1 > 0) | ((k1 == 0) & (k2 > 0))


class Lattice:
    """Index bookkeeping for the truncation 0 < |k| <= N.

    Half-lattice modes are sorted lexicographically by (k1, k2); the full
    lattice vector used in convolutions is ``[u, completion of u]``, i.e.
    entry ``n + i`` holds the mode ``-k_i``.
    """

    def __init__(self, N: int):
        if N < 1:
            raise ValueError(f"truncation N must be >= 1, got {N}")
        self.N = N
        r = np.arange(-N, N + 1)
        g1, g2 = np.meshgrid(r, r, indexing="ij")
        g1, g2 = g1.ravel(), g2.ravel()
        keep = in_half_lattice(g1, g2) & (g1 * g1 + g2 * g2 <= N * N)
        # meshgrid with indexing="ij" over a sorted range is already lexicographic
        self.k1 = g1[keep]
        self.k2 = g2[keep]
        self.size = self.k1.size
        self.norm_sq = self.k1 * self.k1 + self.k2 * self.k2
        self.norm = np.sqrt(self.norm_sq.astype(float))
        self.full_k1 = np.concatenate([self.k1, -self.k1])
        self.full_k2 = np.concatenate([self.k2, -self.k2])
        # dense lookup: (k1 + N, k2 + N) -> full-lattice position, -1 if absent
        self._lookup = np.full((2 * N + 1, 2 * N + 1), -1, dtype=np.int64)
        self._lookup[self.full_k1 + N, self.full_k2 + N] = np.arange(2 * self.size)
        self.dyadic_levels = int(math.floor(math.log2(N))) + 1

    def full_index(self, k1, k2) -> np.ndarray:
        """Full-lattice position of (k1, k2); -1 where outside the truncation."""
        k1 = np.asarray(k1)
        k2 = np.asarray(k2)
        inside = (np.abs(k1) <= self.N) & (np.abs(k2) <= self.N)
        out = np.full(np.broadcast(k1, k2).shape, -1, dtype=np.int64)
        out[inside] = self._lookup[(k1 + self.N)[inside], (k2 + self.N)[inside]]
        return out

    def index(self, k: WaveIndex) -> int:
        k = k if isinstance(k, WaveIndex) else WaveIndex(*k)
        if not k.in_half_lattice():
            raise ValueError(f"{k} is not in the half lattice")
        i = int(self.full_index(k.k1, k.k2))
        if i < 0:
            raise ValueError(f"{k} lies outside truncation N={self.N}")
        return i

    def block_mask(self, j: int) -> np.ndarray:
        """Modes with 2^j <= |k| < 2^(j+1), computed on integer |k|^2."""
        return (self.norm_sq >= 4**j) & (self.norm_sq < 4 ** (j + 1))

    def restriction(self, N: int) -> np.ndarray:
        """Positions, in this lattice, of the modes of the smaller truncation N."""
        if N > self.N:
            raise ValueError("cannot restrict to a larger truncation")
        return np.flatnonzero(self.norm_sq <= N * N)


@lru_cache(maxsize=None)
def lattice(N: int) -> Lattice:
    return Lattice(N)


def complete(coeffs: np.ndarray) -> np.ndarray:
    """Full-lattice vector [u_k, u_{-k}] with u_{-k} = -conj(u_k) on the last axis."""
    return np.concatenate([coeffs, -np.conj(coeffs)], axis=-1)


def complete_scalar(coeffs: np.ndarray) -> np.ndarray:
    """Completion for real scalar fields: c_{-k} = conj(c_k)."""
    return np.concatenate([coeffs, np.conj(coeffs)], axis=-1)


@dataclass(frozen=True)
class SpectralField:
    """Truncated divergence-free field, half-lattice coefficients in lattice order."""

    N: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (lattice(self.N).size,):
            raise ValueError(f"expected {lattice(self.N).size} coefficients for N={self.N}, got shape {c.shape}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, N: int) -> "SpectralField":
        return cls(N, np.zeros(lattice(N).size, dtype=complex))

    @classmethod
    def from_modes(cls, N: int, modes: dict) -> "SpectralField":
        """Build from ``{(k1, k2): u_k}``; every key must be in the half lattice."""
        lat = lattice(N)
        c = np.zeros(lat.size, dtype=complex)
        for key, value in modes.items():
            k = key if isinstance(key, WaveIndex) else WaveIndex(*key)
            c[lat.index(k)] = value
        return cls(N, c)

    @property
    def lattice(self) -> Lattice:
        return lattice(self.N)

    def __getitem__(self, key) -> complex:
        """Coefficient at any nonzero index, using the completion for k outside Z^2_+."""
        k = key if isinstance(key, WaveIndex) else WaveIndex(*key)
        if k.norm_sq > self.N**2:
            return 0j
        if k.in_half_lattice():
            return complex(self.coeffs[self.lattice.index(k)])
        return complex(-np.conj(self.coeffs[self.lattice.index(-k)]))

    def full(self) -> np.ndarray:
        return complete(self.coeffs)

    def to_dict(self) -> dict:
        lat = self.lattice
        return {(int(a), int(b)): complex(c) for a, b, c in zip(lat.k1, lat.k2, self.coeffs)}

    def restrict(self, N: int) -> "SpectralField":
        return SpectralField(N, self.coeffs[self.lattice.restriction(N)])

    def embed(self, N: int) -> "SpectralField":
        """Zero-pad into a larger truncation."""
        big = lattice(N)
        c = np.zeros(big.size, dtype=complex)
        c[big.restriction(self.N)] = self.coeffs
        return SpectralField(N, c)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_truncation(self, other)
        return SpectralField(self.N, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_truncation(self, other)
        return SpectralField(self.N, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.N, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.N, -self.coeffs)


def _check_same_truncation(a: SpectralField, b: SpectralField):
    if a.N != b.N:
        raise ValueError(f"truncation mismatch: N={a.N} vs N={b.N}")


def _check_finite(c: np.ndarray):
    if not np.all(np.isfinite(c)):
        raise ValueError("non-finite spectral coefficients")


@dataclass(frozen=True)
class GridField:
    """Velocity sampled at xi_ij = 2 pi (i, j) / M; ``values`` has shape (M, M, 2)."""

    M: int
    values: np.ndarray = field(repr=False)


def basis_eval(k: WaveIndex, xi) -> np.ndarray:
    """e_k(xi) as a complex 2-vector."""
    if not isinstance(k, WaveIndex):
        k = WaveIndex(*k)
    phase = np.exp(1j * (k.k1 * xi[0] + k.k2 * xi[1]))
    return np.array(k.perp, dtype=float) / (2 * np.pi * k.norm) * phase


def min_grid(N: int) -> int:
    return 4 * N + 1


def _synthesize_coeffs(coeffs: np.ndarray, N: int, M: int, vector: bool = True) -> np.ndarray:
    """Grid values for a batch of half-lattice coefficient arrays (last axis = modes).

    Returns shape ``batch + (M, M, 2)`` for velocity fields, ``batch + (M, M)``
    for scalar fields expanded in exp(i k.xi) / (2 pi).
    """
    lat = lattice(N)
    batch = coeffs.shape[:-1]
    if vector:
        full = complete(coeffs)
        weights = np.stack([-lat.full_k2, lat.full_k1], axis=-1) / (2 * np.pi * np.concatenate([lat.norm, lat.norm]))[:, None]
        spectrum = np.zeros(batch + (M, M, 2), dtype=complex)
        amp = full[..., :, None] * weights
        spectrum[..., lat.full_k1 % M, lat.full_k2 % M, :] = amp
        grid = np.fft.ifft2(spectrum, axes=(-3, -2)) * (M * M)
    else:
        full = complete_scalar(coeffs)
        spectrum = np.zeros(batch + (M, M), dtype=complex)
        spectrum[..., lat.full_k1 % M, lat.full_k2 % M] = full / (2 * np.pi)
        grid = np.fft.ifft2(spectrum, axes=(-2, -1)) * (M * M)
    return grid


def synthesize(u: SpectralField, M: int | None = None) -> GridField:
    """Evaluate the Fourier series on the uniform M x M grid (M >= 4N + 1)."""
    M = min_grid(u.N) if M is None else M
    if M < min_grid(u.N):
        raise ValueError(f"grid too coarse: M={M} < 4N+1={min_grid(u.N)}")
    _check_finite(u.coeffs)
    grid = _synthesize_coeffs(u.coeffs, u.N, M)
    scale = max(float(np.max(np.abs(u.coeffs), initial=0.0)), np.finfo(float).tiny)
    residue = float(np.max(np.abs(grid.imag), initial=0.0))
    if residue > 1e-12 * scale:
        raise ArithmeticError(f"synthesized field not real: imaginary residue {residue:.3e}")
    return GridField(M, grid.real)


def lp_norm(grid: GridField, p: float) -> float:
    """Trapezoidal L_p norm of the Euclidean magnitude over the torus."""
    if not p >= 1 or not np.isfinite(p):
        raise ValueError(f"p must satisfy 1 <= p < inf, got {p}")
    return float(_lp_norm_values(grid.values, p, grid.M))


def _lp_norm_values(values: np.ndarray, p: float, M: int) -> np.ndarray:
    """Batched L_p norm; ``values`` has trailing shape (M, M, 2)."""
    mag_sq = np.sum(values * values, axis=-1)
    if p == 2:
        integrand = mag_sq
    else:
        integrand = mag_sq ** (p / 2)
    h2 = (2 * np.pi / M) ** 2
    return (h2 * np.sum(integrand, axis=(-2, -1))) ** (1.0 / p)


def sobolev_norm(u: SpectralField, s: float) -> float:
    """H_2^s norm, sqrt(sum over the full lattice of |u_k|^2 |k|^(2s))."""
    _check_finite(u.coeffs)
    return float(np.sqrt(2.0 * np.sum(np.abs(u.coeffs) ** 2 * u.lattice.norm ** (2 * s))))


def sobolev_norm_sq_batch(coeffs: np.ndarray, N: int, s: float) -> np.ndarray:
    lat = lattice(N)
    return 2.0 * np.sum(np.abs(coeffs) ** 2 * lat.norm ** (2 * s), axis=-1)


def quadrature_grid(N: int, p: float) -> int:
    """Grid used for Besov blocks: exact for even integer p, 8N+1 otherwise."""
    if float(p).is_integer() and int(p) % 2 == 0:
        return max(min_grid(N), int(p) * N + 1)
    return 8 * N + 1


def besov_norm_batch(coeffs: np.ndarray, N: int, s: float, p: float, q: float, M: int | None = None) -> np.ndarray:
    """Dyadic-block Besov norm of every field in a batch (last axis = modes)."""
    if not (1 <= p < np.inf and 1 <= q < np.inf):
        raise ValueError(f"Besov exponents need 1 <= p, q < inf, got p={p}, q={q}")
    lat = lattice(N)
    M = quadrature_grid(N, p) if M is None else M
    coeffs = np.asarray(coeffs)
    total = np.zeros(coeffs.shape[:-1])
    for j in range(lat.dyadic_levels):
        mask = lat.block_mask(j)
        if not mask.any():
            continue
        block = np.where(mask, coeffs, 0)
        if not np.any(block):
            continue
        values = _synthesize_coeffs(block, N, M).real
        total = total + (2.0 ** (j * s) * _lp_norm_values(values, p, M)) ** q
    return total ** (1.0 / q)


def besov_norm(u: SpectralField, s: float, p: float, q: float, M: int | None = None) -> float:
    """(sum_j (2^(js) ||block_j u||_Lp)^q)^(1/q) with blocks 2^j <= |k| < 2^(j+1)."""
    _check_finite(u.coeffs)
    return float(besov_norm_batch(u.coeffs, u.N, s, p, q, M))


def enstrophy(u: SpectralField) -> float:
    """2 sum_{k in Z^2_+} |k|^2 |u_k|^2."""
    return float(2.0 * np.sum(u.lattice.norm_sq * np.abs(u.coeffs) ** 2))


def enstrophy_batch(coeffs: np.ndarray, N: int) -> np.ndarray:
    return 2.0 * np.sum(lattice(N).norm_sq * np.abs(coeffs) ** 2, axis=-1)


@dataclass(frozen=True)
class ScalarSpectrum:
    """Real scalar field sum_k c_k exp(i k.xi)/(2 pi), half lattice, c_{-k} = conj(c_k)."""

    N: int
    coeffs: np.ndarray = field(repr=False)

    def synthesize(self, M: int | None = None) -> np.ndarray:
        M = min_grid(self.N) if M is None else M
        return _synthesize_coeffs(np.asarray(self.coeffs), self.N, M, vector=False).real


def vorticity_and_stream(u: SpectralField) -> tuple[ScalarSpectrum, ScalarSpectrum]:
    """Vorticity w = curl u and stream function psi with u = grad_perp psi.

    In the orthonormal basis exp(i k.xi)/(2 pi): w_k = i|k| u_k and
    psi_k = -i u_k / |k|.
    """
    norm = u.lattice.norm
    omega = 1j * norm * u.coeffs
    psi = -1j * u.coeffs / norm
    return ScalarSpectrum(u.N, omega), ScalarSpectrum(u.N, psi)


def grad_perp_grid(psi: ScalarSpectrum, M: int | None = None) -> np.ndarray:
    """(-d2 psi, d1 psi) on the grid, by spectral differentiation."""
    lat = lattice(psi.N)
    M = min_grid(psi.N) if M is None else M
    c = np.asarray(psi.coeffs)
    d1 = ScalarSpectrum(psi.N, 1j * lat.k1 * c).synthesize(M)
    d2 = ScalarSpectrum(psi.N, 1j * lat.k2 * c).synthesize(M)
    return np.stack([-d2, d1], axis=-1)


def stokes_apply(u: SpectralField) -> SpectralField:
    """A u = sum_k |k|^2 u_k e_k."""
    return SpectralField(u.N, u.coeffs * u.lattice.norm_sq)


def heat_semigroup(u: SpectralField, t: float, nu: float = 1.0) -> SpectralField:
    """exp(-nu t A) u."""
    if t < 0:
        raise ValueError(f"negative time t={t}")
    if nu <= 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    if t == 0:
        return u
    return SpectralField(u.N, u.coeffs * np.exp(-nu * t * u.lattice.norm_sq))

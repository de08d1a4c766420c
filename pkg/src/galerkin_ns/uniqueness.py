"""Contraction machinery behind pathwise uniqueness, at Galerkin level.

The difference v = u - u~ of two solutions driven by the same noise solves

    v(t) = -int_0^t e^{-(t-tau) nu A} [B(u, v) + B(v, u~)](tau) dtau,

a linear Volterra map in v.  This module evaluates that map on sampled
paths, measures its norm on V_T = C([0,T]; B^{-s}_pq) cap L^alpha(0,T; B^a_pq),
fits the constants of the two time-power bounds and converts them into the
horizon T* on which the map is a contraction.  It also runs two truncations
of the stochastic system on shared noise and tracks their Besov distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rng
from .dynamics import GalerkinSystem, simulate
from .lattice import SpectralField, besov_norm, besov_norm_batch, lattice
from .measure import MeasureParams, mode_variances, sample_mu_nu
from .nonlinearity import bilinear_coeffs, bilinear_term


@dataclass(frozen=True)
class BesovParams:
    s: float
    a: float
    p: float
    q: float
    alpha: float

    @classmethod
    def reference(cls) -> "BesovParams":
        """p = q = alpha = 3, s = 1/6, a = 1/2."""
        return cls(Fraction(1, 6), Fraction(1, 2), 3, 3, 3)

    def floats(self) -> "BesovParams":
        return BesovParams(*(float(x) for x in (self.s, self.a, self.p, self.q, self.alpha)))

    @property
    def conjugate_alpha(self):
        return self.alpha / (self.alpha - 1)

    @property
    def lalpha_exponent(self):
        """Power of T in the L^alpha(B^a) bound: (1 - s - 2/p) / 2."""
        return (-self.s - Fraction(2) / self.p + 1) / 2 if _exact(self) else (-self.s - 2 / self.p + 1) / 2

    @property
    def sup_exponent(self):
        """Power of T in the C(B^-s) bound: ((a - 2/p - 1)/2) alpha/(alpha-1) + 1."""
        if _exact(self):
            return (self.a - Fraction(2) / self.p - 1) / 2 * Fraction(self.alpha) / (self.alpha - 1) + 1
        return (self.a - 2 / self.p - 1) / 2 * self.conjugate_alpha + 1

    @property
    def product_order(self):
        """Regularity index -s + a - 2/p - 1 at which B(u, v) is measured."""
        return -self.s + self.a - 2 / self.p - 1


def _exact(bp: BesovParams) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in (bp.s, bp.a, bp.p, bp.q, bp.alpha))


def validate_params(bp: BesovParams) -> list[str]:
    """Violated clauses of the admissibility conditions (empty list = valid)."""
    values = (bp.s, bp.a, bp.p, bp.q, bp.alpha)
    if not all(math.isfinite(float(x)) for x in values):
        raise ValueError("non-finite Besov parameters")
    if bp.alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {bp.alpha}")
    if bp.p < 1 or bp.q < 1:
        raise ValueError(f"p and q must be >= 1, got p={bp.p}, q={bp.q}")
    two_over_p = Fraction(2) / bp.p if _exact(bp) else 2 / bp.p
    violated = []
    if not 0 < bp.s:
        violated.append("0 < s")
    if not bp.s < bp.a:
        violated.append("s < a")
    if not bp.a < two_over_p:
        violated.append("a < 2/p")
    if not (bp.s + two_over_p + 1) / 2 < 1:
        violated.append("(s + 2/p + 1)/2 < 1")
    if not (-bp.a + two_over_p + 1) / 2 * bp.alpha / (bp.alpha - 1) < 1:
        violated.append("((-a + 2/p + 1)/2) alpha/(alpha-1) < 1")
    if not violated and not bp.p > 2:
        # implied by the clauses above whenever s > 0
        violated.append("p > 2")
    return violated


def t_star(C1: float, C2: float, N_T: float, bp: BesovParams) -> float:
    """Largest horizon with C1 T^e1 N_T <= 1/2 and C2 T^e2 N_T <= 1/2.

    e1 = (1 - s - 2/p)/2 pairs with the L^alpha(B^a) constant C1 and
    e2 = ((a - 2/p - 1)/2) alpha/(alpha-1) + 1 with the C(B^-s) constant C2.
    """
    if min(C1, C2, N_T) <= 0:
        raise ValueError("constants and N_T must be positive")
    e1, e2 = float(bp.lalpha_exponent), float(bp.sup_exponent)
    return min((1.0 / (2.0 * C1 * N_T)) ** (1.0 / e1), (1.0 / (2.0 * C2 * N_T)) ** (1.0 / e2))


def bilinear_estimate_probe(u: SpectralField, v: SpectralField, bp: BesovParams) -> float:
    """||B(u,v)||_{B^{-s+a-2/p-1}} / (||u||_{B^-s} ||v||_{B^a}) for one pair."""
    bp = bp.floats()
    den = besov_norm(u, -bp.s, bp.p, bp.q) * besov_norm(v, bp.a, bp.p, bp.q)
    if den == 0:
        raise ZeroDivisionError("zero field in bilinear estimate probe")
    return besov_norm(bilinear_term(u, v), bp.product_order, bp.p, bp.q) / den


def bilinear_estimate_batch(u: np.ndarray, v: np.ndarray, N: int, bp: BesovParams) -> np.ndarray:
    bp = bp.floats()
    num = besov_norm_batch(bilinear_coeffs(u, v, N), N, bp.product_order, bp.p, bp.q)
    return num / (besov_norm_batch(u, N, -bp.s, bp.p, bp.q) * besov_norm_batch(v, N, bp.a, bp.p, bp.q))


@dataclass(frozen=True)
class FieldPath:
    """Field values on the uniform grid t_n = n dt, n = 0..steps; coeffs shape (steps+1, n_modes)."""

    N: int
    dt: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] != lattice(self.N).size:
            raise ValueError(f"path coefficients must have shape (steps+1, {lattice(self.N).size})")
        object.__setattr__(self, "coeffs", c)

    @property
    def steps(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def T(self) -> float:
        return self.steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    @classmethod
    def frozen(cls, u: SpectralField, T: float, steps: int) -> "FieldPath":
        return cls(u.N, T / steps, np.repeat(u.coeffs[None, :], steps + 1, axis=0))

    def head(self, steps: int) -> "FieldPath":
        return FieldPath(self.N, self.dt, self.coeffs[: steps + 1])

    def __mul__(self, scalar) -> "FieldPath":
        return FieldPath(self.N, self.dt, self.coeffs * scalar)

    __rmul__ = __mul__

    def __add__(self, other: "FieldPath") -> "FieldPath":
        _check_grid(self, other)
        return FieldPath(self.N, self.dt, self.coeffs + other.coeffs)


def _check_grid(*paths: FieldPath):
    first = paths[0]
    for p in paths[1:]:
        if p.N != first.N or p.steps != first.steps or not math.isclose(p.dt, first.dt, rel_tol=1e-12):
            raise ValueError("paths do not share truncation and time grid")


def mild_map(v: FieldPath, u: FieldPath, u_tilde: FieldPath, nu: float = 1.0) -> FieldPath:
    """w(t) = -int_0^t e^{-(t-tau) nu A} [B(u, v) + B(v, u~)](tau) dtau.

    Left-endpoint integrand on each subinterval with the semigroup factor
    integrated exactly, i.e. w_{n+1} = e^{-z} w_n - (1 - e^{-z})/(nu|k|^2) F_n.
    """
    _check_grid(v, u, u_tilde)
    lat = lattice(v.N)
    forcing = bilinear_coeffs(u.coeffs[:-1], v.coeffs[:-1], v.N) + bilinear_coeffs(v.coeffs[:-1], u_tilde.coeffs[:-1], v.N)
    rate = nu * lat.norm_sq
    decay = np.exp(-rate * v.dt)
    weight = -np.expm1(-rate * v.dt) / rate
    out = np.zeros_like(v.coeffs)
    for n in range(v.steps):
        out[n + 1] = decay * out[n] - weight * forcing[n]
    return FieldPath(v.N, v.dt, out)


@dataclass(frozen=True)
class PathNorms:
    sup_neg: float     # max_n ||v_n||_{B^-s}
    lalpha_pos: float  # (sum_{n<steps} dt ||v_n||_{B^a}^alpha)^(1/alpha)

    @property
    def v_norm(self) -> float:
        return self.sup_neg + self.lalpha_pos


def path_norms(v: FieldPath, bp: BesovParams) -> PathNorms:
    """Discrete V_T norm pieces: max over the grid and left-endpoint L^alpha quadrature."""
    bp = bp.floats()
    neg = besov_norm_batch(v.coeffs, v.N, -bp.s, bp.p, bp.q)
    pos = besov_norm_batch(v.coeffs[:-1], v.N, bp.a, bp.p, bp.q)
    return PathNorms(float(neg.max()), float((v.dt * np.sum(pos**bp.alpha)) ** (1 / bp.alpha)))


def sup_norm(u: FieldPath, bp: BesovParams) -> float:
    bp = bp.floats()
    return float(besov_norm_batch(u.coeffs, u.N, -bp.s, bp.p, bp.q).max())


def probe_paths(N: int, steps: int, dt: float, count: int, seed: int, nu: float = 1.0) -> list[FieldPath]:
    """Random probe paths with v(0) = 0.

    Alternates mu_nu-like paths (independent draws per time) with paths whose
    spectrum sits in a single dyadic block and varies smoothly in time.
    """
    lat = lattice(N)
    sigma = np.sqrt(mode_variances(nu, N))
    out = []
    for i in range(count):
        idx = np.arange(steps + 1)[:, None]
        z = rng.complex_gaussian((idx, lat.k1[None, :], lat.k2[None, :], rng.TAG_PROBE), (seed, i))
        if i % 2 == 0:
            c = z * sigma
        else:
            j = (i // 2) % lat.dyadic_levels
            shape = np.sin(np.pi * (idx + 1) / (steps + 1)) + 0.5
            c = np.where(lat.block_mask(j), z[0] * sigma, 0) * shape
        c[0] = 0
        out.append(FieldPath(N, dt, c))
    return out


@dataclass(frozen=True)
class ContractionReport:
    T: float
    C1: float
    C2: float
    N_T: float
    T_star: float
    measured_factor: float
    probes: int
    sweep: tuple[float, ...] = ()

    @property
    def contracts(self) -> bool:
        return self.T <= self.T_star and self.measured_factor < 1


def _ratios(v: FieldPath, u: FieldPath, u_tilde: FieldPath, bp: BesovParams, nu: float):
    w = mild_map(v, u, u_tilde, nu)
    nv, nw = path_norms(v, bp), path_norms(w, bp)
    return w, nv, nw


def contraction_factor(u: FieldPath, u_tilde: FieldPath, bp: BesovParams, probes: int = 10, seed: int = 0,
                       nu: float = 1.0, power_steps: int = 3, sweep_levels: int = 4) -> ContractionReport:
    """Operator-norm estimate of the mild map on V_T plus the fitted horizon T*.

    ``measured_factor`` is the largest ||Phi v||_V / ||v||_V over random
    probes and a few power iterates of each.  C1 and C2 are the largest
    values of ||Phi v||_{L^alpha(B^a)} / (T'^e1 N_T ||v||_{L^alpha(B^a)}) and
    ||Phi v||_{C(B^-s)} / (T'^e2 N_T ||v||_{L^alpha(B^a)}) over the same probes
    restricted to the sub-horizons T' = T, T/2, ..., T/2^(sweep_levels-1).
    """
    if probes < 10:
        raise ValueError(f"need at least 10 probes, got {probes}")
    _check_grid(u, u_tilde)
    steps = u.steps
    if steps % 2 ** (sweep_levels - 1):
        raise ValueError("steps must be divisible by 2^(sweep_levels-1)")
    fbp = bp.floats()
    e1, e2 = float(bp.lalpha_exponent), float(bp.sup_exponent)
    N_T = sup_norm(u, fbp) + sup_norm(u_tilde, fbp)

    base = probe_paths(u.N, steps, u.dt, probes, seed, nu)
    if all(not np.any(p.coeffs) for p in base):
        raise ValueError("degenerate probes")
    factor, C1, C2 = 0.0, 0.0, 0.0
    sweep = []
    for level in range(sweep_levels):
        sub = steps // 2**level
        uu, ut = u.head(sub), u_tilde.head(sub)
        Tsub = sub * u.dt
        sweep.append(Tsub)
        for v in base:
            v = v.head(sub)
            for it in range(power_steps + 1):
                w, nv, nw = _ratios(v, uu, ut, fbp, nu)
                if nv.lalpha_pos == 0:
                    break
                C1 = max(C1, nw.lalpha_pos / (Tsub**e1 * N_T * nv.lalpha_pos))
                C2 = max(C2, nw.sup_neg / (Tsub**e2 * N_T * nv.lalpha_pos))
                if level == 0:
                    factor = max(factor, nw.v_norm / nv.v_norm)
                if not np.any(w.coeffs):
                    break
                v = w
    Ts = t_star(C1, C2, N_T, bp)
    return ContractionReport(u.T, C1, C2, N_T, Ts, factor, probes, tuple(sweep))


def find_contraction_horizon(u: SpectralField, u_tilde: SpectralField, bp: BesovParams, T0: float = 1.0,
                             steps: int = 32, probes: int = 10, seed: int = 0, nu: float = 1.0,
                             max_halvings: int = 40) -> ContractionReport:
    """Halve T from T0 until the measured T* covers it; frozen paths u, u~."""
    T = T0
    for _ in range(max_halvings):
        rep = contraction_factor(FieldPath.frozen(u, T, steps), FieldPath.frozen(u_tilde, T, steps), bp,
                                 probes=probes, seed=seed, nu=nu)
        if rep.T <= rep.T_star:
            return rep
        T = T / 2
    raise RuntimeError(f"no admissible horizon found down to T={T:g}")


def iterate_mild_map(v0: FieldPath, u: FieldPath, u_tilde: FieldPath, bp: BesovParams, iterations: int,
                     nu: float = 1.0) -> np.ndarray:
    """V_T norms of v0, Phi v0, Phi^2 v0, ..."""
    norms = [path_norms(v0, bp).v_norm]
    v = v0
    for _ in range(iterations):
        v = mild_map(v, u, u_tilde, nu)
        norms.append(path_norms(v, bp).v_norm)
    return np.array(norms)


def geometric_ratio(norms: np.ndarray) -> float:
    """Mean contraction per iteration, (||v_J|| / ||v_0||)^(1/J), over the nonzero prefix."""
    norms = np.asarray(norms)
    nz = np.flatnonzero(norms > 0)
    J = int(nz[-1]) if nz.size else 0
    if J == 0:
        return 0.0
    return float((norms[J] / norms[0]) ** (1.0 / J))


@dataclass(frozen=True)
class DivergenceCurve:
    N1: int
    N2: int
    seed: int
    times: np.ndarray
    distance: np.ndarray

    @property
    def max_distance(self) -> float:
        return float(self.distance.max())


def shared_noise_divergence(N1: int, N2: int, nu: float, T: float, dt: float, seed: int, bp: BesovParams,
                            stride: int = 10, member: int = 0) -> DivergenceCurve:
    """Run truncations N1 <= N2 from the same mu_nu draw on the same noise.

    The N1 initial condition is the restriction of the N2 draw (the sampler
    is keyed per mode).  Returns t -> ||u^{N2}(t) - u^{N1}(t)||_{B^-s_pq}
    with u^{N1} zero-padded to N2.
    """
    if N1 > N2:
        raise ValueError(f"need N1 <= N2, got {N1} > {N2}")
    fbp = bp.floats()
    x2 = sample_mu_nu(MeasureParams(nu, N2, seed), member)
    x1 = x2.restrict(N1)
    big = simulate(x2, GalerkinSystem(nu, N2), T, dt, seed, stride=stride, member=member)
    if N1 == N2:
        small_coeffs = np.array([s.coeffs for s in big.states])
    else:
        small = simulate(x1, GalerkinSystem(nu, N1), T, dt, seed, stride=stride, member=member)
        small_coeffs = np.array([s.embed(N2).coeffs for s in small.states])
    diff = np.array([s.coeffs for s in big.states]) - small_coeffs
    dist = besov_norm_batch(diff, N2, -fbp.s, fbp.p, fbp.q)
    return DivergenceCurve(N1, N2, seed, big.times, dist)

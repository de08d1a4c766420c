"""Counter-based Gaussian streams.

Every random number in the package is a pure function of an integer key and
an integer counter, so a draw for mode ``k`` at step ``n`` never depends on
which other modes or steps were drawn before it.  The generator is
Philox4x64-10, the same bijection used by :class:`numpy.random.Philox`, but
evaluated elementwise over arrays of counters so that a whole ensemble step
costs a handful of vectorized integer operations.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_ROUNDS = 10

# domain tags kept in the fourth counter word
TAG_MEASURE = 1
TAG_NOISE = 2
TAG_PROBE = 3


def _u64(x) -> np.ndarray:
    """Two's-complement view of (possibly negative) integers as uint64."""
    if isinstance(x, (int, np.integer)):
        return np.asarray(int(x) % 2**64, dtype=np.uint64)
    arr = np.asarray(x)
    if arr.dtype == np.uint64:
        return arr
    return arr.astype(np.int64).astype(np.uint64)


def _mulhilo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    p0 = a_lo * b_lo
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    p3 = a_hi * b_hi
    mid = (p0 >> _S32) + (p1 & _LO32) + (p2 & _LO32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    return hi, a * b


def philox4x64(counter, key) -> tuple[np.ndarray, ...]:
    """Philox4x64-10 block function.

    ``counter`` is a 4-tuple and ``key`` a 2-tuple of integer arrays (they
    broadcast against each other).  Returns four uint64 arrays.
    """
    with np.errstate(over="ignore"):
        c0, c1, c2, c3, k0, k1 = np.broadcast_arrays(*[_u64(c) for c in counter], *[_u64(k) for k in key])
        for r in range(_ROUNDS):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _unit_open(x: np.ndarray) -> np.ndarray:
    # 53-bit float in (0, 1]
    return ((x >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def gaussian_pair(counter, key) -> tuple[np.ndarray, np.ndarray]:
    """Two independent standard normals per counter (Box-Muller)."""
    x0, x1, _, _ = philox4x64(counter, key)
    radius = np.sqrt(-2.0 * np.log(_unit_open(x0)))
    angle = 2.0 * np.pi * _unit_open(x1)
    return radius * np.cos(angle), radius * np.sin(angle)


def complex_gaussian(counter, key) -> np.ndarray:
    """Circular complex normal with E|z|^2 = 1."""
    g1, g2 = gaussian_pair(counter, key)
    return (g1 + 1j * g2) * np.sqrt(0.5)

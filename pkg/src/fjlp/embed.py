"""The embedding pipeline scale * A D1 H D2 H D3 and its planner.

A transform is fully determined by (d, k, p, seed): the sign diagonals come
from a SHA-256 counter stream keyed by (seed, stream, block), so transforms
serialize as dimensions plus seed and reproduce bit-identically everywhere.
The two H stages flatten the input (driving its l4 norm toward d**-0.25), the
structured 4-wise independent A projects, and k**(-1/p) / beta_p normalizes so
that the target-space lp norm of a unit vector concentrates around 1.
"""

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import wht
from .fourwise import fourwise_build, fourwise_multiply_fast

__all__ = [
    "DEFAULT_C0",
    "MomentConstants",
    "moment_constants",
    "beta_p",
    "required_k",
    "next_power_of_4",
    "Transform",
    "plan",
    "apply",
    "apply_set",
    "GaussianBaseline",
    "gaussian_baseline",
    "gaussian_norm_samples",
]

# Conservative published constant for the non-uniform Berry-Esseen bound; the
# moment checks parameterize on it because only its existence is used.
DEFAULT_C0 = 30.84

_MASK64 = (1 << 64) - 1


def beta_p(p):
    """(E|Z|^p)^(1/p) for standard Gaussian Z: (2^(p/2) Gamma((p+1)/2) / sqrt(pi))^(1/p)."""
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    log_moment = 0.5 * p * math.log(2.0) + math.lgamma(0.5 * (p + 1.0)) - 0.5 * math.log(math.pi)
    return math.exp(log_moment / p)


@dataclass(frozen=True)
class MomentConstants:
    p: float
    beta: float
    c0: float


def moment_constants(p, c0=DEFAULT_C0):
    return MomentConstants(p=p, beta=beta_p(p), c0=c0)


def required_k(n, eps, rho, c0=DEFAULT_C0):
    """Smallest target dimension guaranteeing distortion eps for n points
    with failure probability rho: ceil(eps**-2 * max{50 C0, 216 ln(6 n^2 / rho)})."""
    if n < 2:
        raise ValueError("need at least 2 points")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    return math.ceil(max(50.0 * c0, 216.0 * math.log(6.0 * n * n / rho)) / (eps * eps))


def next_power_of_4(n):
    p = 1
    while p < n:
        p <<= 2
    return p


def _sign_stream(seed, stream, n):
    """n signs in {-1.0, +1.0}: bit b of the stream is bit (b mod 256) of
    SHA-256(seed, stream, b // 256), little-endian bit order within the digest."""
    nblocks = (n + 255) // 256
    buf = bytearray()
    for blk in range(nblocks):
        buf += hashlib.sha256(struct.pack("<QIQ", seed & _MASK64, stream, blk)).digest()
    bits = np.unpackbits(np.frombuffer(bytes(buf), dtype=np.uint8), bitorder="little")[:n]
    return 1.0 - 2.0 * bits.astype(np.float64)


@dataclass(eq=False)
class Transform:
    """A fully planned embedding; immutable and safe to share across threads."""

    d_orig: int
    d_pad: int
    k: int
    p: float
    seed: int
    diag1: np.ndarray
    diag2: np.ndarray
    diag3: np.ndarray
    A: object
    scale: float
    within_theory: bool  # k <= d_pad**(1/4)

    def apply(self, x):
        return apply(self, x)


def plan(d, k, p, seed, strict=True):
    """Plan a transform: pad d to a power of 4, build A, derive the diagonals.

    Strict mode (default) rejects k above d_pad**(1/4), the regime the tail
    guarantee needs; the construction itself only exists for k <= sqrt(d_pad)-1
    and violating that is always fatal.
    """
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    beta = beta_p(p)  # validates p
    d_pad = max(4, next_power_of_4(d))
    kmax = (1 << ((d_pad.bit_length() - 1) // 2)) - 1
    if k > kmax:
        raise ValueError(f"k = {k} exceeds the construction limit sqrt(d_pad)-1 = {kmax}")
    within_theory = k**4 <= d_pad
    if strict and not within_theory:
        raise ValueError(
            f"strict mode: k = {k} exceeds d_pad**(1/4) = {d_pad ** 0.25:.6g}; "
            "pass strict=False to override"
        )
    A = fourwise_build(k, d_pad)
    seed = int(seed) & _MASK64
    diags = [_sign_stream(seed, s, d_pad) for s in (1, 2, 3)]
    scale = k ** (-1.0 / p) / beta
    return Transform(d, d_pad, k, float(p), seed, diags[0], diags[1], diags[2], A, scale, within_theory)


def _apply_padded(T, xp):
    """Pipeline on already-padded rows (..., d_pad); used by the trial harness too."""
    y = xp * T.diag3
    y = wht.wht_full(y)
    y *= T.diag2
    y = wht.wht_full(y)
    y *= T.diag1
    return T.scale * fourwise_multiply_fast(T.A, y)


def apply(T, x):
    """Embed one vector (or a stack along the last axis): scale * A D1 H D2 H D3 x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != T.d_orig:
        raise ValueError(f"vector length {x.shape[-1]} != planned d = {T.d_orig}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    if T.d_pad == T.d_orig:
        xp = x
    else:
        xp = np.zeros(x.shape[:-1] + (T.d_pad,), dtype=np.float64)
        xp[..., : T.d_orig] = x
    return _apply_padded(T, xp)


def apply_set(T, X):
    """Embed a list of vectors, preserving order."""
    return [apply(T, x) for x in X]


class GaussianBaseline:
    """Dense k x d Gaussian transform scaled by k**(-1/p)/beta_p.

    For any unit x the image coordinates are iid scaled standard normals, so
    E || G x ||_p^p = 1 exactly; the structured pipeline is tested against it.
    """

    def __init__(self, d, k, p, seed, max_entries=1 << 26):
        if k * d > max_entries:
            raise ValueError(f"dense {k}x{d} Gaussian exceeds the {max_entries}-entry budget")
        self.d = d
        self.k = k
        self.p = float(p)
        self.seed = seed
        self.scale = k ** (-1.0 / p) / beta_p(p)
        self.matrix = np.random.default_rng(seed).standard_normal((k, d))

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d:
            raise ValueError(f"vector length {x.shape[-1]} != d = {self.d}")
        return self.scale * (x @ self.matrix.T)

    def __call__(self, x):
        return self.apply(x)


def gaussian_baseline(d, k, p, seed, max_entries=1 << 26):
    return GaussianBaseline(d, k, p, seed, max_entries=max_entries)


def gaussian_norm_samples(k, p, trials, seed):
    """Samples of ||G x||_p for unit x over fresh Gaussian draws.

    By rotation invariance G x has iid N(0, scale^2) coordinates for every unit
    x, so one k-vector of normals per trial reproduces the dense baseline's
    norm distribution exactly without drawing k*d entries per trial.
    """
    scale = k ** (-1.0 / p) / beta_p(p)
    g = np.random.default_rng(seed).standard_normal((trials, k))
    return scale * np.sum(np.abs(g) ** p, axis=1) ** (1.0 / p)

"""Fast Walsh-Hadamard transforms: normalized, unnormalized, and partial.

The orthonormal transform is the recursive +-pattern matrix with one 1/sqrt(2)
per level; all per-level scalings are folded into a single final d**-0.5 so the
unnormalized and normalized variants share one exact butterfly.
"""

import numpy as np

__all__ = ["wht_full", "wht_unnormalized", "wht_partial"]


def _checked_vector(x):
    a = np.array(x, dtype=np.float64, copy=True)
    if a.ndim == 0:
        raise ValueError("expected a vector, got a scalar")
    d = a.shape[-1]
    if d <= 0 or d & (d - 1):
        raise ValueError(f"transform length must be a power of 2, got {d}")
    if not np.all(np.isfinite(a)):
        raise ValueError("input contains non-finite entries")
    return a


def _checked_outputs(outputs, d):
    idx = np.atleast_1d(np.asarray(outputs, dtype=np.int64))
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("outputs must be a non-empty 1-D index set")
    if idx[0] < 0 or idx[-1] >= d or np.any(idx >= d) or np.any(idx < 0):
        raise ValueError("output index out of range")
    if idx.size > 1 and np.any(np.diff(idx) <= 0):
        raise ValueError("outputs must be strictly increasing (no duplicates)")
    return idx


def _butterfly(a):
    """In-place unnormalized radix-2 butterflies along the last axis."""
    shape = a.shape
    d = shape[-1]
    h = 1
    while h < d:
        v = a.reshape(shape[:-1] + (d // (2 * h), 2, h))
        top = v[..., 0, :].copy()
        np.add(top, v[..., 1, :], out=v[..., 0, :])
        np.subtract(top, v[..., 1, :], out=v[..., 1, :])
        h *= 2
    return a


def _partial_unnormalized(a, idx):
    """Unnormalized WHT outputs at sorted positions ``idx``, along the last axis.

    Block decomposition H_d = H_B (x) H_(d/B) with B the smallest power of two
    >= len(idx), splitting an index u into (u_hi, u_lo) = (u // (d/B), u % (d/B)).
    Butterflying over the high axis costs O(d log B) on contiguous length-(d/B)
    slabs; each requested output u is then one signed sum over its row's d/B
    entries with signs (-1)**popcount(u_lo AND w_lo), O(r d/B) <= O(d) total.
    """
    d = a.shape[-1]
    r = idx.size
    B = 1
    while B < r:
        B *= 2
    B = min(B, d)
    nb = d // B
    v = np.array(a.reshape(a.shape[:-1] + (B, nb)), copy=True)
    h = 1
    while h < B:
        z = v.reshape(v.shape[:-2] + (B // (2 * h), 2, h, nb))
        top = z[..., 0, :, :].copy()
        np.add(top, z[..., 1, :, :], out=z[..., 0, :, :])
        np.subtract(top, z[..., 1, :, :], out=z[..., 1, :, :])
        h *= 2
    q = (idx // nb).astype(np.int64)
    lo = (idx % nb).astype(np.uint64)
    cols = np.arange(nb, dtype=np.uint64)
    signs = 1.0 - 2.0 * (np.bitwise_count(lo[:, None] & cols[None, :]) & 1)  # (r, nb)
    return np.einsum("...jn,jn->...j", v[..., q, :], signs)


def wht_full(x):
    """Orthonormal Walsh-Hadamard transform of a power-of-two length vector.

    Also accepts stacks of vectors (transform applied along the last axis).
    """
    a = _checked_vector(x)
    _butterfly(a)
    a *= 1.0 / np.sqrt(a.shape[-1])
    return a


_DENSE_H_CACHE = {}


def _dense_h(s):
    """Unnormalized +-1 Hadamard matrix of side s (Sylvester order)."""
    H = _DENSE_H_CACHE.get(s)
    if H is None:
        H = np.array([[1.0]])
        while H.shape[0] < s:
            H = np.block([[H, H], [H, -H]])
        _DENSE_H_CACHE[s] = H
    return H


def _wht_full_gemm(X):
    """Normalized WHT along the last axis via the split H_d = H_s (x) H_s.

    For power-of-4 lengths this routes the work through two dense
    matrix-matrix products, which is much faster than the butterfly for large
    trial batches but is only reproducible per BLAS build, not bit-identical
    to wht_full; the Monte-Carlo harness uses it, the public transforms do not.
    """
    d = X.shape[-1]
    m = d.bit_length() - 1
    if m % 2 or d < 4096:
        return _butterfly(np.array(X, dtype=np.float64, copy=True)) * (1.0 / np.sqrt(d))
    s = 1 << (m // 2)
    H = _dense_h(s)
    V = X.reshape(X.shape[:-1] + (s, s))
    V = np.matmul(V, H)  # low half of the index bits
    V = np.matmul(H, V)  # high half
    return V.reshape(X.shape) * (1.0 / np.sqrt(d))


def wht_unnormalized(x):
    """WHT with +-1 matrix entries: output[u] = sum_w (-1)**popcount(u & w) x[w]."""
    return _butterfly(_checked_vector(x))


def wht_partial(x, outputs):
    """Normalized WHT restricted to the sorted index set ``outputs``.

    Costs O(d log r + d) arithmetic for r requested outputs instead of the
    O(d log d) of the full transform.
    """
    a = _checked_vector(x)
    d = a.shape[-1]
    idx = _checked_outputs(outputs, d)
    out = _partial_unnormalized(a, idx)
    out *= 1.0 / np.sqrt(d)
    return out

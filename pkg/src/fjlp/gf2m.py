"""Arithmetic in GF(2^m) on bit-packed polynomials.

Elements are Python ints whose bit i is the coefficient of x**i. A FieldSpec
fixes the reduction modulus plus two precomputed linearizations of the trace:
``trace_mask`` (one AND + popcount per trace evaluation) and the trace-form
index map sigma with (-1)**Tr(u*v) == (-1)**popcount(u & sigma(v)).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["FieldSpec", "field_new", "gf_mul", "gf_cube", "trace", "form_index"]

_FORM_MAP_MAX_DEGREE = 16  # full sigma table above this would not fit in memory


def _poly_degree(p):
    return p.bit_length() - 1


def _poly_mod(a, mod):
    dm = _poly_degree(mod)
    while a.bit_length() - 1 >= dm:
        a ^= mod << (a.bit_length() - 1 - dm)
    return a


def _poly_mul(a, b):
    c = 0
    while a:
        if a & 1:
            c ^= b
        a >>= 1
        b <<= 1
    return c


def _poly_mulmod(a, b, mod):
    return _poly_mod(_poly_mul(a, b), mod)


def _poly_gcd(a, b):
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def _is_irreducible(f):
    m = _poly_degree(f)
    if m < 1:
        return False
    if m == 1:
        return True
    if not f & 1:
        return False  # divisible by x
    if m <= _FORM_MAP_MAX_DEGREE:
        # exhaustive trial division by every polynomial of degree 1..m/2
        for g in range(2, 1 << (m // 2 + 1)):
            if _poly_mod(f, g) == 0:
                return False
        return True
    # Rabin's test: x**(2**m) == x (mod f) and gcd(x**(2**(m/q)) - x, f) = 1
    # for every prime divisor q of m.
    def x_to_pow2(e):
        t = 0b10
        for _ in range(e):
            t = _poly_mulmod(t, t, f)
        return t

    if x_to_pow2(m) != 0b10:
        return False
    q = 2
    mm = m
    primes = set()
    while mm > 1:
        if mm % q == 0:
            primes.add(q)
            while mm % q == 0:
                mm //= q
        q += 1
    for p in primes:
        if _poly_gcd(x_to_pow2(m // p) ^ 0b10, f) != 1:
            return False
    return True


@dataclass(eq=False)
class FieldSpec:
    """Immutable description of GF(2^degree) and its trace linearizations."""

    degree: int
    modulus: int
    trace_mask: int
    sigma_basis: tuple  # sigma(2**j) for j < degree; sigma is GF(2)-linear
    form_map: np.ndarray | None = field(default=None, repr=False)

    @property
    def order(self):
        return 1 << self.degree


def _check_element(F, a):
    if not 0 <= a < F.order:
        raise ValueError(f"element {a} out of range for GF(2^{F.degree})")


def gf_mul(F, a, b):
    """Carry-less product reduced modulo the field polynomial."""
    _check_element(F, a)
    _check_element(F, b)
    return _poly_mulmod(a, b, F.modulus)


def gf_cube(F, a):
    _check_element(F, a)
    sq = _poly_mulmod(a, a, F.modulus)
    return _poly_mulmod(sq, a, F.modulus)


def _trace_direct(F, a):
    # Tr(a) = a + a**2 + a**4 + ... over the field; the sum lies in {0, 1}
    acc = a
    t = a
    for _ in range(F.degree - 1):
        t = _poly_mulmod(t, t, F.modulus)
        acc ^= t
    if acc not in (0, 1):
        raise AssertionError("trace escaped the prime subfield; bad modulus")
    return acc


def trace(F, a):
    """Tr(a) in {0,1} via the precomputed mask: parity of popcount(a & mask)."""
    _check_element(F, a)
    return (a & F.trace_mask).bit_count() & 1


def form_index(F, v):
    """sigma(v): the mask with (-1)**Tr(u*v) == (-1)**popcount(u & sigma(v))."""
    _check_element(F, v)
    if F.form_map is not None:
        return int(F.form_map[v])
    w = 0
    j = 0
    while v:
        if v & 1:
            w ^= F.sigma_basis[j]
        v >>= 1
        j += 1
    return w


def field_new(m):
    """GF(2^m) with the lexicographically smallest irreducible modulus.

    The scan requires a nonzero constant term (for m >= 2 irreducibility
    forces it; for m = 1 it selects x + 1), so the choice is deterministic
    across platforms without a shipped polynomial table.
    """
    if not 1 <= m <= 32:
        raise ValueError(f"field degree must be in [1, 32], got {m}")
    modulus = None
    for f in range((1 << m) | 1, 1 << (m + 1), 2):
        if _is_irreducible(f):
            modulus = f
            break
    if modulus is None:  # every degree has an irreducible polynomial
        raise AssertionError(f"no irreducible polynomial of degree {m} found")

    F = FieldSpec(degree=m, modulus=modulus, trace_mask=0, sigma_basis=())
    mask = 0
    for i in range(m):
        if _trace_direct(F, 1 << i):
            mask |= 1 << i
    F.trace_mask = mask
    # bit i of sigma(v) is Tr(2**i * v)
    basis = []
    for j in range(m):
        w = 0
        for i in range(m):
            if (( _poly_mulmod(1 << i, 1 << j, modulus)) & mask).bit_count() & 1:
                w |= 1 << i
        basis.append(w)
    F.sigma_basis = tuple(basis)
    if m <= _FORM_MAP_MAX_DEGREE:
        fm = np.zeros(1 << m, dtype=np.uint32)
        for j in range(m):  # subset-XOR fill exploiting linearity of sigma
            step = 1 << j
            fm[step : 2 * step] = fm[:step] ^ np.uint32(basis[j])
        F.form_map = fm
    return F

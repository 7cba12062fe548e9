"""Desk-scale machinery behind the dimension lower bound for arbitrary norms.

A hard family packs d random size-s subsets into the point set
P = {0, e_1..e_d, y_S1..y_Sd} with y_S = s**-0.5 * sum_{j in S} e_j. The
in/out distances ||e_j - y_S||_2 differ by at least 8*eps once
s = floor(1 / (128 eps^2)), so any map that preserves Euclidean distances up
to (1 +- eps) in the target norm lets the subsets be recovered from images
rounded to an eps-cover: the encoding is injective and its bit length caps
how many geometrically distinct families fit in R^k.

Covers are implicit coordinate lattices (never materialized): rank/unrank of
lattice points inside the radius-2 ball gives each representative a
ceil(log2 |N|)-bit code. The roundtrip demonstrator fixes the Euclidean norm
on the target side, with spacing 2*eps/sqrt(k) so one rounding moves a point
by at most eps; the standalone ``cover_round`` keeps the max-coordinate
convention with spacing 2*eps.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HardFamily",
    "hard_family_build",
    "SeparationResult",
    "separation_intervals",
    "CoverCode",
    "cover_round",
    "Encoding",
    "DecodingAmbiguityError",
    "encode",
    "decode_subsets",
    "family_images",
    "lower_bound_scale",
]

EPS_MAX = 1.0 / math.sqrt(128.0)  # s >= 1 requires eps <= 1/sqrt(128)


def subset_size(eps):
    if not 0.0 < eps <= EPS_MAX + 1e-12:
        raise ValueError(f"eps must lie in (0, 1/sqrt(128)], got {eps}")
    return int(1.0 / (128.0 * eps * eps) + 1e-9)


@dataclass(eq=False)
class HardFamily:
    """d size-s subsets and the implied (2d+1)-point set in R^d."""

    d: int
    eps: float
    s: int
    subsets: tuple  # d sorted tuples of s indices each

    @property
    def n_points(self):
        return 2 * self.d + 1

    def basis_point(self, j):
        e = np.zeros(self.d)
        e[j] = 1.0
        return e

    def subset_point(self, i):
        y = np.zeros(self.d)
        y[list(self.subsets[i])] = self.s**-0.5
        return y

    def points(self):
        """All n = 2d+1 points: origin, basis vectors, subset vectors."""
        yield np.zeros(self.d)
        for j in range(self.d):
            yield self.basis_point(j)
        for i in range(self.d):
            yield self.subset_point(i)


def hard_family_build(d, eps, seed):
    """Draw d uniformly random size-s subsets, s = floor(1 / (128 eps^2))."""
    s = subset_size(eps)
    if s > d:
        raise ValueError(f"subset size s = {s} exceeds the dimension d = {d}")
    rng = np.random.default_rng(seed)
    subsets = tuple(tuple(sorted(rng.choice(d, size=s, replace=False).tolist())) for _ in range(d))
    return HardFamily(d=d, eps=eps, s=s, subsets=subsets)


@dataclass(frozen=True)
class SeparationResult:
    s: int
    eps: float
    d_in: float
    d_out: float
    in_interval: tuple
    out_interval: tuple
    disjoint: bool
    gap: float
    tau: float | None
    meets_8eps: bool


def separation_intervals(s, eps):
    """Perturbed in/out distance intervals and the separating threshold.

    d_in = sqrt(2 - 2/sqrt(s)) and d_out = sqrt(2) are the source distances
    ||e_j - y_S||_2 for j in / not in S; a distortion-eps map plus eps-accurate
    representatives lands in [(1 -+ eps) d -+ 2 eps]. When the two intervals are
    disjoint the gap midpoint tau separates membership; d_out - d_in >= 8 eps
    is the sufficient condition the choice of s guarantees.
    """
    if s < 1:
        raise ValueError(f"subset size must be at least 1, got {s}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    d_in = math.sqrt(2.0 - 2.0 / math.sqrt(s))
    d_out = math.sqrt(2.0)
    in_iv = ((1.0 - eps) * d_in - 2.0 * eps, (1.0 + eps) * d_in + 2.0 * eps)
    out_iv = ((1.0 - eps) * d_out - 2.0 * eps, (1.0 + eps) * d_out + 2.0 * eps)
    gap = out_iv[0] - in_iv[1]
    disjoint = gap > 0.0
    return SeparationResult(
        s=s,
        eps=eps,
        d_in=d_in,
        d_out=d_out,
        in_interval=in_iv,
        out_interval=out_iv,
        disjoint=disjoint,
        gap=gap,
        tau=(in_iv[1] + out_iv[0]) / 2.0 if disjoint else None,
        meets_8eps=(d_out - d_in) >= 8.0 * eps,
    )


class CoverCode:
    """Implicit lattice cover of the radius-2 ball with exact point ranking.

    norm="max": spacing 2*eps per coordinate, covering radius eps in the
    max-coordinate norm; the lattice restricted to the ball is a box, so
    ranking is mixed-radix arithmetic.

    norm="l2": spacing 2*eps/sqrt(k), covering radius eps in the Euclidean
    norm; lattice points with sum m_i^2 <= budget are counted exactly by
    convolving per-axis squared-value histograms, and the same tables rank
    and unrank points lexicographically. |N| stays exact in big integers; an
    int64 fast path is used when it fits.
    """

    def __init__(self, k, eps, norm="l2"):
        if k < 1:
            raise ValueError("k must be positive")
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        if norm not in ("l2", "max"):
            raise ValueError(f"unknown norm {norm!r}")
        self.k = k
        self.eps = eps
        self.norm = norm
        if norm == "max":
            self.spacing = 2.0 * eps
            # largest |m| that nearest-rounding of a radius-2 point can produce
            self.m_max = int(math.ceil(2.0 / self.spacing - 0.5))
            self.n_points = (2 * self.m_max + 1) ** k
            self._cum = None
        else:
            self.spacing = 2.0 * eps / math.sqrt(k)
            # rounded images of the 2-ball have norm <= 2 + eps
            self.budget = int(((2.0 + eps) / self.spacing) ** 2 + 1e-9)
            self.m_max = int(math.isqrt(self.budget))
            g = [0] * (self.budget + 1)
            g[0] = 1
            for q in range(1, self.m_max + 1):
                g[q * q] = 2
            # cum[j][t]: lattice points of dimension j with sum of squares <= t
            exact = [1] + [0] * self.budget
            cums = [[1] * (self.budget + 1)]
            for _ in range(k):
                new = [0] * (self.budget + 1)
                for t2 in range(0, self.budget + 1):
                    w = g[t2]
                    if w:
                        for t in range(t2, self.budget + 1):
                            new[t] += w * exact[t - t2]
                exact = new
                acc = 0
                cum = [0] * (self.budget + 1)
                for t in range(self.budget + 1):
                    acc += exact[t]
                    cum[t] = acc
                cums.append(cum)
            self.n_points = cums[k][self.budget]
            self._cum = cums
            self._cum_np = None
            if self.n_points < 2**62:
                self._cum_np = [np.array(c, dtype=np.int64) for c in cums]
        self.bits_per_point = max(1, math.ceil(math.log2(self.n_points)))

    @property
    def volumetric_bound(self):
        """(6/eps)^k, the classical cover-size bound reported for comparison."""
        return (6.0 / self.eps) ** self.k

    def round_coords(self, point):
        """Nearest lattice coordinates, ties toward -inf; clamps into the ball."""
        point = np.asarray(point, dtype=np.float64)
        if point.shape != (self.k,):
            raise ValueError(f"expected a point in R^{self.k}")
        coords = np.ceil(point / self.spacing - 0.5).astype(np.int64)
        clamped = False
        if self.norm == "max":
            out = np.abs(coords) > self.m_max
            if np.any(out):
                clamped = True
                coords = np.clip(coords, -self.m_max, self.m_max)
        else:
            for _ in range(3):
                if int(np.sum(coords.astype(object) ** 2)) <= self.budget:
                    break
                clamped = True
                point = point * (2.0 / np.linalg.norm(point)) * (1.0 - 1e-12)
                coords = np.ceil(point / self.spacing - 0.5).astype(np.int64)
            else:
                raise AssertionError("could not clamp point into the covered ball")
        return coords, clamped

    def lattice_point(self, coords):
        return np.asarray(coords, dtype=np.float64) * self.spacing

    def rank(self, coords):
        """Lexicographic index of an in-ball lattice point, in [0, n_points)."""
        coords = np.asarray(coords, dtype=np.int64)
        if self.norm == "max":
            r = 0
            radix = 2 * self.m_max + 1
            for m in coords:
                r = r * radix + (int(m) + self.m_max)
            return r
        r = 0
        budget = self.budget
        for i, m in enumerate(coords):
            m = int(m)
            rem = self.k - 1 - i
            lo = -self.m_max
            cand = np.arange(lo, m, dtype=np.int64)
            sq = cand * cand
            ok = sq <= budget
            if np.any(ok):
                if self._cum_np is not None:
                    r += int(np.sum(self._cum_np[rem][budget - sq[ok]]))
                else:
                    cum = self._cum[rem]
                    r += sum(cum[budget - int(q)] for q in sq[ok])
            budget -= m * m
            if budget < 0:
                raise ValueError("coordinates outside the covered ball")
        return r

    def unrank(self, r):
        """Inverse of rank."""
        if not 0 <= r < self.n_points:
            raise ValueError(f"rank {r} out of range")
        if self.norm == "max":
            radix = 2 * self.m_max + 1
            coords = []
            for i in range(self.k - 1, -1, -1):
                coords.append(r // radix**i - self.m_max)
                r %= radix**i
            return np.array(coords, dtype=np.int64)
        coords = []
        budget = self.budget
        for i in range(self.k):
            rem = self.k - 1 - i
            cand = np.arange(-self.m_max, self.m_max + 1, dtype=np.int64)
            sq = cand * cand
            ok = sq <= budget
            cand = cand[ok]
            if self._cum_np is not None:
                counts = self._cum_np[rem][budget - sq[ok]]
                cs = np.cumsum(counts)
                pos = int(np.searchsorted(cs, r, side="right"))
                m = int(cand[pos])
                r -= int(cs[pos - 1]) if pos else 0
            else:
                cum = self._cum[rem]
                m = None
                for c in cand:
                    cnt = cum[budget - int(c) * int(c)]
                    if r < cnt:
                        m = int(c)
                        break
                    r -= cnt
                if m is None:
                    raise AssertionError("unrank ran out of candidates")
            coords.append(m)
            budget -= m * m
        return np.array(coords, dtype=np.int64)


_COVER_CACHE = {}


def _cover_for(k, eps, norm):
    key = (k, round(eps, 12), norm)
    if key not in _COVER_CACHE:
        _COVER_CACHE[key] = CoverCode(k, eps, norm)
    return _COVER_CACHE[key]


def cover_round(point, eps):
    """Round to the max-coordinate lattice with spacing 2*eps.

    Returns (lattice point, rank); each coordinate moves by at most eps for
    points of the radius-2 ball, ties toward -inf. Points outside the covered
    box are clamped onto it.
    """
    point = np.asarray(point, dtype=np.float64)
    cover = _cover_for(point.shape[0], eps, "max")
    coords, _clamped = cover.round_coords(point)
    return cover.lattice_point(coords), cover.rank(coords)


class DecodingAmbiguityError(Exception):
    """A representative distance fell inside the forbidden gap: the supplied
    map most likely violated the distortion precondition."""


@dataclass(eq=False)
class Encoding:
    """Concatenated fixed-width ranks of all 2d representatives."""

    bits: int
    length: int
    bits_per_point: int
    count: int
    k: int
    eps: float
    norm: str
    clamped: bool = field(default=False)

    def ranks(self):
        mask = (1 << self.bits_per_point) - 1
        return [
            (self.bits >> (self.bits_per_point * (self.count - 1 - i))) & mask
            for i in range(self.count)
        ]

    def flip_bit(self, position):
        """Copy with one bit flipped (for corruption experiments)."""
        if not 0 <= position < self.length:
            raise ValueError("bit position out of range")
        return Encoding(
            bits=self.bits ^ (1 << (self.length - 1 - position)),
            length=self.length,
            bits_per_point=self.bits_per_point,
            count=self.count,
            k=self.k,
            eps=self.eps,
            norm=self.norm,
            clamped=self.clamped,
        )


def encode(family, images, eps, norm="l2"):
    """Encode the 2d image points (f(0) already subtracted) into L bits.

    L = 2d * ceil(log2 |N|); point order is f(e_1)..f(e_d), f(y_S1)..f(y_Sd),
    first point in the most significant block.
    """
    images = np.asarray(images, dtype=np.float64)
    expected = 2 * family.d
    if images.ndim != 2 or images.shape[0] != expected:
        raise ValueError(f"expected {expected} image points, got {images.shape}")
    cover = _cover_for(images.shape[1], eps, norm)
    bits = 0
    clamped = False
    for row in images:
        coords, cl = cover.round_coords(row)
        clamped |= cl
        bits = (bits << cover.bits_per_point) | cover.rank(coords)
    return Encoding(
        bits=bits,
        length=expected * cover.bits_per_point,
        bits_per_point=cover.bits_per_point,
        count=expected,
        k=images.shape[1],
        eps=eps,
        norm=norm,
        clamped=clamped,
    )


def decode_subsets(encoding, d, k, eps, s, norm=None):
    """Recover the d subsets from an encoding: j is in S_i iff the rounded
    representatives of f(e_j) and f(y_Si) are within tau of each other.

    Distances strictly inside the forbidden gap between the in/out intervals
    raise DecodingAmbiguityError. Requires the intervals to be disjoint.
    """
    if norm is None:
        norm = encoding.norm
    if encoding.count != 2 * d or encoding.k != k:
        raise ValueError("encoding parameters do not match (d, k)")
    sep = separation_intervals(s, eps)
    if not sep.disjoint:
        raise ValueError("in/out intervals overlap; no separating threshold exists")
    cover = _cover_for(k, eps, norm)
    pts = np.stack([cover.lattice_point(cover.unrank(r)) for r in encoding.ranks()])
    z_basis, z_subset = pts[:d], pts[d:]
    diff = z_subset[:, None, :] - z_basis[None, :, :]
    if norm == "max":
        dist = np.max(np.abs(diff), axis=-1)
    else:
        dist = np.linalg.norm(diff, axis=-1)
    in_gap = (dist > sep.in_interval[1]) & (dist < sep.out_interval[0])
    if np.any(in_gap):
        i, j = np.argwhere(in_gap)[0]
        raise DecodingAmbiguityError(
            f"distance {dist[i, j]:.6g} between representative {j} and subset {i} "
            f"falls inside the forbidden gap ({sep.in_interval[1]:.6g}, {sep.out_interval[0]:.6g})"
        )
    return [tuple(np.flatnonzero(dist[i] <= sep.tau).tolist()) for i in range(d)]


def family_images(family, f):
    """Apply a map to the family's non-origin points and shift so f(0) = 0."""
    f0 = np.asarray(f(np.zeros(family.d)), dtype=np.float64)
    rows = [f(family.basis_point(j)) for j in range(family.d)]
    rows += [f(family.subset_point(i)) for i in range(family.d)]
    return np.stack([np.asarray(r, dtype=np.float64) - f0 for r in rows])


def lower_bound_scale(n, eps):
    """log(eps^2 n) / (eps^2 log(1/eps)) with natural logs.

    This is the growth scale of the minimal target dimension (the hidden
    constant is not pinned down); defined only for eps in (0,1) and eps^2 n > 1.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if eps * eps * n <= 1.0:
        raise ValueError(f"undefined regime: eps^2 * n = {eps * eps * n:.6g} <= 1")
    return math.log(eps * eps * n) / (eps * eps * math.log(1.0 / eps))

"""Statistical and exact checks for the embedding's quantitative guarantees.

Monte-Carlo checks redraw the sign diagonals per trial with sub-seeds derived
from (master seed, trial index), so results are reproducible and independent
of execution order. Every upper-bound check compares a 99% Wilson upper
confidence limit against the theoretical bound. The headline tail constants
(k >= eps**-2 * max{4941, 50 C0} with k <= d**(1/4)) put the guaranteed regime
far beyond desk scale, so those bounds are evaluated as reported numbers while
the checks themselves are exact, qualitative, or Gaussian-oracle based; each
affected report carries a note saying so.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import ks_2samp

from . import wht
from .embed import DEFAULT_C0, apply, beta_p, gaussian_norm_samples, plan, required_k
from .fourwise import fourwise_dense, fourwise_multiply_fast
from .report import VerificationReport, wilson_interval

__all__ = [
    "DESK_SCALE_NOTE",
    "embedding_image_samples",
    "embedding_norm_samples",
    "tail_estimate",
    "moment_check",
    "l4_flatness_check",
    "ColumnScaledMatrix",
    "column_scaled",
    "PowerIterResult",
    "opnorm_2to2",
    "opnorm_2to4_lower",
    "max_pairwise_distortion",
    "distortion_suite",
    "compare_gaussian",
]

DESK_SCALE_NOTE = (
    "the tail guarantee assumes k >= eps**-2 * max{4941, 50*C0} with k <= d**(1/4), "
    "far beyond desk scale; the bound is evaluated as a reported number and the "
    "checks at this scale are qualitative or oracle-based"
)


def _check_unit(x, tol=1e-9):
    x = np.asarray(x, dtype=np.float64)
    nrm = np.linalg.norm(x)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"expected a unit vector, got norm {nrm!r}")
    return x


def _trial_signs(seed, trial, rows, n):
    rng = np.random.default_rng([seed, trial])
    return 1.0 - 2.0 * rng.integers(0, 2, size=(rows, n), dtype=np.uint8)


def _lp_norms(Y, p):
    if p == 1.0:
        return np.sum(np.abs(Y), axis=-1)
    if p == 2.0:
        return np.sqrt(np.sum(Y * Y, axis=-1))
    return np.sum(np.abs(Y) ** p, axis=-1) ** (1.0 / p)


def embedding_image_samples(T, x, trials, seed=None, chunk=None):
    """(trials, k) images A D1 H D2 H D3 x with fresh D1, D2, D3 per trial.

    The images carry no scale: the pipeline before normalization does not
    depend on p, so one trial set serves every exponent. Per-trial sub-seeds
    are derived from (seed, trial index); trials are processed in batches but
    the sample stream does not depend on the batching. The H stages use the
    GEMM-based transform (reproducible per seed, not bit-portable).
    """
    if seed is None:
        seed = T.seed
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (T.d_orig,):
        raise ValueError(f"expected a vector of length {T.d_orig}")
    xp = np.zeros(T.d_pad)
    xp[: T.d_orig] = x
    if chunk is None:
        chunk = max(1, min(trials, (1 << 23) // T.d_pad))
    out = np.empty((trials, T.k))
    pos = 0
    while pos < trials:
        B = min(chunk, trials - pos)
        signs = np.empty((B, 3, T.d_pad))
        for t in range(B):
            signs[t] = _trial_signs(seed, pos + t, 3, T.d_pad)
        Y = xp[None, :] * signs[:, 2]
        Y = wht._wht_full_gemm(Y)
        Y *= signs[:, 1]
        Y = wht._wht_full_gemm(Y)
        Y *= signs[:, 0]
        out[pos : pos + B] = fourwise_multiply_fast(T.A, Y)
        pos += B
    return out


def embedding_norm_samples(T, x, trials, seed=None, chunk=None):
    """Samples of ||Psi x||_p with fresh D1, D2, D3 per trial (A stays fixed)."""
    images = embedding_image_samples(T, x, trials, seed=seed, chunk=chunk)
    return T.scale * _lp_norms(images, T.p)


def tail_estimate(T, x, eps, trials, seed=None):
    """Empirical P(| ||Psi x||_p - 1 | > eps) against 6 exp(-k eps^2 / 216)."""
    x = _check_unit(x)
    if trials < 1000:
        raise ValueError("tail estimation needs at least 1000 trials")
    if seed is None:
        seed = T.seed
    samples = embedding_norm_samples(T, x, trials, seed=seed)
    exceed = int(np.count_nonzero(np.abs(samples - 1.0) > eps))
    lo, hi = wilson_interval(exceed, trials)
    bound = 6.0 * math.exp(-T.k * eps * eps / 216.0)
    passed = bound >= 1.0 or hi <= bound
    return VerificationReport(
        check="tail",
        estimate=exceed / trials,
        ci=(lo, hi),
        bound=bound,
        trials=trials,
        passed=passed,
        seed=seed,
        params={
            "d": T.d_orig,
            "d_pad": T.d_pad,
            "k": T.k,
            "p": T.p,
            "eps": eps,
            "vacuous": bound >= 1.0,
            "mean": float(np.mean(samples)),
            "note": DESK_SCALE_NOTE,
        },
    )


def _exact_abs_moment(w, p):
    """E |sum_j w_j xi_j|^p over all 2**len(w) sign vectors, by doubling."""
    sums = np.zeros(1)
    for wj in w:
        sums = np.concatenate([sums + wj, sums - wj])
    return float(np.mean(np.abs(sums) ** p))


def moment_check(d, p, x, a_row=None, c0=DEFAULT_C0):
    """Exact |E|Y|^p - beta_p^p| for Y = sum_j a_j xi_j x_j against 5 C0 ||x||_3^3.

    Enumerates all 2**d Rademacher vectors, so d <= 20. The flat vector
    d**-0.5 * 1 and the basis vector e1 are re-enumerated as diagnostics: the
    l3-controlled bound predicts a strictly smaller error at the flat vector
    for p < 2. The row signs cannot change the result (xi is symmetric), which
    doubles as a sanity check.
    """
    if not 1 <= d <= 20:
        raise ValueError(f"exact enumeration supports d in [1, 20], got {d}")
    x = _check_unit(np.asarray(x, dtype=np.float64))
    if x.shape != (d,):
        raise ValueError(f"expected a vector of length {d}")
    if a_row is None:
        a_row = np.ones(d)
    a_row = np.asarray(a_row, dtype=np.float64)
    if a_row.shape != (d,) or not np.all(np.abs(a_row) == 1.0):
        raise ValueError("a_row must be a +-1 vector of length d")

    beta_pow = beta_p(p) ** p
    err = abs(_exact_abs_moment(a_row * x, p) - beta_pow)
    l3_cubed = float(np.sum(np.abs(x) ** 3))
    bound = 5.0 * c0 * l3_cubed

    flat = np.full(d, d**-0.5)
    e1 = np.zeros(d)
    e1[0] = 1.0
    flat_err = abs(_exact_abs_moment(flat, p) - beta_pow)
    e1_err = abs(_exact_abs_moment(e1, p) - beta_pow)

    return VerificationReport(
        check="moment",
        estimate=err,
        ci=(err, err),
        bound=bound,
        trials=1 << d,
        passed=err <= bound,
        params={
            "d": d,
            "p": p,
            "C0": c0,
            "l3_cubed": l3_cubed,
            "error_over_l3_cubed": err / l3_cubed if l3_cubed > 0 else float("inf"),
            "flat_error": flat_err,
            "e1_error": e1_err,
            "flat_less_than_e1": flat_err < e1_err,
        },
    )


def l4_flatness_check(d, x, t, trials, seed=0):
    """Exceedance of ||H D x||_4 over (3**0.25 + t) d**-0.25 vs 2 exp(-t^2 / (2||x||_4^2))."""
    if d <= 0 or d & (d - 1):
        raise ValueError(f"d must be a power of 2, got {d}")
    if trials < 10**4:
        raise ValueError("flatness estimation needs at least 10^4 trials")
    x = _check_unit(x)
    if x.shape != (d,):
        raise ValueError(f"expected a vector of length {d}")
    threshold = (3.0**0.25 + t) * d**-0.25
    l4 = float(np.sum(x**4) ** 0.25)
    bound = 2.0 * math.exp(-t * t / (2.0 * l4 * l4)) if t > 0 else 2.0
    chunk = max(1, min(trials, (1 << 23) // d))
    exceed = 0
    pos = 0
    while pos < trials:
        B = min(chunk, trials - pos)
        signs = np.empty((B, d))
        for i in range(B):
            signs[i] = _trial_signs(seed, pos + i, 1, d)[0]
        Y = wht.wht_full(signs * x[None, :])
        norms4 = np.sum(Y**4, axis=-1) ** 0.25
        exceed += int(np.count_nonzero(norms4 > threshold))
        pos += B
    lo, hi = wilson_interval(exceed, trials)
    passed = bound >= 1.0 or hi <= bound
    return VerificationReport(
        check="l4_flatness",
        estimate=exceed / trials,
        ci=(lo, hi),
        bound=bound,
        trials=trials,
        passed=passed,
        seed=seed,
        params={"d": d, "t": t, "threshold": threshold, "x_l4": l4, "vacuous": bound >= 1.0},
    )


@dataclass(eq=False)
class ColumnScaledMatrix:
    """The k x d matrix with column j equal to x_j times column j of A."""

    matrix: np.ndarray
    x: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape


def column_scaled(A, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.d,):
        raise ValueError(f"expected a vector of length {A.d}")
    return ColumnScaledMatrix(matrix=fourwise_dense(A) * x[None, :], x=x)


class PowerIterResult(NamedTuple):
    estimate: float
    iterations: int
    converged: bool

    def __float__(self):
        return self.estimate


def opnorm_2to2(M, iterations=1000, tol=1e-9, seed=0):
    """Largest singular value by power iteration on M^T M.

    If the iteration cap is hit before successive estimates agree to ``tol``,
    the best estimate is returned with ``converged=False``.
    """
    A = M.matrix if isinstance(M, ColumnScaledMatrix) else np.asarray(M, dtype=np.float64)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est_prev = -1.0
    est = 0.0
    for it in range(1, iterations + 1):
        w = A @ v
        est = float(np.linalg.norm(w))
        if est == 0.0:  # v in the kernel; restart once from a fresh direction
            v = rng.standard_normal(A.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = A.T @ w
        v /= np.linalg.norm(v)
        if abs(est - est_prev) <= tol * max(est, 1.0):
            return PowerIterResult(est, it, True)
        est_prev = est
    return PowerIterResult(est, iterations, False)


def opnorm_2to4_lower(A, restarts=10, iterations=300, seed=0, tol=1e-12):
    """Certified lower bound on ||A^T||_{2->4} by ascent over the unit sphere.

    Maximizes f(u) = ||A^T u||_4 with the power-type fixed point u <- A (v**3),
    v = A^T u, safeguarded to never accept a decrease. With restarts=0 returns
    the objective at the canonical start e1 (no ascent). Any returned value is
    a valid lower bound; only its tightness depends on the search.
    """
    At = fourwise_dense(A).T  # d x k

    def objective(u):
        v = At @ u
        return float(np.sum(v**4) ** 0.25)

    e1 = np.zeros(A.k)
    e1[0] = 1.0
    if restarts == 0:
        return objective(e1)

    rng = np.random.default_rng(seed)
    starts = [e1] + [rng.standard_normal(A.k) for _ in range(restarts)]
    best = 0.0
    for u in starts:
        u = u / np.linalg.norm(u)
        f = objective(u)
        for _ in range(iterations):
            v = At @ u
            g = At.T @ (v**3)
            gn = np.linalg.norm(g)
            if gn == 0.0:
                break
            cand = g / gn
            fc = objective(cand)
            if fc < f:  # overshoot: retry with an averaged step
                cand = u + cand
                cand /= np.linalg.norm(cand)
                fc = objective(cand)
                if fc < f:
                    break
            if fc - f <= tol * max(f, 1.0):
                u, f = cand, max(f, fc)
                break
            u, f = cand, fc
        best = max(best, f)
    return best


def max_pairwise_distortion(X, apply_fn, p):
    """max over pairs of | ||f(x) - f(y)||_p / ||x - y||_2 - 1 |, skipping x == y."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two points")
    Y = np.stack([np.asarray(apply_fn(row), dtype=np.float64) for row in X])
    src = pdist(X)
    img = pdist(Y, "minkowski", p=p)
    mask = src > 0.0
    if not np.any(mask):
        raise ValueError("all points are identical")
    return float(np.max(np.abs(img[mask] / src[mask] - 1.0)))


def distortion_suite(X, p, eps, rho, seed, k=None, c0=DEFAULT_C0):
    """End-to-end distortion over a point set.

    Reports the minimal k the tail guarantee would demand for (|X|, eps, rho),
    plans a transform with the requested (possibly smaller, flagged) k, and
    measures the worst pairwise distortion; by linearity this equals the worst
    norm deviation over the normalized difference set of the points.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two points")
    n, d = X.shape
    k_req = required_k(n, eps, rho, c0)
    k_used = k if k is not None else k_req
    T = plan(d, k_used, p, seed, strict=False)
    worst = max_pairwise_distortion(X, lambda row: apply(T, row), p)
    n_pairs = n * (n - 1) // 2
    return VerificationReport(
        check="distortion",
        estimate=worst,
        ci=(worst, worst),
        bound=eps,
        trials=n_pairs,
        passed=worst <= eps,
        seed=seed,
        params={
            "n": n,
            "d": d,
            "p": p,
            "eps": eps,
            "rho": rho,
            "C0": c0,
            "required_k": k_req,
            "k_used": k_used,
            "k_below_required": k_used < k_req,
            "within_theory": T.within_theory,
            "note": DESK_SCALE_NOTE,
        },
    )


def compare_gaussian(T, x, trials, seed=None, threshold=0.05):
    """Two-sample KS distance between ||Psi x||_p and the Gaussian baseline.

    The embedding samples redraw the diagonals per trial; the baseline samples
    use the exact coordinate distribution of a fresh dense Gaussian map (for
    unit x its image is k iid scaled normals, by rotation invariance).
    """
    x = _check_unit(x)
    if seed is None:
        seed = T.seed
    psi = embedding_norm_samples(T, x, trials, seed=seed)
    gauss = gaussian_norm_samples(T.k, T.p, trials, seed=[seed, 0x6A55])
    ks = float(ks_2samp(psi, gauss).statistic)
    return VerificationReport(
        check="gaussian_ks",
        estimate=ks,
        ci=(ks, ks),
        bound=threshold,
        trials=trials,
        passed=ks <= threshold,
        seed=seed,
        params={
            "d": T.d_orig,
            "k": T.k,
            "p": T.p,
            "psi_mean": float(np.mean(psi)),
            "gaussian_mean": float(np.mean(gauss)),
            "note": DESK_SCALE_NOTE,
        },
    )

"""Stage timing across a size grid with log-log scaling fits.

Sizes are powers of 4 (the construction pads to them anyway). Each stage is
timed as best-of-repeats with an inner loop sized so one measurement spans at
least ~20 ms; "per-doubling growth" between consecutive grid sizes is the
measured ratio taken to the power 1/log2(size ratio).
"""

import math
import time

import numpy as np

from . import wht
from .embed import apply, plan
from .fourwise import fourwise_dense, fourwise_multiply_fast

__all__ = ["measure", "stage_times", "run_bench", "loglog_fit"]

EXPLICIT_ENTRY_CAP = 1 << 24


def measure(fn, repeats=3, target=0.02):
    """Best-of-``repeats`` seconds per call, looping tiny ops to ~``target`` s."""
    fn()  # warmup
    t0 = time.perf_counter()
    fn()
    once = time.perf_counter() - t0
    loops = max(1, math.ceil(target / max(once, 1e-9)))
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        best = min(best, (time.perf_counter() - t0) / loops)
    return best


def stage_times(d, k, p=1.0, seed=0, repeats=3, explicit_cap=EXPLICIT_ENTRY_CAP):
    """Seconds per call for each pipeline stage at one size."""
    T = plan(d, k, p, seed, strict=False)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(d)
    diag = T.diag1
    times = {
        "diag": measure(lambda: x * diag, repeats),
        "wht": measure(lambda: wht.wht_full(x), repeats),
        "afast": measure(lambda: fourwise_multiply_fast(T.A, x), repeats),
        "pipeline": measure(lambda: apply(T, x), repeats),
    }
    if k * d <= explicit_cap:
        dense = fourwise_dense(T.A)
        times["aexplicit"] = measure(lambda: dense @ x, repeats)
    return times


def loglog_fit(xs, ys):
    """Least-squares slope and R^2 of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = intercept + slope * lx
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def run_bench(k=16, p=1.0, seed=0, min_exp=16, max_exp=22, repeats=3):
    """Time every stage over d = 4**j covering [2**min_exp, 2**max_exp].

    Returns the stage table, per-stage per-doubling growth factors between
    consecutive sizes, a log-log fit of the full pipeline against d*log(d),
    and the explicit/fast multiply time ratio where the dense product fits.
    """
    if min_exp % 2:
        min_exp += 1
    exps = [e for e in range(min_exp, max_exp + 1, 2)]
    rows = []
    for e in exps:
        d = 1 << e
        rows.append({"d": d, "log2_d": e, "times": stage_times(d, k, p, seed, repeats)})

    stages = sorted({name for row in rows for name in row["times"]})
    growth = {}
    for name in stages:
        factors = []
        for prev, cur in zip(rows, rows[1:]):
            if name in prev["times"] and name in cur["times"]:
                ratio = cur["times"][name] / prev["times"][name]
                step = cur["log2_d"] - prev["log2_d"]
                factors.append(ratio ** (1.0 / step))
        growth[name] = factors

    ds = np.array([row["d"] for row in rows], dtype=np.float64)
    pipeline = np.array([row["times"]["pipeline"] for row in rows])
    slope_dlogd, r2_dlogd = loglog_fit(ds * np.log(ds), pipeline)

    explicit_ratio = {
        row["log2_d"]: row["times"]["aexplicit"] / row["times"]["afast"]
        for row in rows
        if "aexplicit" in row["times"]
    }
    return {
        "k": k,
        "p": p,
        "seed": seed,
        "repeats": repeats,
        "rows": rows,
        "per_doubling_growth": growth,
        "pipeline_dlogd_fit": {"slope": slope_dlogd, "r2": r2_dlogd},
        "explicit_over_fast": explicit_ratio,
    }

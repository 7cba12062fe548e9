"""Command-line interface: plan, embed, verify, bench, lowerbound.

Machine-readable JSON goes to stdout, one-line human summaries to stderr.
Exit codes are a stable contract: 0 pass, 1 verification failure, 2 parameter
error, 3 I/O or format error. All randomness flows from --seed.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import lowerbound as lb
from . import verify as verify_mod
from .embed import DEFAULT_C0, apply, plan, required_k
from .formats import (
    FormatError,
    load_transform_spec,
    load_vectors,
    save_transform_spec,
    save_vectors,
    transform_spec,
)
from .fourwise import fourwise_build, fourwise_verify_strength4
from .report import VerificationReport

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_PARAM = 2
EXIT_IO = 3


def _thread_count():
    env = os.environ.get("FJLP_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"FJLP_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _emit(obj, message=None):
    print(json.dumps(obj, indent=2))
    if message:
        print(message, file=sys.stderr)


def _emit_report(report):
    payload = report.as_dict()
    payload["params"]["threads"] = _thread_count()
    _emit(payload, report.summary())
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def _unit_vector(kind, d):
    if kind == "flat":
        return np.full(d, d**-0.5)
    if kind == "e1":
        x = np.zeros(d)
        x[0] = 1.0
        return x
    raise ValueError(f"unknown vector kind {kind!r}")


def _transform_from_args(args):
    if getattr(args, "spec", None):
        return load_transform_spec(args.spec)
    missing = [name for name in ("d", "k", "p") if getattr(args, name, None) is None]
    if missing:
        raise ValueError(f"need --spec or --d/--k/--p (missing {', '.join(missing)})")
    return plan(args.d, args.k, args.p, args.seed, strict=not args.relaxed)


def cmd_plan(args):
    out = {}
    if args.n is not None:
        if args.eps is None or args.rho is None:
            raise ValueError("--n requires --eps and --rho")
        out["required_k"] = required_k(args.n, args.eps, args.rho, args.C0)
        out["params"] = {"n": args.n, "eps": args.eps, "rho": args.rho, "C0": args.C0}
    if args.d is not None:
        if args.k is None or args.p is None:
            raise ValueError("--d requires --k and --p")
        T = plan(args.d, args.k, args.p, args.seed, strict=not args.relaxed)
        spec = transform_spec(T)
        spec["scale"] = T.scale
        spec["within_theory"] = T.within_theory
        out["transform"] = spec
        if args.out:
            save_transform_spec(args.out, T)
    if not out:
        raise ValueError("nothing to do: pass --n/--eps/--rho and/or --d/--k/--p")
    _emit(out)
    return EXIT_OK


def cmd_embed(args):
    T = _transform_from_args(args)
    X = load_vectors(args.input, args.input_format)
    if X.shape[1] != T.d_orig:
        raise ValueError(f"input dimension {X.shape[1]} != transform d = {T.d_orig}")
    Y = apply(T, X)
    save_vectors(args.output, Y, args.output_format)
    _emit(
        {"input": args.input, "output": args.output, "count": int(X.shape[0]), "d": T.d_orig, "k": T.k},
        f"embedded {X.shape[0]} vectors: {T.d_orig} -> {T.k}",
    )
    return EXIT_OK


def cmd_verify(args):
    if args.check == "fourwise":
        A = fourwise_build(args.k, args.d)
        return _emit_report(fourwise_verify_strength4(A, budget=args.budget))

    if args.check == "moment":
        x = _unit_vector(args.x, args.d)
        return _emit_report(verify_mod.moment_check(args.d, args.p, x, c0=args.C0))

    if args.check == "tail":
        T = plan(args.d, args.k, args.p, args.seed, strict=not args.relaxed)
        x = _unit_vector(args.x, args.d)
        return _emit_report(verify_mod.tail_estimate(T, x, args.eps, args.trials, seed=args.seed))

    if args.check == "flatness":
        x = _unit_vector(args.x, args.d)
        return _emit_report(verify_mod.l4_flatness_check(args.d, x, args.t, args.trials, seed=args.seed))

    if args.check == "opnorm":
        A = fourwise_build(args.k, args.d)
        bound = (3.0 * args.d) ** 0.25
        rng = np.random.default_rng(args.seed)
        worst_margin = -np.inf
        worst = None
        for _ in range(args.vectors):
            x = rng.standard_normal(args.d)
            x /= np.linalg.norm(x)
            est = verify_mod.opnorm_2to2(verify_mod.column_scaled(A, x)).estimate
            margin = est - float(np.sum(x**4) ** 0.25) * bound
            if margin > worst_margin:
                worst_margin, worst = margin, est
        lower = verify_mod.opnorm_2to4_lower(A, restarts=args.restarts, seed=args.seed)
        passed = worst_margin <= 1e-9 and lower <= bound + 1e-9
        report = VerificationReport(
            check="opnorm",
            estimate=float(worst),
            ci=(float(worst), float(worst)),
            bound=bound,
            trials=args.vectors,
            passed=passed,
            seed=args.seed,
            params={
                "k": args.k,
                "d": args.d,
                "worst_2to2_margin": float(worst_margin),
                "lower_2to4": lower,
                "restarts": args.restarts,
            },
        )
        return _emit_report(report)

    if args.check == "distortion":
        rng = np.random.default_rng(args.seed)
        X = rng.standard_normal((args.n, args.d))
        return _emit_report(
            verify_mod.distortion_suite(X, args.p, args.eps, args.rho, args.seed, k=args.k, c0=args.C0)
        )

    if args.check == "gaussian":
        T = plan(args.d, args.k, args.p, args.seed, strict=not args.relaxed)
        x = _unit_vector(args.x, args.d)
        return _emit_report(verify_mod.compare_gaussian(T, x, args.trials, seed=args.seed))

    raise ValueError(f"unknown check {args.check!r}")


def cmd_bench(args):
    result = bench_mod.run_bench(
        k=args.k, p=args.p, seed=args.seed, min_exp=args.min_exp, max_exp=args.max_exp, repeats=args.repeats
    )
    result["threads"] = _thread_count()
    _emit(result, f"bench: pipeline ~ d log d fit R^2 = {result['pipeline_dlogd_fit']['r2']:.4f}")
    return EXIT_OK


def cmd_lowerbound(args):
    rows = []
    n_values = args.n if args.n else [2 * args.d + 1]
    for eps in args.eps:
        s = lb.subset_size(eps)
        if s > args.d:
            raise ValueError(f"eps = {eps}: subset size s = {s} exceeds d = {args.d}")
        sep = lb.separation_intervals(s, eps)
        cover = lb.CoverCode(args.k, eps, "l2")
        for n in n_values:
            try:
                scale = lb.lower_bound_scale(n, eps)
            except ValueError:
                scale = None
            rows.append(
                {
                    "n": n,
                    "eps": eps,
                    "s": s,
                    "d_in": sep.d_in,
                    "d_out": sep.d_out,
                    "gap": sep.gap,
                    "tau": sep.tau,
                    "L": 2 * args.d * cover.bits_per_point,
                    "lower_bound_scale": scale,
                }
            )

    if args.k < args.d:
        raise ValueError("recovery roundtrips need k >= d (isometric test embeddings)")

    def inclusion(v):
        out = np.zeros(args.k)
        out[: args.d] = v
        return out

    recoveries = {"identity": 0, "orthogonal": 0, "families": args.families}
    rng = np.random.default_rng(args.seed)
    for i in range(args.families):
        fam = lb.hard_family_build(args.d, args.eps[0], seed=[args.seed, i])
        images = lb.family_images(fam, inclusion)
        got = lb.decode_subsets(lb.encode(fam, images, fam.eps), fam.d, args.k, fam.eps, fam.s)
        recoveries["identity"] += tuple(got) == fam.subsets
        Q = np.linalg.qr(rng.standard_normal((args.k, args.d)))[0]  # orthonormal columns
        images = lb.family_images(fam, lambda v: Q @ v)
        got = lb.decode_subsets(lb.encode(fam, images, fam.eps), fam.d, args.k, fam.eps, fam.s)
        recoveries["orthogonal"] += tuple(got) == fam.subsets
    ok = recoveries["identity"] == args.families and recoveries["orthogonal"] == args.families
    _emit(
        {"table": rows, "recoveries": recoveries},
        f"lowerbound: {recoveries['identity']}/{args.families} identity and "
        f"{recoveries['orthogonal']}/{args.families} orthogonal recoveries",
    )
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fjlp",
        description="Fast Euclidean-to-lp random projections with a statistical verification harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_strictness(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--strict", dest="relaxed", action="store_false", default=False,
                       help="reject k above d_pad**(1/4) (default)")
        g.add_argument("--relaxed", dest="relaxed", action="store_true",
                       help="allow k up to the construction limit sqrt(d_pad)-1")

    p_plan = sub.add_parser("plan", help="dimension planning and transform specs")
    p_plan.add_argument("--n", type=int, help="point-set size for the required-k formula")
    p_plan.add_argument("--eps", type=float, help="target distortion")
    p_plan.add_argument("--rho", type=float, help="failure probability")
    p_plan.add_argument("--C0", type=float, default=DEFAULT_C0, help="Berry-Esseen constant")
    p_plan.add_argument("--d", type=int, help="input dimension")
    p_plan.add_argument("--k", type=int, help="target dimension")
    p_plan.add_argument("--p", type=float, help="norm exponent in [1,2]")
    p_plan.add_argument("--seed", type=int, default=0)
    p_plan.add_argument("--out", help="write the transform spec JSON here")
    add_strictness(p_plan)
    p_plan.set_defaults(func=cmd_plan)

    p_embed = sub.add_parser("embed", help="apply a transform to a vector file")
    p_embed.add_argument("--spec", help="transform spec JSON")
    p_embed.add_argument("--d", type=int)
    p_embed.add_argument("--k", type=int)
    p_embed.add_argument("--p", type=float)
    p_embed.add_argument("--seed", type=int, default=0)
    p_embed.add_argument("--input", required=True)
    p_embed.add_argument("--output", required=True)
    p_embed.add_argument("--input-format", choices=["csv", "fjlp"])
    p_embed.add_argument("--output-format", choices=["csv", "fjlp"])
    add_strictness(p_embed)
    p_embed.set_defaults(func=cmd_embed)

    p_verify = sub.add_parser("verify", help="run one verification check")
    v_sub = p_verify.add_subparsers(dest="check", required=True)

    v = v_sub.add_parser("fourwise", help="exhaustive strength-4 pattern counts")
    v.add_argument("--k", type=int, required=True)
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--budget", type=int, default=10**9)
    v.set_defaults(func=cmd_verify)

    v = v_sub.add_parser("moment", help="exact lp moment error vs the l3 bound")
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--p", type=float, required=True)
    v.add_argument("--x", choices=["flat", "e1"], default="flat")
    v.add_argument("--C0", type=float, default=DEFAULT_C0)
    v.set_defaults(func=cmd_verify)

    v = v_sub.add_parser("tail", help="Monte-Carlo tail vs 6 exp(-k eps^2/216)")
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--k", type=int, required=True)
    v.add_argument("--p", type=float, required=True)
    v.add_argument("--eps", type=float, required=True)
    v.add_argument("--trials", type=int, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--x", choices=["flat", "e1"], default="flat")
    add_strictness(v)
    v.set_defaults(func=cmd_verify)

    v = v_sub.add_parser("flatness", help="l4 norm of H D x vs the sub-gaussian bound")
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--t", type=float, required=True)
    v.add_argument("--trials", type=int, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--x", choices=["e1", "flat"], default="e1")
    v.set_defaults(func=cmd_verify)

    v = v_sub.add_parser("opnorm", help="operator-norm bounds of the sign matrix")
    v.add_argument("--k", type=int, required=True)
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--vectors", type=int, default=100)
    v.add_argument("--restarts", type=int, default=50)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    v = v_sub.add_parser("distortion", help="end-to-end pairwise distortion")
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--k", type=int)
    v.add_argument("--p", type=float, required=True)
    v.add_argument("--eps", type=float, required=True)
    v.add_argument("--rho", type=float, required=True)
    v.add_argument("--C0", type=float, default=DEFAULT_C0)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    v = v_sub.add_parser("gaussian", help="KS distance to the Gaussian baseline")
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--k", type=int, required=True)
    v.add_argument("--p", type=float, required=True)
    v.add_argument("--trials", type=int, default=10**4)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--x", choices=["flat", "e1"], default="flat")
    add_strictness(v)
    v.set_defaults(func=cmd_verify)

    p_bench = sub.add_parser("bench", help="stage timings and scaling fits")
    p_bench.add_argument("--k", type=int, default=16)
    p_bench.add_argument("--p", type=float, default=1.0)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--min-exp", type=int, default=16, help="log2 of the smallest d")
    p_bench.add_argument("--max-exp", type=int, default=22, help="log2 of the largest d")
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.set_defaults(func=cmd_bench)

    p_lb = sub.add_parser("lowerbound", help="separation table and recovery roundtrips")
    p_lb.add_argument("--d", type=int, required=True)
    p_lb.add_argument("--k", type=int, help="target dimension (default d)")
    p_lb.add_argument("--eps", type=float, nargs="+", required=True)
    p_lb.add_argument("--n", type=int, nargs="+", help="point counts for the scale column (default 2d+1)")
    p_lb.add_argument("--families", type=int, default=100)
    p_lb.add_argument("--seed", type=int, default=0)
    p_lb.set_defaults(func=cmd_lowerbound)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "k", None) is None and args.command == "lowerbound":
        args.k = args.d
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

    rangesum gen --kind box --n 256 --dim 2 --seed 7 --out pts.txt
    rangesum gen --lower-bound --eta 4 --q 16 --k 1 --out lb.txt
    rangesum build pts.txt --rho 1/16 --eps 1/3 --verified --out s.rsum
    rangesum estimate s.rsum --halfspace 1,0,0.5
    rangesum theta lb.txt --sigma 1/17 --mode exact
    rangesum experiment lowerbound --out results

Values given in a ``--config`` file (``key = value`` lines) override flags.
"""
from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .approx import DEFAULT_C_SAMPLE
from .disagreement import (EXHAUSTIVE_CAP, DomainError, min_cover_profile, theta_empty_profile,
                           theta_h, theta_X)
from .generators import (DistributionSpec, LowerBoundSpec, SpecError, gen_distribution,
                         gen_lower_bound, read_config, spec_from_config)
from .geom import GeometryError, Halfspace, PointSet
from .rangespace import ImplicitHalfplanes, RangeSpace
from .summary import (SummaryError, SummaryParams, build, estimate, read_summary,
                      stored_point_count, write_summary)


class CliError(Exception):
    pass


def frac(s) -> Fraction:
    try:
        return Fraction(str(s).strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}")


def frac_list(s) -> tuple:
    parts = [p for p in str(s).split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(frac(p) for p in parts)


def _apply_config(args) -> None:
    """Config file values win over command-line flags."""
    if not getattr(args, "config", None):
        return
    cfg = read_config(args.config)
    args.config_values = cfg
    conv = {"n": int, "dim": int, "seed": int, "trials": int, "workers": int, "lam": int,
            "eta": int, "q": int, "k": int, "rho": frac_list, "eps": frac, "delta": frac,
            "sigma": frac_list, "c_sample": float, "verified": lambda v: v.lower() in ("1", "true", "yes")}
    for key, val in cfg.items():
        key = {"lambda": "lam"}.get(key, key)
        if hasattr(args, key):
            setattr(args, key, conv.get(key, str)(val))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    cfg = getattr(args, "config_values", None)
    if args.lower_bound or (cfg and "eta" in cfg):
        if None in (args.eta, args.q, args.k):
            raise CliError("--lower-bound needs --eta, --q and --k")
        spec = LowerBoundSpec(args.eta, args.q, args.k)
        ps = gen_lower_bound(spec)
        seed = "-"
    else:
        if cfg and cfg.get("kind") == "mixture":
            spec = spec_from_config({**cfg, "n": str(args.n), "seed": str(args.seed), "dim": str(args.dim)})
        else:
            spec = DistributionSpec(args.kind, args.dim, args.n, args.seed)
        ps = gen_distribution(spec)
        seed = args.seed
    if args.out:
        ps.write(args.out)
    else:
        sys.stdout.write(ps.to_text())
    print(f"n={ps.n} dim={ps.dim} seed={seed}", file=sys.stderr if not args.out else sys.stdout)
    return 0


def _family(ps: PointSet, backend: str, verified: bool):
    if backend == "auto":
        backend = "exact" if ps.n <= EXHAUSTIVE_CAP or ps.dim != 2 else "sweep"
    if backend == "sweep":
        if verified:
            raise CliError("--verified needs the exact backend (n <= %d)" % EXHAUSTIVE_CAP)
        return ImplicitHalfplanes(ps)
    return RangeSpace.from_pointset(ps)


def cmd_build(args) -> int:
    ps = PointSet.read(args.points)
    rho = args.rho[0]
    params = SummaryParams(rho, args.eps, args.delta, args.lam, args.c_sample, args.verified)
    fam = _family(ps, args.backend, args.verified)
    s = build(fam, params, args.seed)
    if args.out:
        write_summary(s, args.out)
    xs = ";".join(str(lv.x_size) for lv in s.levels)
    ms = ";".join(str(lv.m) for lv in s.levels)
    r = s.rho_effective
    print("n,t,points_stored,rho_eff,eps,x_sizes,m_values")
    print(f"{s.n},{s.t},{stored_point_count(s)},{r.numerator}/{r.denominator},"
          f"{s.params.eps.numerator}/{s.params.eps.denominator},{xs},{ms}")
    return 0


def parse_halfspace(text: str, dim: int, grid_scale: int) -> Halfspace:
    """``a1,..,ad,c`` meaning a·x >= c in real coordinates, made exact on the grid."""
    try:
        vals = [Fraction(v.strip()) for v in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise CliError(f"malformed halfspace {text!r}: expected {dim + 1} numbers")
    if len(vals) != dim + 1:
        raise CliError(f"malformed halfspace {text!r}: expected {dim + 1} numbers")
    L = 1
    for v in vals:
        L = math.lcm(L, v.denominator)
    normal = [int(v * L) for v in vals[:dim]]
    if not any(normal):
        raise CliError("malformed halfspace: normal must be nonzero")
    return Halfspace(tuple(normal), int(vals[dim] * L) * grid_scale)


def cmd_estimate(args) -> int:
    s = read_summary(args.summary)
    h = parse_halfspace(args.halfspace, s.dim, s.grid_scale)
    tau = estimate(s, h)
    print(f"tau={tau.numerator}/{tau.denominator} ({float(tau):.6g})")
    return 0


def cmd_theta(args) -> int:
    ps = PointSet.read(args.points)
    rows = []
    if args.mode == "profile":
        if ps.dim != 2:
            raise CliError("profile mode needs planar input")
        mu = min_cover_profile(ImplicitHalfplanes(ps))
        for sg in args.sigma:
            p = theta_empty_profile(mu, sg)
            rows.append((sg, p.theta, p.witness_r, "profile"))
    else:
        if ps.n > EXHAUSTIVE_CAP:
            raise CliError(f"n={ps.n} exceeds the exhaustive limit {EXHAUSTIVE_CAP}; "
                           "use --mode profile (empty-trace range, planar input)")
        rs = RangeSpace.from_pointset(ps)
        for sg in args.sigma:
            if args.range == "empty":
                p = theta_h(rs, rs.empty_index(), sg, args.mode)
                rows.append((sg, p.theta, p.witness_r, args.mode))
            else:
                th, arg = theta_X(rs, sg, args.mode)
                wr = theta_h(rs, arg, sg, args.mode).witness_r
                rows.append((sg, th, wr, args.mode))
    print("# schema=theta v1 columns=sigma,theta_num,theta_den,witness_r,mode")
    print("sigma,theta_num,theta_den,witness_r,mode")
    for sg, th, wr, mode in rows:
        w = "" if wr is None else f"{wr.numerator}/{wr.denominator}"
        print(f"{sg.numerator}/{sg.denominator},{th.numerator},{th.denominator},{w},{mode}")
    return 0


def cmd_experiment(args) -> int:
    from .experiments import ExperimentConfig, run

    lb = None
    if args.eta is not None:
        lb = ((args.eta, args.q, args.k),)
    cfg = ExperimentConfig(args.name, kind=args.kind, n=args.n, dim=args.dim,
                           rhos=args.rho, eps=args.eps, delta=args.delta, lam=args.lam,
                           c_sample=args.c_sample, sigmas=args.sigma, trials=args.trials,
                           seed=args.seed, out=Path(args.out or "results"), workers=args.workers,
                           lower_bound=lb)
    res = run(cfg)
    for c in res.checks:
        print(f"{'PASS' if c.ok else 'FAIL'} {res.name}: {c.name} expected={c.expected} actual={c.actual}")
    print(f"{res.name}: {'ok' if res.ok else 'FAILED'} in {res.seconds:.1f}s; "
          f"csv={res.csv_path} svg={res.svg_path}")
    return 0 if res.ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rangesum", description="Distribution-sensitive range summaries.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, defaults):
        sp.add_argument("--config", help="key = value file; its values override flags")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        for name in defaults:
            if name == "dist":
                sp.add_argument("--kind", default=None, help="box, ball or mixture")
                sp.add_argument("--n", type=int, default=None)
                sp.add_argument("--dim", type=int, default=2)
            elif name == "summary":
                sp.add_argument("--rho", type=frac_list, default=None, help="rational, e.g. 1/16")
                sp.add_argument("--eps", type=frac, default=None)
                sp.add_argument("--delta", type=frac, default=Fraction(1, 10))
                sp.add_argument("--lambda", dest="lam", type=int, default=None)
                sp.add_argument("--c-sample", type=float, default=DEFAULT_C_SAMPLE)
                sp.add_argument("--verified", action="store_true")
            elif name == "theta":
                sp.add_argument("--sigma", type=frac_list, default=None, help="comma-separated rationals")
                sp.add_argument("--mode", default="exact", choices=("exact", "eq8", "profile"))
            elif name == "lb":
                sp.add_argument("--eta", type=int)
                sp.add_argument("--q", type=int)
                sp.add_argument("--k", type=int)
            elif name == "run":
                sp.add_argument("--trials", type=int, default=None)
                sp.add_argument("--workers", type=int, default=1)

    g = sub.add_parser("gen", help="generate a point set file")
    common(g, ["dist", "lb"])
    g.add_argument("--lower-bound", action="store_true")
    g.set_defaults(func=cmd_gen, kind="box", n=256)

    b = sub.add_parser("build", help="build a summary from a point file")
    b.add_argument("points")
    common(b, ["summary"])
    b.add_argument("--backend", default="auto", choices=("auto", "exact", "sweep"))
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("estimate", help="query a summary with a halfspace a1,..,ad,c (a.x >= c)")
    e.add_argument("summary")
    e.add_argument("--halfspace", required=True)
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("theta", help="disagreement coefficient rows per sigma")
    t.add_argument("points")
    common(t, ["theta"])
    t.add_argument("--range", default="min", choices=("min", "empty"),
                   help="min: minimum over low-coverage ranges; empty: the empty-trace range")
    t.set_defaults(func=cmd_theta)

    x = sub.add_parser("experiment", help="run a named experiment (exit 0 iff all checks pass)")
    from .experiments import NAMES
    x.add_argument("name", choices=NAMES)
    common(x, ["dist", "summary", "theta", "lb", "run"])
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        if args.command == "build":
            if args.rho is None or args.eps is None:
                raise CliError("build needs --rho and --eps")
        if args.command == "theta" and args.sigma is None:
            raise CliError("theta needs --sigma")
        return args.func(args)
    except (CliError, SpecError, SummaryError, DomainError, GeometryError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

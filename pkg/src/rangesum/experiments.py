"""Named experiments.

Each experiment writes one CSV and one SVG chart into the output directory
and returns an :class:`ExperimentResult` whose ``checks`` list the
in-experiment assertions with expected and actual values.  The command-line
exit code is 0 iff every check passes.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import report
from .approx import DEFAULT_C_SAMPLE, SampleSpec, as_fraction, li_sample_size
from .continuum import (SupportShape, annulus_constant, annulus_counterexamples, annulus_F_bound,
                        bridging_check, cap_lower_bound_holds, F_ball, mu_ball,
                        prop_c3_counterexamples, volume_I, volume_I_mc)
from .disagreement import min_cover_profile, theta_empty_profile, theta_X
from .geom import Halfspace, PointSet
from .generators import LowerBoundSpec, gen_ball, gen_box, gen_lower_bound, lower_bound_vertices
from .rangespace import ImplicitHalfplanes, RangeSpace, popcount
from .summary import SummaryParams, build, estimate, estimate_all, stored_point_count

NAMES = ("guarantee", "scaling-ball", "scaling-box", "size-vs-baseline", "bridging",
         "lowerbound", "reconstruct", "facts")

LOWER_BOUND_TRIPLES = ((4, 16, 1), (4, 32, 2), (8, 64, 2))
SCALING_SIGMAS = tuple(Fraction(1, 2 ** k) for k in range(4, 11))
SIZE_RHOS = tuple(Fraction(1, 2 ** k) for k in range(5, 10))
VOLUME_I_REF = 0.056052


@dataclass
class ExperimentConfig:
    name: str
    kind: str | None = None
    n: int | None = None
    dim: int = 2
    rhos: tuple | None = None
    eps: Fraction | None = None
    delta: Fraction = Fraction(1, 10)
    lam: int | None = None
    c_sample: float = DEFAULT_C_SAMPLE
    sigmas: tuple | None = None
    trials: int | None = None
    seed: int = 0
    out: Path = Path("results")
    workers: int = 1
    lower_bound: tuple | None = None      # (eta, q, k) triples

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {', '.join(NAMES)}")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be >= 1")
        for g in ("rhos", "sigmas", "lower_bound"):
            v = getattr(self, g)
            if v is not None and len(v) == 0:
                raise ValueError(f"{g} grid must be non-empty")
        self.out = Path(self.out)


@dataclass
class Check:
    name: str
    ok: bool
    expected: str
    actual: str


@dataclass
class ExperimentResult:
    name: str
    columns: list
    rows: list
    checks: list = field(default_factory=list)
    csv_path: Path | None = None
    svg_path: Path | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def fmap(fn, items, workers: int = 1) -> list:
    """Map in input order; fans out to processes when workers > 1."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def _gen(kind: str, n: int, dim: int, seed: int) -> PointSet:
    if kind == "box":
        return gen_box(n, dim, seed)
    if kind == "ball":
        return gen_ball(n, dim, seed)
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# guarantee
# ---------------------------------------------------------------------------


def eq1_violations(rs: RangeSpace, num, den, rho: Fraction, eps: Fraction) -> np.ndarray:
    """Mask of ranges with |s/n - num/den| > eps·max(rho, s/n), exact."""
    n = rs.n
    s = rs.sizes.astype(object)
    lhs = np.abs(s * den - num * n) * eps.denominator * rho.denominator
    big = np.maximum(s * rho.denominator, rho.numerator * n)
    rhs = eps.numerator * big * den
    return np.asarray(lhs > rhs, dtype=bool)


def sandwich_violations(rs: RangeSpace, summary) -> list[int]:
    """Per round, ranges breaking the alive / removed coverage bounds."""
    e = summary.eps_internal
    s = rs.sizes.astype(object)
    n = rs.n
    out = []
    for i, alive in enumerate(summary.alive[1:], start=1):
        scaled = s * (2 ** i) * e.denominator
        hi = scaled < n * (e.denominator + e.numerator)
        lo = scaled >= n * (e.denominator - e.numerator)
        bad = (alive & ~np.asarray(hi, bool)) | (~alive & ~np.asarray(lo, bool))
        out.append(int(np.count_nonzero(bad)))
    return out


def x_identity_mismatches(rs: RangeSpace, summary) -> int:
    bad = 0
    for lv, prev in zip(summary.levels, summary.alive):
        u, inter = rs.union_intersection(prev)
        bad += int(popcount(u & ~inter)) != lv.x_size
        bad += int(popcount(inter)) != lv.m
    return bad


def net_misses(rs: RangeSpace, summary) -> int:
    """Ranges with coverage >= rho_eff that contain no stored point."""
    stored = np.zeros(rs.n, dtype=bool)
    for lv in summary.levels:
        stored[lv.sample_indices] = True
    lookup = {tuple(p): i for i, p in enumerate(rs.ps.coords.tolist())}
    for lv in summary.levels:
        if lv.witness_point is not None:
            stored[lookup[tuple(lv.witness_point)]] = True
    rho = summary.rho_effective
    heavy = rs.sizes * rho.denominator >= rho.numerator * rs.n
    hit = rs.dense[:, stored].any(axis=1)
    return int(np.count_nonzero(heavy & ~hit))


def _guarantee_case(args):
    kind, n, rho, eps, delta, lam, c, seed = args
    ps = _gen(kind, n, 2, seed)
    rs = RangeSpace.from_pointset(ps)
    summary = build(rs, SummaryParams(rho, eps, delta, lam, c, verified_build=True),
                    np.random.default_rng(np.random.SeedSequence([seed, rho.denominator])))
    num, den, _ = estimate_all(summary, rs)
    viol = int(np.count_nonzero(eq1_violations(rs, num, den, summary.rho_effective, eps)))
    sand = sandwich_violations(rs, summary)
    xid = x_identity_mismatches(rs, summary)
    miss = net_misses(rs, summary)
    return (kind, n, rho, eps, len(rs), summary.t, stored_point_count(summary), viol,
            sum(sand), xid, miss)


def run_guarantee(cfg: ExperimentConfig) -> ExperimentResult:
    n = cfg.n or 256
    eps = as_fraction(cfg.eps or Fraction(1, 3))
    if cfg.kind:
        cases = [(cfg.kind, r) for r in (cfg.rhos or (Fraction(1, 16),))]
    else:
        cases = [("box", Fraction(1, 16)), ("box", Fraction(1, 32)), ("ball", Fraction(1, 16))]
    jobs = [(k, n, as_fraction(r), eps, as_fraction(cfg.delta), cfg.lam, cfg.c_sample, cfg.seed)
            for k, r in cases]
    rows = fmap(_guarantee_case, jobs, cfg.workers)
    cols = ["kind", "n", "rho", "eps", "ranges", "t", "points_stored", "eq1_violations",
            "sandwich_violations", "x_identity_mismatches", "net_misses"]
    res = ExperimentResult("guarantee", cols, rows)
    for r in rows:
        tag = f"{r[0]} n={r[1]} rho={r[2]}"
        res.checks.append(Check(f"eq1 {tag}", r[7] == 0, "0 violations", str(r[7])))
        res.checks.append(Check(f"sandwich {tag}", r[8] == 0, "0 violations", str(r[8])))
        res.checks.append(Check(f"x-identity {tag}", r[9] == 0, "0 mismatches", str(r[9])))
        res.checks.append(Check(f"rho-net {tag}", r[10] == 0, "0 misses", str(r[10])))
    _emit(res, cfg, lambda p: report.line_chart(
        p, "Guarantee check", "case", "count",
        {"ranges": [(j + 1, r[4]) for j, r in enumerate(rows)],
         "stored points": [(j + 1, r[6]) for j, r in enumerate(rows)],
         "violations": [(j + 1, r[7] + r[8]) for j, r in enumerate(rows)]}, bars=True))
    return res


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------


def _scaling_seed(args):
    kind, n, seed, sigmas = args
    ps = _gen(kind, n, 2, seed)
    mu = min_cover_profile(ImplicitHalfplanes(ps))
    ths = [theta_empty_profile(mu, s).theta for s in sigmas]
    slope = loglog_slope([float(1 / s) for s in sigmas], [float(t) for t in ths])
    return seed, ths, slope


def run_scaling(cfg: ExperimentConfig) -> ExperimentResult:
    kind = cfg.kind or ("ball" if cfg.name == "scaling-ball" else "box")
    n = cfg.n or 4096
    trials = cfg.trials or 5
    sigmas = tuple(as_fraction(s) for s in (cfg.sigmas or SCALING_SIGMAS))
    out = fmap(_scaling_seed, [(kind, n, cfg.seed + t, sigmas) for t in range(trials)], cfg.workers)
    rows = []
    for seed, ths, slope in out:
        for s, th in zip(sigmas, ths):
            rows.append((kind, n, seed, s, th, float(th), slope))
    med = float(np.median([o[2] for o in out]))
    cols = ["kind", "n", "seed", "sigma", "theta", "theta_float", "seed_slope"]
    res = ExperimentResult(cfg.name, cols, rows)
    if kind == "ball":
        res.checks.append(Check("median slope", abs(med - 1 / 3) <= 0.15, "1/3 +- 0.15", f"{med:.4f}"))
    else:
        res.checks.append(Check("median slope", med <= 0.15, "<= 0.15", f"{med:.4f}"))
    series = {f"seed {seed}": [(float(1 / s), float(t)) for s, t in zip(sigmas, ths)]
              for seed, ths, _ in out}
    _emit(res, cfg, lambda p: report.line_chart(
        p, f"theta vs 1/sigma ({kind}, n={n}, median slope {med:.3f})", "1/sigma", "theta",
        series, logx=True, logy=True))
    return res


# ---------------------------------------------------------------------------
# size vs baseline
# ---------------------------------------------------------------------------


def _size_seed(args):
    n, seed, rhos, eps, delta, lam, c = args
    ps = gen_ball(n, 2, seed)
    fam = ImplicitHalfplanes(ps)
    out = []
    for rho in rhos:
        s = build(fam, SummaryParams(rho, eps, delta, lam, c),
                  np.random.default_rng(np.random.SeedSequence([seed, rho.denominator])))
        li = li_sample_size(SampleSpec(rho, eps, delta, lam or fam.vc_dim, c))
        stored = stored_point_count(s)
        capped = sum(1 for lv in s.levels if lv.sample_size == lv.x_size)
        out.append((seed, rho, s.t, stored, li, stored / li, capped))
    return out


def run_size(cfg: ExperimentConfig) -> ExperimentResult:
    n = cfg.n or 8192
    trials = cfg.trials or 5
    eps = as_fraction(cfg.eps or Fraction(1, 2))
    rhos = tuple(as_fraction(r) for r in (cfg.rhos or SIZE_RHOS))
    jobs = [(n, cfg.seed + t, rhos, eps, as_fraction(cfg.delta), cfg.lam, cfg.c_sample)
            for t in range(trials)]
    per = fmap(_size_seed, jobs, cfg.workers)
    rows = [r for seed_rows in per for r in seed_rows]
    med = [float(np.median([seed_rows[j][5] for seed_rows in per])) for j in range(len(rhos))]
    cols = ["seed", "rho", "t", "points_stored", "li_size", "ratio", "capped_rounds"]
    res = ExperimentResult("size-vs-baseline", cols, rows)
    dec = all(b < a for a, b in zip(med, med[1:]))
    res.checks.append(Check("median ratio strictly decreasing in 1/rho", dec, "decreasing",
                            " ".join(f"{m:.4g}" for m in med)))
    _emit(res, cfg, lambda p: report.line_chart(
        p, f"stored points / uniform sample size (ball, n={n})", "1/rho", "ratio",
        {"median": [(float(1 / r), m) for r, m in zip(rhos, med)]}, logx=True, logy=True))
    return res


# ---------------------------------------------------------------------------
# bridging
# ---------------------------------------------------------------------------


def run_bridging(cfg: ExperimentConfig) -> ExperimentResult:
    n = cfg.n or 2000
    sigma = as_fraction((cfg.sigmas or (Fraction(1, 50),))[0])
    trials = cfg.trials or 20
    shape = SupportShape("unit_ball" if (cfg.kind or "ball") == "ball" else "unit_box", 2)
    br = bridging_check(shape, n, sigma, trials, cfg.seed)
    rows = [(t, n, sigma, fin, float(fin), cont, 8 * cont, holds) for t, fin, cont, holds in br.rows]
    cols = ["trial", "n", "sigma", "theta_finite", "theta_finite_float", "theta_continuum_2sigma",
            "bound", "holds"]
    res = ExperimentResult("bridging", cols, rows)
    res.checks.append(Check("pass rate", br.pass_rate >= 0.95, ">= 0.95", f"{br.pass_rate:.3f}"))
    _emit(res, cfg, lambda p: report.line_chart(
        p, f"finite theta per trial vs 8 theta_D(2 sigma), sigma={sigma}", "trial", "theta",
        {"finite": [(r[0], r[4]) for r in rows]}, hlines={"8 theta_D": 8 * br.theta_continuum}))
    return res


# ---------------------------------------------------------------------------
# lower bound
# ---------------------------------------------------------------------------


def lower_bound_theta(eta: int, q: int, k: int, max_doublings: int = 8):
    """theta_X(k/n) on the lower-bound family, doubling the outer height
    until the exact value n/(k + q/eta) is reached."""
    target = Fraction(q + k) / (k + Fraction(q, eta))
    M = LowerBoundSpec(eta, q, k).outer_height
    for _ in range(max_doublings + 1):
        spec = LowerBoundSpec(eta, q, k, outer_height=M)
        ps = gen_lower_bound(spec)
        rs = RangeSpace.from_pointset(ps)
        th, _ = theta_X(rs, Fraction(k, spec.n))
        if th == target or 2 * M * ps.grid_scale >= (1 << 40):
            return th, target, M
        M *= 2
    return th, target, M


def run_lowerbound(cfg: ExperimentConfig) -> ExperimentResult:
    triples = cfg.lower_bound or LOWER_BOUND_TRIPLES
    rows = []
    res = ExperimentResult("lowerbound", ["eta", "q", "k", "n", "theta", "expected", "outer_height",
                                          "match"], rows)
    for eta, q, k in triples:
        th, target, M = lower_bound_theta(eta, q, k)
        rows.append((eta, q, k, q + k, th, target, M, th == target))
        res.checks.append(Check(f"theta ({eta},{q},{k})", th == target, str(target), str(th)))
    _emit(res, cfg, lambda p: report.line_chart(
        p, "theta_X(k/n) on the lower-bound family", "case", "theta",
        {"measured": [(j + 1, float(r[4])) for j, r in enumerate(rows)],
         "n/(k+q/eta)": [(j + 1, float(r[5])) for j, r in enumerate(rows)]}, bars=True))
    return res


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------


def vertex_halfplanes(spec: LowerBoundSpec, grid_scale: int | None = None):
    """Per vertex: (closed tangent halfplane, same shifted past the vertex)."""
    from .geom import DEFAULT_GRID_SCALE

    gs = grid_scale or DEFAULT_GRID_SCALE
    verts = lower_bound_vertices(spec, gs)
    out = []
    for v, a in zip(verts, spec.angles()):
        u = (round(math.cos(a) * gs), round(math.sin(a) * gs))
        off = u[0] * int(v[0]) + u[1] * int(v[1])
        out.append((Halfspace(u, off), Halfspace(u, off + 1)))
    return out


def run_reconstruct(cfg: ExperimentConfig) -> ExperimentResult:
    eta, q, k = (cfg.lower_bound or ((4, 16, 1),))[0]
    spec = LowerBoundSpec(eta, q, k)
    ps = gen_lower_bound(spec)
    n = ps.n
    rho = Fraction(k, n)
    eps = as_fraction(cfg.eps or Fraction(1, 2))
    rs = RangeSpace.from_pointset(ps)
    summary = build(rs, SummaryParams(rho, eps, cfg.delta, cfg.lam, cfg.c_sample, verified_build=True),
                    np.random.default_rng(cfg.seed))
    thr = Fraction(2 * k, n)
    rows = []
    res = ExperimentResult("reconstruct", ["vertex", "halfplane", "true_fraction", "tau", "answer",
                                           "expected", "correct"], rows)
    from .geom import trace_of
    for j, (h_yes, h_no) in enumerate(vertex_halfplanes(spec, ps.grid_scale)):
        for label, h, want in (("covering", h_yes, "yes"), ("tangent-shifted", h_no, "no")):
            true = Fraction(int(trace_of(h, ps).sum()), n)
            tau = estimate(summary, h)
            ans = "yes" if tau >= thr else "no"
            rows.append((j, label, true, tau, ans, want, ans == want))
            res.checks.append(Check(f"vertex {j} {label}", ans == want, want, f"{ans} (tau={tau})"))
        want_yes = Fraction(k + spec.stack, n)
        got = Fraction(int(trace_of(h_yes, ps).sum()), n)
        res.checks.append(Check(f"vertex {j} covering trace", got == want_yes, str(want_yes), str(got)))
    _emit(res, cfg, lambda p: report.line_chart(
        p, f"summary estimates per vertex, threshold 2k/n = {thr}", "vertex", "tau",
        {"covering": [(r[0] + 1, float(r[3])) for r in rows if r[1] == "covering"],
         "shifted": [(r[0] + 1, float(r[3])) for r in rows if r[1] != "covering"]},
        hlines={"2k/n": float(thr)}, bars=True))
    return res


# ---------------------------------------------------------------------------
# facts
# ---------------------------------------------------------------------------


def run_facts(cfg: ExperimentConfig) -> ExperimentResult:
    rng = np.random.default_rng(cfg.seed)
    rows = []
    res = ExperimentResult("facts", ["fact", "parameter", "value", "reference", "ok"], rows)

    def add(fact, param, value, ref, ok):
        rows.append((fact, param, value, ref, ok))
        res.checks.append(Check(f"{fact} {param}", bool(ok), str(ref), str(value)))

    samples = cfg.trials or 10 ** 7
    p, se = volume_I_mc(0.01, 2, samples, rng)
    add("volume_I_mc", "r=0.01", p, VOLUME_I_REF, abs(p - VOLUME_I_REF) <= 0.02 * VOLUME_I_REF)
    add("volume_I closed form", "r=0.01", volume_I(0.01, 2), VOLUME_I_REF,
        abs(volume_I(0.01, 2) - VOLUME_I_REF) <= 1e-6)
    for kk in range(1, 13):
        r = 2.0 ** -kk
        add("cap lower bound", f"r=2^-{kk}", mu_ball(1 - r, 2), r ** 1.5 / math.pi,
            cap_lower_bound_holds(r, 2))
    rs = [2.0 ** -kk for kk in range(2, 13)]
    bad = annulus_counterexamples(10 ** 6, rs, 2, rng)
    add("annulus containment", f"c={annulus_constant(2):.4f}", bad, 0, bad == 0)
    for r in (1 / 16, 1 / 64, 1 / 256):
        fb = F_ball(r, 2)
        add("ball F annulus bound", f"r={r:g}", fb, annulus_F_bound(r, 2), fb <= annulus_F_bound(r, 2))
    bad3 = prop_c3_counterexamples(10 ** 5, [2.0 ** -kk for kk in range(2, 10)], rng)
    add("monotone cover vs product", "r=2^-2..2^-9", bad3, 0, bad3 == 0)
    caps = [r for r in rows if r[0] == "cap lower bound"]
    _emit(res, cfg, lambda p: report.line_chart(
        p, "cap measure vs r^(3/2)/pi", "r", "measure",
        {"mu_ball(1-r)": [(2.0 ** -(j + 1), r[2]) for j, r in enumerate(caps)],
         "r^(3/2)/pi": [(2.0 ** -(j + 1), r[3]) for j, r in enumerate(caps)]},
        logx=True, logy=True))
    return res


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _emit(res: ExperimentResult, cfg: ExperimentConfig, chart) -> None:
    stem = cfg.out / res.name
    res.csv_path = report.write_csv(stem.with_suffix(".csv"), res.name, res.columns, res.rows)
    res.svg_path = chart(stem.with_suffix(".svg"))


RUNNERS = {
    "guarantee": run_guarantee,
    "scaling-ball": run_scaling,
    "scaling-box": run_scaling,
    "size-vs-baseline": run_size,
    "bridging": run_bridging,
    "lowerbound": run_lowerbound,
    "reconstruct": run_reconstruct,
    "facts": run_facts,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.time()
    res = RUNNERS[cfg.name](cfg)
    res.seconds = time.time() - t0
    return res

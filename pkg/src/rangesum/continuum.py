"""Continuous-distribution oracles for the unit box and the unit ball.

For a halfspace h* disjoint from the support, the disagreement region of
the r-ball around h* is ``{x : mu(x) <= r}`` where mu(x) is the measure of
the smallest halfspace containing x.  ``F(r) = Pr[mu(x) <= r]`` then gives
``theta(sigma) = max(1, sup_{r > sigma} F(r) / r)``.

Floating point throughout; results feed inequality and slope checks only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

SHAPES = ("unit_box", "unit_ball")


@dataclass(frozen=True)
class SupportShape:
    kind: str
    dim: int = 2

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise ValueError(f"kind must be one of {SHAPES}")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")


@dataclass
class ContinuumTheta:
    sigma: float
    theta: float
    F_curve: list = field(default_factory=list)    # (r, F(r))
    witness_r: float | None = None


# ---------------------------------------------------------------------------
# Ball
# ---------------------------------------------------------------------------


def mu_ball(x_norm, dim: int = 2):
    """Measure of the smallest cap containing a point at distance x_norm."""
    u = np.asarray(x_norm, dtype=np.float64)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("x_norm must lie in [0, 1]")
    if dim == 2:
        out = (np.arccos(u) - u * np.sqrt(np.clip(1 - u * u, 0, None))) / math.pi
    elif dim == 3:
        h = 1 - u
        out = h * h * (3 - h) / 4
    else:
        raise ValueError("dim must be 2 or 3")
    return float(out) if np.ndim(out) == 0 else out


def ball_radius_for_measure(r: float, dim: int = 2, tol: float = 1e-12) -> float:
    """u with mu_ball(u) = r, by bisection (mu_ball decreases in u)."""
    if r >= 0.5:
        return 0.0
    if r <= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mu_ball(mid, dim) > r:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def F_ball(r: float, dim: int = 2) -> float:
    """Pr[mu(x) <= r] for x uniform in the ball: the shell |x| >= u_r."""
    if r >= 0.5:
        return 1.0
    return 1.0 - ball_radius_for_measure(r, dim) ** dim


# ---------------------------------------------------------------------------
# Box
# ---------------------------------------------------------------------------


def _clip_square(normal, c):
    """Area of {y in [0,1]^2 : <normal, y> >= c} by polygon clipping."""
    poly = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    a, b = normal
    out = []
    for i in range(4):
        p, q = poly[i], poly[(i + 1) % 4]
        fp, fq = a * p[0] + b * p[1] - c, a * q[0] + b * q[1] - c
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    if len(out) < 3:
        return 0.0
    s = 0.0
    for i in range(len(out)):
        x0, y0 = out[i]
        x1, y1 = out[(i + 1) % len(out)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def _cube_cap(normal, c):
    """Volume of {y in [0,1]^3 : <normal, y> >= c} by integrating slices."""
    a, b, w = normal

    def slice_area(s):
        if abs(a) + abs(b) < 1e-15:
            return 1.0 if w * s >= c else 0.0
        return _clip_square((a, b), c - w * s)

    val, _ = integrate.quad(slice_area, 0.0, 1.0, limit=200, epsabs=1e-12)
    return val


def mu_box_closed(x) -> np.ndarray:
    """2D closed form 2·a·b with a, b the distances to the nearest sides.

    The cheapest cut through x is the corner triangle having x as the
    midpoint of its hypotenuse.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    a = np.minimum(x[:, 0], 1 - x[:, 0])
    b = np.minimum(x[:, 1], 1 - x[:, 1])
    return 2 * a * b


def mu_box(x, dim: int = 2, grid: int = 720) -> float:
    """Smallest halfspace measure through x, by numerical minimisation."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != dim:
        raise ValueError("point dimension mismatch")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in the unit box")
    if dim == 2:
        def area(phi):
            nrm = (math.cos(phi), math.sin(phi))
            return _clip_square(nrm, nrm[0] * x[0] + nrm[1] * x[1])

        phis = np.linspace(0, 2 * math.pi, grid, endpoint=False)
        vals = np.array([area(p) for p in phis])
        best = float(vals.min())
        step = phis[1] - phis[0]
        for k in np.argsort(vals)[:4]:
            res = optimize.minimize_scalar(area, bounds=(phis[k] - step, phis[k] + step),
                                           method="bounded", options={"xatol": 1e-9})
            best = min(best, float(res.fun))
        return best
    if dim == 3:
        def vol(ang):
            th, ph = ang
            nrm = (math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th))
            return _cube_cap(nrm, float(np.dot(nrm, x)))

        best = math.inf
        starts = [(th, ph) for th in np.linspace(0.2, math.pi - 0.2, 5)
                  for ph in np.linspace(0, 2 * math.pi, 8, endpoint=False)]
        coarse = sorted(starts, key=vol)[:3]
        for s in coarse:
            res = optimize.minimize(vol, s, method="Nelder-Mead",
                                    options={"xatol": 1e-7, "fatol": 1e-12})
            best = min(best, float(res.fun))
        for e in np.eye(3):
            for sg in (1, -1):
                nrm = sg * e
                best = min(best, _cube_cap(tuple(nrm), float(np.dot(nrm, x))))
        return best
    raise ValueError("dim must be 2 or 3")


def F_box_exact(r: float) -> float:
    """Closed form of Pr[2ab <= r] for the 2D box: 2r(1 + ln(1/(2r)))."""
    if r >= 0.5:
        return 1.0
    return 2 * r * (1 + math.log(1 / (2 * r)))


def mu_box_samples(samples: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """mu at uniform random box points (closed form in 2D, numerical in 3D)."""
    pts = rng.random((samples, dim))
    if dim == 2:
        return mu_box_closed(pts)
    return np.array([mu_box(p, 3) for p in pts])


# ---------------------------------------------------------------------------
# theta_D
# ---------------------------------------------------------------------------


def F_curve(shape: SupportShape, rs_grid, samples: int = 10 ** 6, rng=None) -> np.ndarray:
    rs_grid = np.asarray(rs_grid, dtype=np.float64)
    if shape.kind == "unit_ball":
        return np.array([F_ball(r, shape.dim) for r in rs_grid])
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    mu = np.sort(mu_box_samples(samples, shape.dim, rng))
    return np.searchsorted(mu, rs_grid, side="right") / len(mu)


def theta_D(shape: SupportShape, sigma: float, grid_size: int = 64, samples: int = 10 ** 6,
            rng=None) -> ContinuumTheta:
    """max(1, sup_{r > sigma} F(r)/r) on a log-spaced grid of r in [sigma, 1]."""
    if grid_size < 8:
        raise ValueError("grid_size must be >= 8")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if sigma >= 1:
        return ContinuumTheta(float(sigma), 1.0, [], None)
    grid = np.geomspace(sigma, 1.0, grid_size)
    F = F_curve(shape, grid, samples, rng)
    ratio = F / grid
    k = int(np.argmax(ratio))
    theta = max(1.0, float(ratio[k]))
    return ContinuumTheta(float(sigma), theta, list(zip(grid.tolist(), F.tolist())),
                          float(grid[k]))


# ---------------------------------------------------------------------------
# Volume of I(r) = {x in [0,1]^d : prod x_i <= r}
# ---------------------------------------------------------------------------


def _area_I2(s: float) -> float:
    if s >= 1:
        return 1.0
    if s <= 0:
        return 0.0
    return s + s * math.log(1 / s)


def volume_I(r: float, dim: int = 2) -> float:
    if not r > 0:
        raise ValueError("r must be positive")
    if r >= 1:
        return 1.0
    if dim == 2:
        return _area_I2(r)
    if dim == 3:
        val, _ = integrate.quad(lambda z: _area_I2(r / z) if z > 0 else 1.0, 0.0, 1.0,
                                points=[r], limit=200, epsabs=1e-13)
        return val
    raise ValueError("dim must be 2 or 3")


def volume_I3_closed(r: float) -> float:
    L = math.log(1 / r)
    return r * (1 + L + L * L / 2)


def volume_I_mc(r: float, dim: int, samples: int, rng=None, chunk: int = 10 ** 6):
    """Monte-Carlo estimate and its standard error."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    hits = 0
    left = samples
    while left > 0:
        m = min(chunk, left)
        pts = rng.random((m, dim))
        hits += int(np.count_nonzero(np.prod(pts, axis=1) <= r))
        left -= m
    p = hits / samples
    return p, math.sqrt(max(p * (1 - p), 1e-300) / samples)


# ---------------------------------------------------------------------------
# Geometric facts
# ---------------------------------------------------------------------------


def cone_fraction(r: float, dim: int = 2) -> float:
    """Measure of the cone (triangle in 2D) inscribed in a cap of height r."""
    half = math.sqrt(max(2 * r - r * r, 0.0))
    if dim == 2:
        return r * half / math.pi
    return (2 * r - r * r) * r / 4


def cap_lower_bound_holds(r: float, dim: int = 2) -> bool:
    """mu_ball(1 - r) >= cone fraction >= r^((d+1)/2) / const."""
    const = math.pi if dim == 2 else 4.0
    mu = mu_ball(1 - r, dim)
    return mu >= cone_fraction(r, dim) * (1 - 1e-12) and cone_fraction(r, dim) >= r ** ((dim + 1) / 2) / const


def annulus_constant(dim: int = 2) -> float:
    """c with {mu <= r} inside the shell |x| >= 1 - c·r^(2/(d+1))."""
    return math.pi ** (2 / 3) if dim == 2 else 2.0


def annulus_counterexamples(samples: int, rs, dim: int = 2, rng=None, chunk: int = 10 ** 6) -> int:
    """Uniform ball points with mu(x) <= r but |x| < 1 - c·r^(2/(d+1))."""
    from .generators import _unit_ball

    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    c = annulus_constant(dim)
    bad = 0
    left = samples
    while left > 0:
        m = min(chunk, left)
        pts = _unit_ball(rng, m, dim)
        norm = np.minimum(np.linalg.norm(pts, axis=1), 1.0)
        mu = mu_ball(norm, dim)
        for r in rs:
            bad += int(np.count_nonzero((mu <= r) & (norm < 1 - c * r ** (2 / (dim + 1)))))
        left -= m
    return bad


def annulus_F_bound(r: float, dim: int = 2) -> float:
    return 1 - max(0.0, 1 - annulus_constant(dim) * r ** (2 / (dim + 1))) ** dim


def _monotone_area(x1, x2, phi):
    """Area of {y in [0,1]^2 : w·y <= w·x}, w = (cos phi, sin phi), phi in [0, pi/2]."""
    a, b = np.cos(phi), np.sin(phi)
    c = a * x1 + b * x2
    pos = lambda v: np.maximum(v, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        area = (c * c - pos(c - a) ** 2 - pos(c - b) ** 2 + pos(c - a - b) ** 2) / (2 * a * b)
    area = np.where(a < 1e-9, x2, area)
    area = np.where(b < 1e-9, x1, area)
    return area


def monotone_cover_measure(pts: np.ndarray, grid: int = 256, refine: int = 40) -> np.ndarray:
    """Smallest origin-monotone halfplane measure through each point.

    Grid search over the normal angle followed by golden-section
    refinement in the best cell (vectorised over points).
    """
    pts = np.atleast_2d(pts)
    x1, x2 = pts[:, :1], pts[:, 1:2]
    phis = np.linspace(0.0, math.pi / 2, grid)
    vals = _monotone_area(x1, x2, phis[None, :])
    k = np.argmin(vals, axis=1)
    best = vals[np.arange(len(pts)), k]
    step = phis[1] - phis[0]
    lo = np.clip(phis[k] - step, 0, math.pi / 2)
    hi = np.clip(phis[k] + step, 0, math.pi / 2)
    g = (math.sqrt(5) - 1) / 2
    x1f, x2f = x1[:, 0], x2[:, 0]
    for _ in range(refine):
        m1 = hi - g * (hi - lo)
        m2 = lo + g * (hi - lo)
        f1 = _monotone_area(x1f, x2f, m1)
        f2 = _monotone_area(x1f, x2f, m2)
        left = f1 < f2
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
        best = np.minimum(best, np.minimum(f1, f2))
    return best


def prop_c3_counterexamples(samples: int, rs, rng=None) -> int:
    """Box points whose monotone cover measure is <= r but x1·x2 > r."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    pts = rng.random((samples, 2))
    ref = np.minimum(pts, 1 - pts)      # reflect into the origin-corner frame
    mu = monotone_cover_measure(ref)
    prod = ref[:, 0] * ref[:, 1]
    return int(sum(np.count_nonzero((mu <= r) & (prod > r)) for r in rs))


# ---------------------------------------------------------------------------
# Bridging check
# ---------------------------------------------------------------------------


@dataclass
class BridgingResult:
    rows: list            # (trial, theta_finite, theta_continuum, holds)
    pass_rate: float
    theta_continuum: float


def bridging_check(shape: SupportShape, n: int, sigma, trials: int, seed: int = 0,
                   grid_size: int = 64, samples: int = 10 ** 6) -> BridgingResult:
    """Per-trial test of theta_finite(sigma) <= 8·theta_D(2 sigma)."""
    from fractions import Fraction

    from .disagreement import min_cover_profile, theta_empty_profile
    from .generators import gen_ball, gen_box
    from .rangespace import ImplicitHalfplanes

    if shape.dim != 2:
        raise ValueError("bridging check runs the planar profile path (dim = 2)")
    sigma = Fraction(sigma).limit_denominator(1 << 40) if not isinstance(sigma, Fraction) else sigma
    cont = theta_D(shape, 2 * float(sigma), grid_size, samples, np.random.default_rng(seed))
    gen = gen_ball if shape.kind == "unit_ball" else gen_box
    rows = []
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    for t in range(trials):
        ps = gen(n, shape.dim, int(seeds[t]))
        if sigma >= 1 or sigma * n < 1:
            fin = Fraction(1)
        else:
            mu = min_cover_profile(ImplicitHalfplanes(ps))
            fin = theta_empty_profile(mu, sigma).theta
        holds = float(fin) <= 8 * cont.theta
        rows.append((t, fin, cont.theta, holds))
    rate = sum(r[3] for r in rows) / trials
    return BridgingResult(rows, rate, cont.theta)

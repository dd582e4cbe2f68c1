"""Exact disagreement coefficients on finite point sets.

For a base range h, let D(j) be the number of points in the disagreement
region of the ball of ranges within symmetric difference j of h.  Then
``Pr[DIS(B(h, r))] = D(floor(r n)) / n`` and the coefficient is

    theta = max(1, D(j0) / (sigma n), max_{j0 < j <= n} D(j) / j),
    j0 = floor(sigma n),

because the ratio is piecewise constant-over-decreasing in r and its
supremum over r > sigma is approached at the left end of each step.  The
easy cases sigma >= 1 and sigma < 1/n return 1.

Two paths compute D: an exhaustive one over all canonical ranges (sort by
symmetric difference, cumulative OR/AND of packed traces) and, for a base
range with empty trace, a coverage profile mu(x) = smallest range covering x
obtained by rotational sweeps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .approx import as_fraction
from .rangespace import ImplicitHalfplanes, RangeSpace, popcount

EXHAUSTIVE_CAP = 512


class DomainError(ValueError):
    pass


@dataclass
class DisagreementProfile:
    theta: Fraction
    witness_r: Fraction | None
    sigma: Fraction
    mode: str
    grid: list = field(default_factory=list)        # j with r = j/n, j >= ceil(sigma n)
    dis_sizes: list = field(default_factory=list)   # D(j) on the grid
    ball_sizes: list | None = None                  # |B(h, j/n)| on the grid (exhaustive only)


def sigma_min(rs) -> Fraction:
    return rs.sigma_min()


def r_ball(rs: RangeSpace, h, r) -> list:
    """Canonical ranges whose symmetric difference with h is at most r·n."""
    r = as_fraction(r)
    d = rs.symdiff_all(h)
    sel = np.flatnonzero(d * r.denominator <= r.numerator * rs.n)
    return [rs.ranges[i] for i in sel]


def dis_curve(rs: RangeSpace, h) -> tuple[np.ndarray, np.ndarray]:
    """(D, B) for j = 0..n: DIS sizes and ball sizes of B(h, j/n)."""
    n = rs.n
    d = rs.symdiff_all(h)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    W = rs.words[order]
    dis = popcount(np.bitwise_or.accumulate(W, axis=0) & ~np.bitwise_and.accumulate(W, axis=0))
    last = np.searchsorted(ds, np.arange(n + 1), side="right") - 1
    return dis[last], last + 1


def profile_curve(mu: np.ndarray, n: int) -> np.ndarray:
    """D(j) = #{x : mu(x) <= j} for j = 0..n."""
    cnt = np.bincount(np.asarray(mu, dtype=np.int64), minlength=n + 1)[: n + 1]
    return np.cumsum(cnt)


def _easy(sigma: Fraction, n: int) -> bool:
    return sigma >= 1 or sigma * n < 1


def theta_from_curve(D: np.ndarray, n: int, sigma, mode: str = "exact",
                     B: np.ndarray | None = None, label: str | None = None) -> DisagreementProfile:
    """Coefficient from a DIS curve D(0..n); ``mode`` is exact or eq8."""
    sigma = as_fraction(sigma)
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    lab = label or mode
    if _easy(sigma, n):
        return DisagreementProfile(Fraction(1), None, sigma, lab)
    j0 = int(sigma * n)            # floor
    jstart = -((-sigma.numerator * n) // sigma.denominator)   # ceil(sigma n)
    grid = list(range(jstart, n + 1))
    if mode == "exact":
        best, wr = Fraction(int(D[j0])) / (sigma * n), sigma
        for j in range(j0 + 1, n + 1):
            v = Fraction(int(D[j]), j)
            if v > best:
                best, wr = v, Fraction(j, n)
    elif mode == "eq8":
        best, wr = Fraction(0), None
        for j in grid:
            v = Fraction(int(D[j]), j)
            if v > best:
                best, wr = v, Fraction(j, n)
        best = 2 * best
    else:
        raise DomainError(f"unknown mode {mode!r}")
    theta = max(Fraction(1), best)
    return DisagreementProfile(theta, wr, sigma, lab, grid, [int(D[j]) for j in grid],
                               None if B is None else [int(B[j]) for j in grid])


def theta_h(rs: RangeSpace, h, sigma, mode: str = "exact") -> DisagreementProfile:
    """Exhaustive coefficient of base range ``h`` at ``sigma``."""
    sigma = as_fraction(sigma)
    if _easy(sigma, rs.n):
        return DisagreementProfile(Fraction(1), None, sigma, mode)
    D, B = dis_curve(rs, h)
    return theta_from_curve(D, rs.n, sigma, mode, B)


def theta_X(rs: RangeSpace, sigma, mode: str = "exact"):
    """Minimum coefficient over ranges covering at most sigma·n points.

    Returns ``(theta, index of a minimising range)``.
    """
    sigma = as_fraction(sigma)
    smin = rs.sigma_min()
    if sigma < smin:
        raise DomainError(f"sigma={sigma} is below sigma_min={smin}")
    cand = np.flatnonzero(rs.sizes * sigma.denominator <= sigma.numerator * rs.n)
    if _easy(sigma, rs.n):
        return Fraction(1), int(cand[0])
    best, arg = None, None
    for c in cand:
        th = theta_h(rs, int(c), sigma, mode).theta
        if best is None or th < best:
            best, arg = th, int(c)
            if best == 1:
                break
    return best, arg


def theta_X_sweep(rs: RangeSpace, sigmas, mode: str = "exact") -> list:
    """theta_X over several sigma values, reusing each range's DIS curve."""
    sig = [as_fraction(s) for s in sigmas]
    smin = rs.sigma_min()
    for s in sig:
        if s < smin:
            raise DomainError(f"sigma={s} is below sigma_min={smin}")
    hard = [s for s in sig if not _easy(s, rs.n)]
    res = {s: (Fraction(1), None) for s in sig}
    if hard:
        smax = max(hard)
        cand = np.flatnonzero(rs.sizes * smax.denominator <= smax.numerator * rs.n)
        best = {s: None for s in hard}
        for c in cand:
            D, _ = dis_curve(rs, int(c))
            for s in hard:
                if rs.sizes[c] * s.denominator > s.numerator * rs.n:
                    continue
                th = theta_from_curve(D, rs.n, s, mode).theta
                if best[s] is None or th < best[s][0]:
                    best[s] = (th, int(c))
        res.update(best)
    return [res[s] for s in sig]


# ---------------------------------------------------------------------------
# Coverage profile (empty-trace base range)
# ---------------------------------------------------------------------------


def min_cover_profile(rs) -> np.ndarray:
    """mu(x): fewest points in a range covering x, for every point.

    Planar inputs use the rotational sweep (closed halfplanes through x in
    generic directions suffice, since shrinking a range onto x never adds
    points).  Other inputs fall back to the enumerated traces.
    """
    if isinstance(rs, RangeSpace) and rs.sigma_min() != 0:
        raise DomainError("coverage profile needs the empty trace (sigma_min = 0)")
    ps = rs.ps
    if ps.dim == 2 and (isinstance(rs, ImplicitHalfplanes) or rs.mode == "exact"):
        fam = rs if isinstance(rs, ImplicitHalfplanes) else ImplicitHalfplanes(ps)
        index = fam.index
        ones = np.ones(ps.n, dtype=np.int64)
        return np.array([int(index.window_counts(a, ones).min()) for a in range(ps.n)],
                        dtype=np.int64)
    return min_cover_exhaustive(rs)


def min_cover_exhaustive(rs: RangeSpace) -> np.ndarray:
    """Same quantity by scanning traces in increasing size."""
    order = np.argsort(rs.sizes, kind="stable")
    dense = rs.dense[order]
    first = np.argmax(dense, axis=0)
    covered = dense[first, np.arange(rs.n)]
    if not covered.all():
        raise DomainError("some point is covered by no range")
    return rs.sizes[order][first]


def theta_empty_profile(mu: np.ndarray, sigma, mode: str = "exact") -> DisagreementProfile:
    """Coefficient of the empty-trace range from a coverage profile."""
    n = len(mu)
    return theta_from_curve(profile_curve(mu, n), n, sigma, mode, label="profile" if mode == "exact" else mode)


def theta_empty(rs, sigma, mode: str = "exact") -> DisagreementProfile:
    """Coefficient of the empty-trace range; exhaustive when small enough."""
    if isinstance(rs, RangeSpace) and rs.n <= EXHAUSTIVE_CAP:
        return theta_h(rs, rs.empty_index(), sigma, mode)
    return theta_empty_profile(min_cover_profile(rs), sigma, mode)

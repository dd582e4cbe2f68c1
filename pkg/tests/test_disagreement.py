from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_theta
from rangesum.disagreement import (DomainError, dis_curve, min_cover_exhaustive,
                                   min_cover_profile, profile_curve, r_ball, sigma_min,
                                   theta_empty, theta_empty_profile, theta_from_curve, theta_h,
                                   theta_X, theta_X_sweep)
from rangesum.generators import LowerBoundSpec, gen_ball, gen_box, gen_lower_bound
from rangesum.geom import PointSet
from rangesum.rangespace import ImplicitHalfplanes, RangeSpace, subset_mask


def sets_of(rs):
    return [frozenset(np.flatnonzero(r).tolist()) for r in rs.dense]


def small_space(seed, n=12, L=None):
    if L is None:
        return RangeSpace.from_pointset(gen_ball(n, 2, seed))
    rng = np.random.default_rng(seed)
    return RangeSpace.from_pointset(PointSet(2, rng.integers(0, L + 1, (n, 2)), 1))


def test_sigma_min_examples():
    assert sigma_min(small_space(0)) == 0
    assert sigma_min(RangeSpace.from_pointset(gen_box(1, 2, 0))) == 0
    ps = gen_box(5, 2, 0)
    rs = RangeSpace.from_traces(ps, [subset_mask(5, [0, 1]), subset_mask(5, range(5))])
    assert sigma_min(rs) == F(2, 5)


def test_r_ball_examples():
    rs = small_space(1)
    h = 5
    b0 = r_ball(rs, h, 0)
    assert [r.index for r in b0] == [h]
    assert len(r_ball(rs, h, 1)) == len(rs)
    e = rs.empty_index()
    ball = r_ball(rs, e, F(3, rs.n))
    assert {r.index for r in ball} == set(np.flatnonzero(rs.sizes <= 3).tolist())


def test_easy_cases():
    rs = small_space(2)
    for s in (F(1), F(3, 2), F(0), F(1, 2 * rs.n)):
        for mode in ("exact", "eq8"):
            assert theta_h(rs, 3, s, mode).theta == 1


def test_three_points_empty_range_brute_force():
    ps = PointSet(2, np.array([[0, 0], [4, 1], [1, 5]]), 1)
    rs = RangeSpace.from_pointset(ps)
    e = rs.empty_index()
    got = theta_h(rs, e, F(1, 3)).theta
    assert got == brute_theta(sets_of(rs), 3, frozenset(), F(1, 3))
    # every point can be cut off alone: DIS(B(empty, 1/3)) is everything
    assert got == 3


@pytest.mark.parametrize("eta,q,k,want", [(4, 16, 1, F(17, 5)), (4, 32, 2, F(17, 5)), (8, 64, 2, F(33, 5))])
def test_lower_bound_family(eta, q, k, want):
    spec = LowerBoundSpec(eta, q, k)
    rs = RangeSpace.from_pointset(gen_lower_bound(spec))
    th, arg = theta_X(rs, F(k, spec.n))
    assert th == want == F(spec.n) / (k + F(q, eta))
    assert rs.sizes[arg] * spec.n <= k * spec.n


def test_lower_bound_placement_independent():
    spec = LowerBoundSpec(5, 40, 2, vertex_angles=(0.3, 0.9, 1.2, 2.0, 2.9))
    rs = RangeSpace.from_pointset(gen_lower_bound(spec))
    assert theta_X(rs, F(2, 42))[0] == F(42) / (2 + 8)


def test_theta_X_domain_and_trivial():
    ps = gen_box(6, 2, 0)
    rs = RangeSpace.from_traces(ps, [subset_mask(6, [0, 1]), subset_mask(6, range(6))])
    with pytest.raises(DomainError):
        theta_X(rs, F(1, 6))
    assert theta_X(small_space(3), F(1))[0] == 1


def test_eq8_relation():
    rs = small_space(4, 20)
    for s in (F(1, 20), F(3, 40), F(1, 7), F(1, 3)):
        for h in range(0, len(rs), 17):
            ex = theta_h(rs, h, s).theta
            e8 = theta_h(rs, h, s, "eq8").theta
            assert ex <= e8 <= 2 * ex


def test_profile_fields():
    rs = small_space(5, 20)
    p = theta_h(rs, rs.empty_index(), F(1, 10))
    assert p.grid == list(range(2, 21))
    assert p.dis_sizes == sorted(p.dis_sizes)
    assert p.ball_sizes == sorted(p.ball_sizes)
    assert p.witness_r is not None and p.witness_r >= F(1, 10)


def test_min_cover_profile_examples():
    same = PointSet(2, np.array([[3, 3]] * 5), 1)
    assert min_cover_profile(RangeSpace.from_pointset(same)).tolist() == [5] * 5
    ps = PointSet(2, np.array([[0, 0], [10, 0], [0, 10], [10, 10], [5, 5], [5, 5]]), 1)
    mu = min_cover_profile(RangeSpace.from_pointset(ps))
    assert mu[:4].tolist() == [1, 1, 1, 1]
    assert mu[4] == mu[5] >= 2
    with pytest.raises(DomainError):
        min_cover_profile(RangeSpace.from_traces(ps, [subset_mask(6, range(6))]))


def test_profile_matches_exhaustive_n150():
    rs = RangeSpace.from_pointset(gen_ball(150, 2, 8))
    mu = min_cover_profile(rs)
    assert np.array_equal(mu, min_cover_exhaustive(rs))
    D, _ = dis_curve(rs, rs.empty_index())
    assert np.array_equal(D, profile_curve(mu, rs.n))
    for s in (F(1, 150), F(1, 16), F(1, 64), F(3, 7)):
        assert theta_empty_profile(mu, s).theta == theta_h(rs, rs.empty_index(), s).theta


def test_theta_empty_dispatch():
    ps = gen_box(600, 2, 1)
    big = ImplicitHalfplanes(ps)
    assert theta_empty(big, F(1, 32)).mode == "profile"
    rs = small_space(6, 30)
    assert theta_empty(rs, F(1, 10)).theta == theta_h(rs, rs.empty_index(), F(1, 10)).theta


def test_theta_X_sweep_matches_pointwise():
    rs = small_space(7, 16)
    sig = [F(1, 16), F(1, 8), F(3, 16), F(1)]
    assert [t for t, _ in theta_X_sweep(rs, sig)] == [theta_X(rs, s)[0] for s in sig]


def test_bad_mode():
    with pytest.raises(DomainError):
        theta_from_curve(np.arange(5), 4, F(1, 2), "bogus")
    with pytest.raises(DomainError):
        theta_from_curve(np.arange(5), 4, F(-1, 2))


sigma_st = st.fractions(min_value=0, max_value=F(3, 2), max_denominator=64)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 12), st.integers(2, 8), sigma_st)
def test_theta_matches_definition(seed, n, L, sigma):
    rs = small_space(seed, n, L)
    tr = sets_of(rs)
    for h in {0, rs.empty_index(), len(rs) - 1, len(rs) // 2}:
        assert theta_h(rs, h, sigma).theta == brute_theta(tr, n, tr[h], sigma)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 20), st.data())
def test_theta_bounds_monotone_scaling(seed, n, data):
    rs = small_space(seed, n)
    h = data.draw(st.integers(0, len(rs) - 1))
    grid = [F(j, 4 * n) for j in range(1, 4 * n + 1)]
    vals = [theta_h(rs, h, s).theta for s in grid]
    for s, v in zip(grid, vals):
        assert 1 <= v <= max(1, 1 / s)
    # monotone on sigma >= 1/n; below that the easy-case rule pins theta to 1
    top = [v for s, v in zip(grid, vals) if s * n >= 1]
    assert all(a >= b for a, b in zip(top, top[1:]))
    for s in grid:
        for c in (2, 4):
            if c * s <= 1:
                assert theta_h(rs, h, s).theta <= c * theta_h(rs, h, c * s).theta
    xs = [theta_X(rs, s)[0] for s in grid[::3] if s * n >= 1]
    assert all(a >= b for a, b in zip(xs, xs[1:]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 40), st.integers(2, 10))
def test_profile_equals_exhaustive_degenerate(seed, n, L):
    rs = small_space(seed, n, L)
    mu = min_cover_profile(rs)
    assert np.array_equal(mu, min_cover_exhaustive(rs))
    e = rs.empty_index()
    for s in (F(1, n), F(2, n), F(1, 3), F(5, 7 * n)):
        assert theta_empty_profile(mu, s).theta == theta_h(rs, e, s).theta

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rangesum.generators import gen_ball, gen_box
from rangesum.rangespace import (ImplicitHalfplanes, RangeSpace, common_intersection_count,
                                 dis_region, fraction, pack_rows, popcount, subset_mask,
                                 symdiff_count, unpack_rows)


def custom(n, *members):
    ps = gen_box(n, 2, 0)
    return RangeSpace.from_traces(ps, [subset_mask(n, m) for m in members])


def test_fraction_examples():
    rs = custom(4, [0, 1], [])
    assert fraction(rs, 0) == Fraction(1, 2)
    assert fraction(rs, 1) == 0
    full = RangeSpace.from_pointset(gen_box(17, 2, 1))
    i = int(np.flatnonzero(full.sizes == 17)[0])
    assert full.fraction(i) == 1 and full.fraction_pair(i) == (17, 17)


def test_symdiff_examples():
    rs = custom(10, [0, 1, 2], [], [3, 4, 5, 6, 7], [0, 1, 2])
    assert symdiff_count(rs, 0, 3) == 0
    assert symdiff_count(rs, 1, 2) == 5
    assert symdiff_count(rs, 0, 2) == 8


def test_dis_region_examples():
    rs = custom(3, [0, 1], [1, 2], [], [0, 1, 2])
    assert not dis_region(rs, [0]).any()
    assert dis_region(rs, [2, 3]).all()
    assert np.flatnonzero(dis_region(rs, [0, 1])).tolist() == [0, 2]
    with pytest.raises(ValueError):
        dis_region(rs, [])


def test_common_intersection_examples():
    rs = custom(3, [0, 1], [1, 2], [], [0, 1, 2])
    assert common_intersection_count(rs, [0, 2]) == 0
    assert common_intersection_count(rs, [3]) == 3
    assert common_intersection_count(rs, [0, 1]) == 1
    with pytest.raises(ValueError):
        common_intersection_count(rs, [])


def test_pack_unpack_roundtrip():
    rng = np.random.default_rng(0)
    rows = rng.random((7, 130)) < 0.4
    w = pack_rows(rows)
    assert w.shape == (7, 3)
    assert np.array_equal(unpack_rows(w, 130), rows)
    assert popcount(w).tolist() == rows.sum(axis=1).tolist()


def test_sigma_min():
    assert RangeSpace.from_pointset(gen_ball(20, 2, 1)).sigma_min() == 0
    assert RangeSpace.from_pointset(gen_ball(1, 2, 1)).sigma_min() == 0
    rs = custom(6, [0, 1], [0, 1, 2, 3])
    assert rs.sigma_min() == Fraction(2, 6)
    assert ImplicitHalfplanes(gen_ball(5, 2, 0)).sigma_min() == 0


def test_find_trace_and_empty_index():
    rs = RangeSpace.from_pointset(gen_box(12, 2, 3))
    assert rs.sizes[rs.empty_index()] == 0
    i = rs.find_trace(range(12))
    assert rs.sizes[i] == 12
    assert rs.find_trace([0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10]) in range(-1, len(rs))


def test_weighted_counts_exact():
    rs = RangeSpace.from_pointset(gen_box(30, 2, 3))
    w = np.arange(30, dtype=np.int64) * 7 + 1
    ref = rs.dense.astype(np.int64) @ w
    assert np.array_equal(rs.weighted_counts(w), ref)
    big = w * (1 << 50)
    assert np.array_equal(rs.weighted_counts(big), rs.dense.astype(object) @ big.astype(object))


def test_dump_hex():
    rs = custom(70, [0], [69], [])
    lines = rs.dump_hex().splitlines()
    assert lines == ["1", format(1 << 69, "x"), "0"]


rs_cache = {}


def space(seed):
    if seed not in rs_cache:
        rs_cache[seed] = RangeSpace.from_pointset(gen_ball(24, 2, seed))
    return rs_cache[seed]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4), st.data())
def test_symdiff_identity(seed, data):
    rs = space(seed)
    i = data.draw(st.integers(0, len(rs) - 1))
    j = data.draw(st.integers(0, len(rs) - 1))
    inter = int(np.count_nonzero(rs.dense[i] & rs.dense[j]))
    assert rs.symdiff_count(i, j) == rs.sizes[i] + rs.sizes[j] - 2 * inter
    assert rs.symdiff_all(i)[j] == rs.symdiff_count(i, j)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4), st.data())
def test_dis_partition_and_monotone(seed, data):
    rs = space(seed)
    sub = data.draw(st.lists(st.integers(0, len(rs) - 1), min_size=1, max_size=8))
    extra = data.draw(st.lists(st.integers(0, len(rs) - 1), min_size=0, max_size=4))
    dis = rs.dis_region(sub)
    common = rs.common_intersection(sub)
    none = ~rs.dense[sub].any(axis=0)
    assert np.array_equal(dis.astype(int) + common.astype(int) + none.astype(int), np.ones(rs.n, int))
    assert not (dis & ~rs.dis_region(sub + extra)).any()

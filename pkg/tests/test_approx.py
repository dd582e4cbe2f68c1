import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import li_formula
from rangesum.approx import (DEFAULT_C_SAMPLE, SampleSpec, as_fraction, calibration_success_rates,
                             ceil_log2, check_relative, draw_sample, li_sample_size,
                             round_sample_size, verify_relative_approx)
from rangesum.generators import gen_box
from rangesum.rangespace import RangeSpace


def test_li_small_example():
    assert li_sample_size(SampleSpec(F(1, 2), F(1), F(1, 2), 1, 1.0)) == 4


def test_li_frozen_value():
    spec = SampleSpec(F(1, 64), F(1, 2), F(1, 10), 3, 1.0)
    assert li_sample_size(spec) == 5459
    assert li_sample_size(spec) == li_formula(1 / 64, 1 / 2, 1 / 10, 3, 1.0)


def test_li_linear_in_c():
    a = SampleSpec(F(1, 64), F(1, 2), F(1, 10), 3, 1.0)
    b = SampleSpec(F(1, 64), F(1, 2), F(1, 10), 3, 2.0)
    raw = 64 * 4 * (18 + math.log2(10))
    assert li_sample_size(b) == math.ceil(2 * raw)
    assert li_sample_size(a) == math.ceil(raw)


def test_round_size_frozen_value():
    spec = SampleSpec(F(1, 64), F(1, 2), F(1, 10), 3, 1.0)
    assert round_sample_size(spec, F(1, 2), 3, F(1, 64)) == 383
    assert math.ceil(0.5 * 32 * (18 + math.log2(60))) == 383


def test_round_size_zero_and_cap():
    spec = SampleSpec(F(1, 64), F(1, 2), F(1, 10), 3, 1.0)
    assert round_sample_size(spec, 0, 2, F(1, 64)) == 0
    assert round_sample_size(spec, F(1, 2), 3, F(1, 64), x_size=100) == 100
    with pytest.raises(ValueError):
        round_sample_size(spec, F(1, 2), 0, F(1, 64))


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), st.integers(1, 6), st.integers(1, 5), st.integers(2, 9), st.integers(2, 9))
def test_round_size_monotone(i, lam, k, e, d):
    rho = F(1, 2 ** k)
    base = SampleSpec(rho, F(1, e), F(1, d), lam, 1.0)
    r = F(1, 3)
    v = round_sample_size(base, r, i, rho)
    assert round_sample_size(base, r, i + 1, rho) >= v
    assert round_sample_size(base, F(1, 2), i, rho) >= v
    assert round_sample_size(SampleSpec(rho, F(1, e), F(1, d), lam + 1, 1.0), r, i, rho) >= v
    assert round_sample_size(SampleSpec(rho, F(1, e + 1), F(1, d), lam, 1.0), r, i, rho) >= v
    assert round_sample_size(SampleSpec(rho, F(1, e), F(1, d + 1), lam, 1.0), r, i, rho) >= v


def test_spec_validation():
    with pytest.raises(ValueError):
        SampleSpec(F(0), F(1, 2), F(1, 10))
    with pytest.raises(ValueError):
        SampleSpec(F(1, 2), F(1, 2), F(1))
    with pytest.raises(ValueError):
        SampleSpec(F(1, 2), F(1, 2), F(1, 2), 0)
    with pytest.raises(ValueError):
        SampleSpec(F(1, 2), F(1, 2), F(1, 2), 1, 0.0)


def test_ceil_log2_and_as_fraction():
    assert [ceil_log2(F(x)) for x in (1, 2, 3, 4, 5)] == [0, 1, 2, 2, 3]
    assert ceil_log2(F(64, 1)) == 6 and ceil_log2(F(65, 1)) == 7
    assert as_fraction("1/16") == F(1, 16) and as_fraction(0.5) == F(1, 2)


def test_draw_sample_contract():
    rng = np.random.default_rng(1)
    one = np.zeros(10, bool)
    one[7] = True
    assert draw_sample(one, 0, rng).size == 0
    assert draw_sample(one, 5, rng).tolist() == [7] * 5
    with pytest.raises(ValueError):
        draw_sample(np.zeros(10, bool), 3, rng)
    a = draw_sample(np.ones(50, bool), 40, np.random.default_rng(9))
    b = draw_sample(np.ones(50, bool), 40, np.random.default_rng(9))
    assert np.array_equal(a, b)


@pytest.fixture(scope="module")
def rs():
    return RangeSpace.from_pointset(gen_box(40, 2, 2))


def test_verify_full_ground_set(rs):
    Z = np.arange(rs.n)
    assert verify_relative_approx(Z, rs, F(1, 64), F(1, 100)).ok


def test_verify_empty_sample_fails(rs):
    res = verify_relative_approx(np.zeros(0, dtype=np.int64), rs, F(1, 8), F(1, 3))
    assert not res.ok and res.worst_index is not None
    # error over allowance is 1/eps for every range with coverage >= rho
    assert res.worst_ratio == pytest.approx(3.0)
    # violated iff coverage > eps * max(rho, coverage), i.e. coverage > rho / 3
    assert res.violations == int(np.count_nonzero(rs.sizes * 24 > rs.n))


def test_verify_relative_to_subset(rs):
    ground = np.zeros(rs.n, bool)
    ground[:10] = True
    assert verify_relative_approx(np.arange(10), rs, F(1, 8), F(1, 3), ground=ground).ok
    assert not verify_relative_approx(np.arange(10, 20), rs, F(1, 8), F(1, 3), ground=ground).ok


def test_check_relative_exact_boundary():
    # |1/2 - 3/4| = 1/4 = (1/2)·max(1/8, 1/2): equality passes
    assert check_relative(np.array([1]), 2, np.array([3]), 4, F(1, 8), F(1, 2))[0]
    assert not check_relative(np.array([1]), 2, np.array([3]), 4, F(1, 8), F(49, 100))[0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(2, 6))
def test_verify_monotone(seed, k, e):
    rs = RangeSpace.from_pointset(gen_box(20, 2, seed % 7))
    Z = draw_sample(np.ones(rs.n, bool), 15, np.random.default_rng(seed))
    rho, eps = F(1, 2 ** k), F(1, e)
    if verify_relative_approx(Z, rs, rho, eps).ok:
        assert verify_relative_approx(Z, rs, rho * 2 if rho < F(1, 2) else rho, eps).ok
        assert verify_relative_approx(Z, rs, rho, min(F(1), eps * 2)).ok


@pytest.mark.slow
def test_calibrated_multiplier_is_smallest_power_of_two():
    c = DEFAULT_C_SAMPLE
    ok, half = calibration_success_rates([c, c / 2], trials=100)
    assert ok >= 0.9
    assert half < 0.9

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import area_I2
from rangesum.continuum import (F_ball, F_box_exact, F_curve, SupportShape, annulus_constant,
                                annulus_counterexamples, annulus_F_bound, ball_radius_for_measure,
                                bridging_check, cap_lower_bound_holds, cone_fraction,
                                monotone_cover_measure, mu_ball, mu_box, mu_box_closed,
                                prop_c3_counterexamples, theta_D, volume_I, volume_I3_closed,
                                volume_I_mc)
from rangesum.experiments import loglog_slope

BALL = SupportShape("unit_ball", 2)
BOX = SupportShape("unit_box", 2)


def test_shape_validation():
    with pytest.raises(ValueError):
        SupportShape("torus", 2)
    with pytest.raises(ValueError):
        SupportShape("unit_box", 4)


def test_mu_ball_endpoints():
    assert mu_ball(0.0) == pytest.approx(0.5)
    assert mu_ball(1.0) == pytest.approx(0.0, abs=1e-15)
    assert mu_ball(0.0, 3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        mu_ball(1.5)


def test_mu_ball_2d_against_segment_area():
    from scipy.integrate import quad

    for u in (0.1, 0.5, 0.9):
        seg, _ = quad(lambda y: 2 * math.sqrt(1 - y * y), u, 1)
        assert mu_ball(u) == pytest.approx(seg / math.pi, rel=1e-9)


def test_mu_ball_small_cap_asymptotics():
    # segment of height r has area ~ (4 sqrt 2 / 3) r^(3/2)
    for r in (1e-3, 1e-4):
        assert mu_ball(1 - r) == pytest.approx(4 * math.sqrt(2) / (3 * math.pi) * r ** 1.5, rel=1e-2)
        assert mu_ball(1 - r) >= 2 * math.sqrt(2) / (3 * math.pi) * r ** 1.5


def test_mu_ball_strictly_decreasing():
    u = np.linspace(0.001, 0.999, 500)
    for d in (2, 3):
        assert np.all(np.diff(mu_ball(u, d)) < 0)


def test_ball_radius_inversion():
    for r in (0.3, 0.01, 1e-5):
        u = ball_radius_for_measure(r)
        assert mu_ball(u) == pytest.approx(r, rel=1e-8)


def test_mu_box_examples():
    assert mu_box([0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
    assert mu_box([0.5, 0.5]) == pytest.approx(0.5, abs=1e-9)
    for t in (0.05, 0.1, 0.2):
        m = mu_box([t, t])
        assert t * t <= m + 1e-12 and m <= 2 * t * t + 1e-9
    with pytest.raises(ValueError):
        mu_box([1.2, 0.3])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_mu_box_numeric_matches_closed_form(a, b):
    m = mu_box([a, b])
    assert m == pytest.approx(float(mu_box_closed([a, b])[0]), abs=1e-7)
    assert m <= 0.5 + 1e-9


def test_mu_box_3d_bounds():
    c = mu_box([0.5, 0.5, 0.5], 3)
    assert c == pytest.approx(0.5, abs=1e-6)
    t = 0.1
    corner = mu_box([t, t, t], 3)
    assert corner <= (3 * t) ** 3 / 6 + 1e-9       # diagonal corner simplex through x
    assert corner >= t ** 3 - 1e-9


def test_F_box_closed_form_matches_mc():
    rng = np.random.default_rng(0)
    rs = np.array([0.001, 0.01, 0.1])
    mc = F_curve(BOX, rs, 10 ** 6, rng)
    for r, v in zip(rs, mc):
        assert v == pytest.approx(F_box_exact(r), rel=0.03)


def test_theta_D_trivial_and_errors():
    assert theta_D(BALL, 1.0).theta == 1.0
    with pytest.raises(ValueError):
        theta_D(BALL, 0.1, grid_size=4)


def test_theta_D_ball_slope():
    sig = [2.0 ** -k for k in range(4, 13)]
    th = [theta_D(BALL, s, grid_size=256).theta for s in sig]
    assert abs(loglog_slope([1 / s for s in sig], th) - 1 / 3) <= 0.05


def test_theta_D_box_over_log():
    sig = [2.0 ** -k for k in range(4, 13)]
    rng = np.random.default_rng(1)
    # closed form: theta = 2(1 + ln(1/(2 sigma))), so theta / ln(1/sigma) = 2(1 - ln 2 + L)/L
    # with L = ln(1/sigma), largest at the top of the range
    bound = 2 * (1 - math.log(2) + math.log(16)) / math.log(16)
    ratios = [theta_D(BOX, s, 128, 10 ** 6, rng).theta / math.log(1 / s) for s in sig]
    assert max(ratios) <= bound * 1.02
    closed = [max(F_box_exact(r) / r for r in np.geomspace(s, 1, 256)) / math.log(1 / s) for s in sig]
    assert max(closed) <= bound + 1e-9
    assert closed == sorted(closed, reverse=True)


def test_F_curve_monotone():
    g = np.geomspace(1e-4, 1, 50)
    assert np.all(np.diff(F_curve(BALL, g)) >= 0)
    assert np.all(np.diff(F_curve(BOX, g, 10 ** 5, 0)) >= 0)


def test_volume_I_closed_forms():
    assert volume_I(1.0) == 1.0
    assert volume_I(0.01) == pytest.approx(0.056052, abs=1e-6)
    for r in (0.5, 0.01, 1e-4):
        assert volume_I(r) == pytest.approx(area_I2(r), rel=1e-9)
        assert volume_I(r, 3) == pytest.approx(volume_I3_closed(r), rel=1e-8)


def test_volume_I_mc_within_3se():
    for dim in (2, 3):
        p, se = volume_I_mc(0.01, dim, 10 ** 6, np.random.default_rng(dim))
        assert abs(p - volume_I(0.01, dim)) <= 3 * se


def test_cap_lower_bound():
    for k in range(1, 20):
        assert cap_lower_bound_holds(2.0 ** -k, 2)
        assert cap_lower_bound_holds(2.0 ** -k, 3)
    assert cone_fraction(0.5) < mu_ball(0.5)


def test_annulus_facts():
    rs = [2.0 ** -k for k in range(2, 12)]
    assert annulus_counterexamples(2 * 10 ** 5, rs, 2, np.random.default_rng(3)) == 0
    assert annulus_counterexamples(10 ** 5, rs, 3, np.random.default_rng(4)) == 0
    for r in rs:
        assert F_ball(r) <= annulus_F_bound(r, 2)
        assert F_ball(r, 3) <= annulus_F_bound(r, 3)
    assert annulus_constant(2) == pytest.approx(math.pi ** (2 / 3))


def test_monotone_cover_measure_and_c3():
    pts = np.array([[0.2, 0.3], [0.5, 0.5], [0.05, 0.9]])
    mu = monotone_cover_measure(pts)
    brute = []
    for x in pts:
        phis = np.linspace(0, math.pi / 2, 20001)
        a, b = np.cos(phis), np.sin(phis)
        c = a * x[0] + b * x[1]
        vals = [mu_box_region(ai, bi, ci) for ai, bi, ci in zip(a[::50], b[::50], c[::50])]
        brute.append(min(vals))
    assert np.all(mu <= np.array(brute) + 1e-6)
    assert prop_c3_counterexamples(20000, [2.0 ** -k for k in range(2, 10)], np.random.default_rng(5)) == 0


def mu_box_region(a, b, c):
    # area of {y in the unit square : a y1 + b y2 <= c} by a fine grid
    g = (np.arange(400) + 0.5) / 400
    Y1, Y2 = np.meshgrid(g, g)
    return float(np.mean(a * Y1 + b * Y2 <= c))


def test_bridging_small():
    res = bridging_check(BALL, 300, 1 / 20, 3, seed=2, samples=10 ** 5)
    assert len(res.rows) == 3 and 0 <= res.pass_rate <= 1
    easy = bridging_check(BALL, 10, 1 / 50, 2, seed=1)
    assert easy.pass_rate == 1.0 and all(r[1] == 1 for r in easy.rows)
    big = bridging_check(BALL, 10, 1, 2, seed=1)
    assert big.pass_rate == 1.0

from fractions import Fraction

import numpy as np
import pytest

from rangesum import report
from rangesum.experiments import (ExperimentConfig, eq1_violations, lower_bound_theta,
                                  loglog_slope, run)
from rangesum.generators import gen_box
from rangesum.rangespace import RangeSpace


def test_csv_header_and_fractions(tmp_path):
    p = report.write_csv(tmp_path / "t.csv", "demo", ["a", "b"], [(Fraction(1, 3), 0.5), (2, True)])
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "# schema=demo v1 columns=a,b"
    assert lines[2] == "1/3,0.5" and lines[3] == "2,1"
    cols, rows = report.read_csv(p)
    assert cols == ["a", "b"] and rows == [["1/3", "0.5"], ["2", "1"]]


def test_csv_text_matches_file(tmp_path):
    rows = [(1, Fraction(2, 5))]
    p = report.write_csv(tmp_path / "t.csv", "x", ["u", "v"], rows)
    assert p.read_text() == report.csv_text(["u", "v"], rows, "x")


def test_svg_well_formed(tmp_path):
    import xml.etree.ElementTree as ET

    p = report.line_chart(tmp_path / "c.svg", "t<1>", "x", "y", {"a": [(1, 1), (4, 2)]},
                          logx=True, logy=True, hlines={"ref": 1.5})
    root = ET.parse(p).getroot()
    assert root.tag.endswith("svg")
    report.line_chart(tmp_path / "b.svg", "bars", "x", "y", {"a": [(1, 3)], "b": [(1, 0)]}, bars=True)
    ET.parse(tmp_path / "b.svg")


def test_loglog_slope():
    xs = [2.0 ** k for k in range(1, 8)]
    assert loglog_slope(xs, [x ** (1 / 3) for x in xs]) == pytest.approx(1 / 3)


def test_config_validation():
    with pytest.raises(ValueError, match="unknown experiment"):
        ExperimentConfig("bogus")
    with pytest.raises(ValueError, match="trials"):
        ExperimentConfig("facts", trials=0)
    with pytest.raises(ValueError, match="non-empty"):
        ExperimentConfig("scaling-ball", sigmas=())


def test_eq1_violations_detects_bad_estimates():
    rs = RangeSpace.from_pointset(gen_box(20, 2, 0))
    num = rs.sizes.astype(object)
    den = np.full(len(rs), rs.n, dtype=object)
    assert not eq1_violations(rs, num, den, Fraction(1, 4), Fraction(1, 3)).any()
    zero = np.zeros(len(rs), dtype=object)
    bad = eq1_violations(rs, zero, den, Fraction(1, 4), Fraction(1, 3))
    # all-zero answers only fail where s/n > eps*rho
    assert bad.sum() == np.count_nonzero(rs.sizes * 12 > rs.n)


def test_lower_bound_theta_values():
    assert lower_bound_theta(4, 16, 1)[:2] == (Fraction(17, 5), Fraction(17, 5))


def test_run_lowerbound_outputs(tmp_path):
    res = run(ExperimentConfig("lowerbound", out=tmp_path, lower_bound=((4, 16, 1),)))
    assert res.ok and res.csv_path.exists() and res.svg_path.exists()
    cols, rows = report.read_csv(res.csv_path)
    assert cols[:4] == ["eta", "q", "k", "n"] and rows[0][4] == "17/5"


def test_run_reconstruct(tmp_path):
    res = run(ExperimentConfig("reconstruct", out=tmp_path))
    assert res.ok, [c for c in res.checks if not c.ok]
    assert len(res.rows) == 8


def test_run_scaling_small(tmp_path):
    res = run(ExperimentConfig("scaling-ball", n=256, trials=2, out=tmp_path,
                               sigmas=tuple(Fraction(1, 2 ** k) for k in range(2, 6))))
    assert len(res.rows) == 8 and len(res.checks) == 1
    assert all(r[4] >= 1 for r in res.rows)


def test_run_guarantee_small(tmp_path):
    res = run(ExperimentConfig("guarantee", kind="box", n=48, rhos=(Fraction(1, 8),), out=tmp_path))
    assert res.ok and len(res.rows) == 1


def test_run_size_small(tmp_path):
    res = run(ExperimentConfig("size-vs-baseline", n=512, trials=1, out=tmp_path,
                               rhos=(Fraction(1, 8), Fraction(1, 16))))
    assert len(res.rows) == 2 and all(r[4] > 0 for r in res.rows)


def test_experiment_seed_reproducible(tmp_path):
    cfg = dict(n=256, trials=1, sigmas=(Fraction(1, 8), Fraction(1, 16)))
    a = run(ExperimentConfig("scaling-box", out=tmp_path / "a", **cfg))
    b = run(ExperimentConfig("scaling-box", out=tmp_path / "b", **cfg))
    assert a.rows == b.rows
    assert a.csv_path.read_text() == b.csv_path.read_text()

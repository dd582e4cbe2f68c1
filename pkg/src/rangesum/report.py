"""CSV tables and static SVG charts.

CSV files start with a ``# schema=<name> v<version> columns=...`` comment
line, use commas and LF line endings.  Charts are rendered only from the
rows that go into the CSV.
"""
from __future__ import annotations

import csv
import math
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

SCHEMA_VERSION = 1
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def write_csv(path, schema: str, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={schema} v{SCHEMA_VERSION} columns={','.join(columns)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    return path


def read_csv(path) -> tuple[list, list]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rd = list(csv.reader(lines))
    return rd[0], rd[1:]


def csv_text(columns, rows, schema: str | None = None) -> str:
    out = []
    if schema:
        out.append(f"# schema={schema} v{SCHEMA_VERSION} columns={','.join(columns)}")
    out.append(",".join(columns))
    out.extend(",".join(_cell(v) for v in r) for r in rows)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

W, H = 640, 420
ML, MR, MT, MB = 70, 150, 40, 55


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log2(lo)), math.ceil(math.log2(hi))
        step = max(1, (b - a) // 8)
        return [2.0 ** e for e in range(a, b + 1, step)]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / 6
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-12:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v, log):
    if log:
        e = math.log2(v)
        return f"2^{int(round(e))}" if abs(e - round(e)) < 1e-9 else f"{v:.3g}"
    return f"{v:.3g}"


def line_chart(path, title: str, xlabel: str, ylabel: str, series: dict,
               logx: bool = False, logy: bool = False, hlines: dict | None = None,
               bars: bool = False) -> Path:
    """Render ``{label: [(x, y), ...]}`` as polylines (or bars)."""
    pts = [(x, y) for s in series.values() for x, y in s]
    if hlines:
        pts += [(pts[0][0] if pts else 1, v) for v in hlines.values()]
    xs = [p[0] for p in pts] or [0, 1]
    ys = [p[1] for p in pts] or [0, 1]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if not logy:
        y0 = min(0.0, y0)
    if x0 == x1:
        x0, x1 = (x0 / 2, x1 * 2) if logx else (x0 - 1, x1 + 1)
    if y0 == y1:
        y0, y1 = (y0 / 2, y1 * 2) if logy else (y0 - 1, y1 + 1)
    fx = (lambda v: math.log2(v)) if logx else (lambda v: v)
    fy = (lambda v: math.log2(v)) if logy else (lambda v: v)
    X0, X1, Y0, Y1 = fx(x0), fx(x1), fy(y0), fy(y1)
    pw, ph = W - ML - MR, H - MT - MB

    def sx(v):
        return ML + (fx(v) - X0) / (X1 - X0) * pw

    def sy(v):
        return MT + ph - (fy(v) - Y0) / (Y1 - Y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2 - MR / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for t in _ticks(x0, x1, logx):
        if x0 <= t <= x1:
            out.append(f'<line x1="{sx(t):.1f}" y1="{MT + ph}" x2="{sx(t):.1f}" y2="{MT + ph + 4}" stroke="#444"/>')
            out.append(f'<text x="{sx(t):.1f}" y="{MT + ph + 16}" text-anchor="middle">{_fmt(t, logx)}</text>')
    for t in _ticks(y0, y1, logy):
        if y0 <= t <= y1:
            out.append(f'<line x1="{ML - 4}" y1="{sy(t):.1f}" x2="{ML}" y2="{sy(t):.1f}" stroke="#444"/>')
            out.append(f'<text x="{ML - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{_fmt(t, logy)}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MT + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MT + ph / 2})">{escape(ylabel)}</text>')
    for k, (label, v) in enumerate((hlines or {}).items()):
        out.append(f'<line x1="{ML}" y1="{sy(v):.1f}" x2="{ML + pw}" y2="{sy(v):.1f}" '
                   f'stroke="#888" stroke-dasharray="5,4"/>')
        out.append(f'<text x="{ML + pw + 6}" y="{sy(v) + 4:.1f}" fill="#666">{escape(label)}</text>')
    nser = max(1, len(series))
    for k, (label, s) in enumerate(series.items()):
        col = PALETTE[k % len(PALETTE)]
        if bars:
            bw = pw / max(1, len(s)) / (nser + 1)
            for j, (x, y) in enumerate(s):
                cx = ML + (j + 0.5) * pw / len(s) + (k - nser / 2) * bw
                top = sy(y)
                out.append(f'<rect x="{cx:.1f}" y="{top:.1f}" width="{bw:.1f}" '
                           f'height="{MT + ph - top:.1f}" fill="{col}"/>')
        else:
            path_d = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in s)
            out.append(f'<polyline points="{path_d}" fill="none" stroke="{col}" stroke-width="1.6"/>')
            for x, y in s:
                out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="{col}"/>')
        ly = MT + 14 + 16 * k
        out.append(f'<rect x="{ML + pw + 8}" y="{ly - 8}" width="10" height="10" fill="{col}"/>')
        out.append(f'<text x="{ML + pw + 22}" y="{ly + 1}">{escape(str(label))}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path

"""Multi-round (rho, eps)-summaries.

Round i keeps the ranges that still look light:

* ``m_i`` counts points lying in every surviving range,
* ``X_i`` is the disagreement region of the surviving ranges,
* ``S_i`` is a uniform sample of ``X_i`` and
* a range survives round i iff ``Sbar_i(h)·|X_i| + m_i < n / 2^i``.

A query is answered from the last round the range survives.  Two
backends share this logic: an exact one over an enumerated
:class:`RangeSpace`, and a sweep one over :class:`ImplicitHalfplanes`
that finds ``X_{i+1}`` by rotating halfplanes around each point of
``X_i``.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .approx import (DEFAULT_C_SAMPLE, SampleSpec, as_fraction, ceil_log2, draw_sample,
                     multiplicities, round_sample_size, verify_relative_approx)
from .geom import CanonicalRange, Halfspace, PointSet, halfspace_mask
from .rangespace import ImplicitHalfplanes, RangeSpace, popcount, unpack_rows

MAGIC = b"RSUM"
FORMAT_VERSION = 1


class SummaryError(ValueError):
    pass


class RetryExhausted(SummaryError):
    def __init__(self, round_index: int, retries: int):
        super().__init__(f"round {round_index}: no verified sample after {retries} draws")
        self.round_index = round_index


@dataclass(frozen=True)
class SummaryParams:
    rho: Fraction
    eps: Fraction
    delta: Fraction = Fraction(1, 10)
    lam: int | None = None
    c_sample: float = DEFAULT_C_SAMPLE
    verified_build: bool = False
    sample_based_fix: bool = True
    max_retries: int = 50

    def __post_init__(self):
        for name in ("rho", "eps", "delta"):
            v = as_fraction(getattr(self, name))
            object.__setattr__(self, name, v)
            if not 0 < v < 1:
                raise SummaryError(f"{name} must lie in (0, 1), got {v}")
        if not self.c_sample > 0:
            raise SummaryError("c_sample must be positive")


@dataclass(eq=False)
class SummaryLevel:
    i: int
    m: int
    x_size: int
    sample: np.ndarray          # (k, d) distinct stored points, grid units
    mult: np.ndarray            # (k,) multiplicities
    witness_point: tuple | None = None
    sample_indices: np.ndarray | None = field(default=None, repr=False)

    @property
    def sample_size(self) -> int:
        return int(self.mult.sum())

    def __eq__(self, other):
        if not isinstance(other, SummaryLevel):
            return NotImplemented
        return (self.i == other.i and self.m == other.m and self.x_size == other.x_size
                and np.array_equal(self.sample, other.sample)
                and np.array_equal(self.mult, other.mult)
                and self.witness_point == other.witness_point)


@dataclass(eq=False)
class Summary:
    n: int
    dim: int
    grid_scale: int
    t: int
    eps_internal: Fraction
    rho_effective: Fraction
    levels: list
    params: SummaryParams
    # introspection only: surviving-range masks R_0..R_t (exact backend)
    # or X_i masks (sweep backend); never serialised
    alive: list | None = field(default=None, repr=False)
    x_masks: list | None = field(default=None, repr=False)

    def __eq__(self, other):
        if not isinstance(other, Summary):
            return NotImplemented
        return (self.n == other.n and self.dim == other.dim
                and self.grid_scale == other.grid_scale and self.t == other.t
                and self.eps_internal == other.eps_internal
                and self.rho_effective == other.rho_effective
                and self.params == other.params and self.levels == other.levels)

    def level(self, i: int) -> SummaryLevel:
        if not 1 <= i <= self.t:
            raise SummaryError(f"round {i} outside 1..{self.t}")
        return self.levels[i - 1]


def _resolve_lambda(params: SummaryParams, rs) -> int:
    return rs.vc_dim if params.lam is None else int(params.lam)


def _make_level(i, m, x_size, idx, ps: PointSet, witness):
    idx = np.asarray(idx, dtype=np.int64)
    uniq, counts = np.unique(idx, return_counts=True)
    sample = ps.coords[uniq].copy() if len(uniq) else np.zeros((0, ps.dim), dtype=np.int64)
    return SummaryLevel(i, int(m), int(x_size), sample, counts.astype(np.int64),
                        witness, idx)


def _survives(counts, X: int, S: int, m: int, i: int, n: int) -> np.ndarray:
    """Exact test Sbar·X + m < n/2^i with Sbar = counts/S (0 if S = 0)."""
    scale = 1 << i
    if S == 0:
        return np.full(np.shape(counts), m * scale < n, dtype=bool)
    c = np.asarray(counts, dtype=np.int64)
    if (int(c.max(initial=0)) * X + m * S) * scale < (1 << 62):
        return c * X * scale + m * S * scale < n * S
    c = c.astype(object)
    return np.asarray(c * X * scale + m * S * scale < n * S, dtype=bool)


def _draw_round(rs, xmask, X, size, i, n, eps_int, params, rng):
    if X > 0 and size >= X:
        # capped: S_i = X_i itself
        return np.flatnonzero(xmask)
    idx = draw_sample(xmask, size, rng)
    if not params.verified_build or X == 0:
        return idx
    if not isinstance(rs, RangeSpace):
        raise SummaryError("verified build needs an enumerated range space")
    rho_i = Fraction(n) * (1 + eps_int) / ((1 << i) * X)
    for _ in range(params.max_retries):
        if verify_relative_approx(idx, rs, rho_i, eps_int / 4, ground=xmask).ok:
            return idx
        idx = draw_sample(xmask, size, rng)
    raise RetryExhausted(i, params.max_retries)


def build(rs, params: SummaryParams, rng=None) -> Summary:
    """Run the shrinking rounds and return the summary.

    ``rs`` is a :class:`RangeSpace` (exact) or :class:`ImplicitHalfplanes`
    (sweep).  ``rng`` is a numpy Generator or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = rs.n
    if n == 0:
        raise SummaryError("cannot summarise an empty point set")
    eps_int = min(params.eps, Fraction(1, 3))
    rho_eff = max(params.rho, rs.sigma_min())
    t_max = max(1, ceil_log2(1 / rho_eff))
    spec = SampleSpec(rho_eff if rho_eff < 1 else Fraction(1, 2), eps_int / 4, params.delta,
                      _resolve_lambda(params, rs), params.c_sample)
    if isinstance(rs, ImplicitHalfplanes):
        levels, masks = _build_sweep(rs, params, spec, eps_int, rho_eff, t_max, rng)
        return Summary(n, rs.ps.dim, rs.ps.grid_scale, len(levels), eps_int, rho_eff,
                       levels, params, None, masks)
    ps = rs.ps
    alive = np.ones(len(rs), dtype=bool)
    alive_masks = [alive.copy()]
    x_masks = []
    levels = []
    for i in range(1, t_max + 1):
        u, inter = rs.union_intersection(alive)
        m = int(popcount(inter))
        xmask = unpack_rows(u & ~inter, n)[0]
        X = int(xmask.sum())
        size = round_sample_size(spec, Fraction(X, n), i, rho_eff, x_size=X)
        idx = _draw_round(rs, xmask, X, size, i, n, eps_int, params, rng)
        mult = multiplicities(idx, n)
        S = int(mult.sum())
        counts = rs.weighted_counts(mult)
        alive = alive & _survives(counts, X, S, m, i, n)
        witness = None
        if params.sample_based_fix and m > 0:
            witness = ps.point(int(np.flatnonzero(unpack_rows(inter, n)[0])[0]))
        levels.append(_make_level(i, m, X, idx, ps, witness))
        alive_masks.append(alive.copy())
        x_masks.append(xmask)
        if not alive.any():
            break
    return Summary(n, ps.dim, ps.grid_scale, len(levels), eps_int, rho_eff, levels, params,
                   alive_masks, x_masks)


def _build_sweep(fam: ImplicitHalfplanes, params, spec, eps_int, rho_eff, t_max, rng):
    """Sweep backend: the empty range always survives, so m_i = 0 and
    X_{i+1} = points covered by some surviving range.  A point x is covered
    by a surviving range iff some generic closed halfplane with x on its
    boundary survives (shrink any surviving range onto x; counts only drop).
    """
    if params.verified_build:
        raise SummaryError("verified build needs an enumerated range space")
    ps = fam.ps
    n = ps.n
    index = fam.index
    xmask = np.ones(n, dtype=bool)
    windows: dict[int, np.ndarray] = {}
    levels, masks = [], []
    for i in range(1, t_max + 1):
        X = int(xmask.sum())
        size = round_sample_size(spec, Fraction(X, n), i, rho_eff, x_size=X)
        idx = _draw_round(fam, xmask, X, size, i, n, eps_int, params, rng)
        mult = multiplicities(idx, n)
        S = int(mult.sum())
        levels.append(_make_level(i, 0, X, idx, ps, None))
        masks.append(xmask)
        if i == t_max:
            break
        nxt = np.zeros(n, dtype=bool)
        for a in np.flatnonzero(xmask):
            cnt = index.window_counts(int(a), mult)
            ok = _survives(cnt, X, S, 0, i, n)
            prev = windows.get(int(a))
            if prev is not None:
                ok &= prev
            if ok.any():
                windows[int(a)] = ok
                nxt[a] = True
            else:
                windows.pop(int(a), None)
        for a in list(windows):
            if not nxt[a]:
                del windows[a]
        xmask = nxt
        # R_i always contains the empty range, so the loop never stops early
    return levels, masks


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def level_counts(summary: Summary, h, ps: PointSet | None = None) -> list[int]:
    """Weighted count of stored sample points of each level inside ``h``."""
    out = []
    for lv in summary.levels:
        if isinstance(h, Halfspace):
            inside = halfspace_mask(h, lv.sample)
            out.append(int(lv.mult[inside].sum()))
        elif isinstance(h, CanonicalRange):
            if lv.sample_indices is None:
                raise SummaryError("canonical ranges need an in-memory summary; pass a Halfspace")
            out.append(int(np.count_nonzero(h.trace[lv.sample_indices])))
        else:
            raise TypeError("h must be a Halfspace or CanonicalRange")
    return out


def _alive_sequence(summary: Summary, counts: list[int]) -> list[bool]:
    seq = []
    alive = True
    for lv, c in zip(summary.levels, counts):
        alive = alive and bool(_survives(np.array([c]), lv.x_size, lv.sample_size,
                                         lv.m, lv.i, summary.n)[0])
        seq.append(alive)
    return seq


def membership(summary: Summary, h, i: int) -> bool:
    """Whether ``h`` is in R_i by the sequential rule."""
    summary.level(i)
    return _alive_sequence(summary, level_counts(summary, h))[i - 1]


def last_level(summary: Summary, h) -> int:
    seq = _alive_sequence(summary, level_counts(summary, h))
    j = 1
    for k, a in enumerate(seq, start=1):
        if a:
            j = k
    return j


def _tau(summary: Summary, j: int, count: int) -> Fraction:
    lv = summary.levels[j - 1]
    n = summary.n
    if lv.sample_size == 0:
        return Fraction(lv.m, n)
    return Fraction(count * lv.x_size, n * lv.sample_size) + Fraction(lv.m, n)


def estimate(summary: Summary, h) -> Fraction:
    """Estimate of the covered fraction, from the last round h survives.

    A range removed already in round 1 is answered from round 1.
    """
    counts = level_counts(summary, h)
    seq = _alive_sequence(summary, counts)
    j = max((k for k, a in enumerate(seq, start=1) if a), default=1)
    return _tau(summary, j, counts[j - 1])


def estimate_all(summary: Summary, rs: RangeSpace):
    """Vectorised estimates for every range of ``rs``: (num, den, j) arrays.

    ``tau = num / den`` exactly; ``j`` is the level used.
    """
    R = len(rs)
    alive = np.ones(R, dtype=bool)
    j = np.ones(R, dtype=np.int64)
    cnts = []
    for lv in summary.levels:
        if lv.sample_indices is None:
            raise SummaryError("estimate_all needs an in-memory summary")
        c = rs.weighted_counts(multiplicities(lv.sample_indices, rs.n))
        cnts.append(c)
        alive = alive & _survives(c, lv.x_size, lv.sample_size, lv.m, lv.i, summary.n)
        j[alive] = lv.i
    num = np.zeros(R, dtype=object)
    den = np.zeros(R, dtype=object)
    for lv, c in zip(summary.levels, cnts):
        sel = j == lv.i
        if not sel.any():
            continue
        S = lv.sample_size
        if S == 0:
            num[sel] = lv.m
            den[sel] = summary.n
        else:
            num[sel] = c[sel].astype(object) * lv.x_size + lv.m * S
            den[sel] = summary.n * S
    return num, den, j


def stored_point_count(summary: Summary) -> int:
    """Total number of sample points over all levels, with multiplicity."""
    return sum(lv.sample_size for lv in summary.levels)


def stored_points(summary: Summary) -> np.ndarray:
    """All distinct stored coordinates (samples and witness points)."""
    parts = [lv.sample for lv in summary.levels]
    parts += [np.array([lv.witness_point]) for lv in summary.levels if lv.witness_point]
    if not parts:
        return np.zeros((0, summary.dim), dtype=np.int64)
    return np.unique(np.concatenate(parts), axis=0)


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

_HEAD = struct.Struct("<4sHBQH" + "Q" * 11 + "IqdB")
_LEVEL = struct.Struct("<HQQQ")


def _frac(x: Fraction) -> tuple[int, int]:
    return x.numerator, x.denominator


def serialize(summary: Summary) -> bytes:
    """Versioned little-endian binary encoding with a trailing CRC32."""
    p = summary.params
    lam = -1 if p.lam is None else p.lam
    flags = (1 if p.verified_build else 0) | (2 if p.sample_based_fix else 0)
    parts = [_HEAD.pack(MAGIC, FORMAT_VERSION, summary.dim, summary.n, summary.t,
                        *_frac(p.eps), *_frac(p.rho), *_frac(summary.eps_internal),
                        *_frac(summary.rho_effective), *_frac(p.delta), summary.grid_scale,
                        p.max_retries, lam, p.c_sample, flags)]
    d = summary.dim
    for lv in summary.levels:
        parts.append(_LEVEL.pack(lv.i, lv.m, lv.x_size, len(lv.mult)))
        ent = struct.Struct("<" + "q" * d + "I")
        for row, c in zip(lv.sample, lv.mult):
            parts.append(ent.pack(*(int(v) for v in row), int(c)))
        if lv.witness_point is None:
            parts.append(b"\x00")
        else:
            parts.append(b"\x01" + struct.pack("<" + "q" * d, *lv.witness_point))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def deserialize(data: bytes) -> Summary:
    if len(data) < _HEAD.size + 4:
        raise SummaryError("truncated summary")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if data[:4] != MAGIC:
        raise SummaryError("bad magic bytes")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise SummaryError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise SummaryError("checksum mismatch")
    h = _HEAD.unpack_from(body, 0)
    (_, _, dim, n, t, en, ed, rn, rd, ein, eid, ren, red, dn, dd, scale, retries, lam,
     c_sample, flags) = h
    if t < 1:
        raise SummaryError("malformed summary: empty levels list")
    params = SummaryParams(Fraction(rn, rd), Fraction(en, ed), Fraction(dn, dd),
                           None if lam < 0 else lam, c_sample, bool(flags & 1),
                           bool(flags & 2), retries)
    off = _HEAD.size
    ent = struct.Struct("<" + "q" * dim + "I")
    wst = struct.Struct("<" + "q" * dim)
    levels = []
    try:
        for _ in range(t):
            i, m, x_size, k = _LEVEL.unpack_from(body, off)
            off += _LEVEL.size
            rows = np.zeros((k, dim), dtype=np.int64)
            mult = np.zeros(k, dtype=np.int64)
            for r in range(k):
                vals = ent.unpack_from(body, off)
                off += ent.size
                rows[r] = vals[:dim]
                mult[r] = vals[dim]
            flag = body[off]
            off += 1
            witness = None
            if flag:
                witness = tuple(wst.unpack_from(body, off))
                off += wst.size
            levels.append(SummaryLevel(i, m, x_size, rows, mult, witness))
    except (struct.error, IndexError) as exc:
        raise SummaryError("truncated summary") from exc
    if off != len(body):
        raise SummaryError("malformed summary: trailing bytes")
    if [lv.i for lv in levels] != list(range(1, t + 1)):
        raise SummaryError("malformed summary: levels not indexed 1..t")
    return Summary(n, dim, scale, t, Fraction(ein, eid), Fraction(ren, red), levels, params)


def to_json(summary: Summary) -> str:
    """Readable mirror of the binary format (debugging aid)."""
    p = summary.params
    doc = {
        "n": summary.n, "dim": summary.dim, "grid_scale": summary.grid_scale,
        "t": summary.t, "eps_internal": str(summary.eps_internal),
        "rho_effective": str(summary.rho_effective),
        "params": {"rho": str(p.rho), "eps": str(p.eps), "delta": str(p.delta),
                   "lambda": p.lam, "c_sample": p.c_sample,
                   "verified_build": p.verified_build, "sample_based_fix": p.sample_based_fix},
        "levels": [{"i": lv.i, "m": lv.m, "x_size": lv.x_size,
                    "sample": [[*map(int, r), int(c)] for r, c in zip(lv.sample, lv.mult)],
                    "witness_point": None if lv.witness_point is None else list(lv.witness_point)}
                   for lv in summary.levels],
    }
    return json.dumps(doc, indent=1)


def write_summary(summary: Summary, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(summary))


def read_summary(path) -> Summary:
    with open(path, "rb") as fh:
        return deserialize(fh.read())

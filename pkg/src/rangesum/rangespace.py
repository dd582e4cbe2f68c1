"""Finite range spaces ``(X, R|X)`` with bitset traces.

Traces are held twice: as a dense boolean matrix (for matrix-vector
counting) and as packed uint64 words (for word-parallel set algebra).
All coverage quantities are exact integers or :class:`fractions.Fraction`.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .geom import (CanonicalRange, GeometryError, PointSet, enumerate_traces,
                   ranges_from_traces, witness_halfspace)


def pack_rows(rows: np.ndarray) -> np.ndarray:
    """Pack boolean rows into little-endian uint64 words."""
    rows = np.atleast_2d(np.asarray(rows, dtype=bool))
    R, n = rows.shape
    W = max(1, (n + 63) // 64)
    padded = np.zeros((R, W * 64), dtype=bool)
    padded[:, :n] = rows
    by = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(by).view(np.uint64).reshape(R, W)


def unpack_rows(words: np.ndarray, n: int) -> np.ndarray:
    words = np.atleast_2d(words)
    by = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(by, axis=1, bitorder="little")[:, :n].astype(bool)


def popcount(words: np.ndarray) -> np.ndarray:
    """Row-wise population count of packed words."""
    return np.bitwise_count(words).sum(axis=-1).astype(np.int64)


class RangeSpace:
    """A point set together with all its distinct halfspace traces."""

    def __init__(self, ps: PointSet, traces: np.ndarray, meta, halfspaces=None,
                 vc_dim: int | None = None, mode: str = "exact"):
        traces = np.asarray(traces, dtype=bool)
        if traces.ndim != 2 or traces.shape[1] != ps.n:
            raise GeometryError("trace matrix must be R x n")
        self.ps = ps
        self.mode = mode
        self.dense = traces
        self.dense.setflags(write=False)
        self.words = pack_rows(traces)
        self.words.setflags(write=False)
        self.sizes = traces.sum(axis=1).astype(np.int64)
        self.vc_dim = ps.dim + 1 if vc_dim is None else int(vc_dim)
        self._meta = meta
        self._hs = halfspaces
        self._ranges: list[CanonicalRange] | None = None

    @classmethod
    def from_pointset(cls, ps: PointSet, mode: str = "exact", vc_dim: int | None = None,
                      **kw) -> "RangeSpace":
        traces, meta, hs = enumerate_traces(ps, mode, **kw)
        return cls(ps, traces, meta, hs, vc_dim, mode)

    @classmethod
    def from_traces(cls, ps: PointSet, traces, vc_dim: int | None = None) -> "RangeSpace":
        """Diagnostic family built from arbitrary traces (no geometric witnesses)."""
        traces = np.atleast_2d(np.asarray(traces, dtype=bool))
        meta = [("custom", (), 0, None)] * len(traces)
        return cls(ps, traces, meta, None, vc_dim, "custom")

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.ps.n

    def __len__(self) -> int:
        return self.dense.shape[0]

    @property
    def ranges(self) -> list[CanonicalRange]:
        if self._ranges is None:
            self._ranges = ranges_from_traces(self.dense, self._meta, self._hs)
        return self._ranges

    def index_of(self, r) -> int:
        if isinstance(r, CanonicalRange):
            return r.index
        return int(r)

    def find_trace(self, members: Iterable[int]) -> int:
        """Index of the range whose trace is exactly ``members`` (or -1)."""
        row = np.zeros(self.n, dtype=bool)
        row[list(members)] = True
        w = pack_rows(row)[0]
        hit = np.flatnonzero(np.all(self.words == w, axis=1))
        return int(hit[0]) if hit.size else -1

    def empty_index(self) -> int:
        hit = np.flatnonzero(self.sizes == 0)
        return int(hit[0]) if hit.size else -1

    def witness(self, r):
        return witness_halfspace(self.ps, self.ranges[self.index_of(r)])

    # -- exact queries ------------------------------------------------------

    def fraction(self, r) -> Fraction:
        return Fraction(int(self.sizes[self.index_of(r)]), self.n)

    def fraction_pair(self, r) -> tuple[int, int]:
        return int(self.sizes[self.index_of(r)]), self.n

    def symdiff_count(self, r1, r2) -> int:
        a, b = self.words[self.index_of(r1)], self.words[self.index_of(r2)]
        return int(popcount(a ^ b))

    def symdiff_all(self, r) -> np.ndarray:
        """|trace(r) Δ trace(h)| for every range h."""
        return popcount(self.words ^ self.words[self.index_of(r)])

    def _subset_words(self, subset) -> np.ndarray:
        idx = self._indices(subset)
        if idx.size == 0:
            raise ValueError("subset must be non-empty")
        return self.words[idx]

    def _indices(self, subset) -> np.ndarray:
        if isinstance(subset, np.ndarray) and subset.dtype == bool:
            return np.flatnonzero(subset)
        return np.asarray([self.index_of(r) for r in subset], dtype=np.int64)

    def union_intersection(self, subset) -> tuple[np.ndarray, np.ndarray]:
        w = self._subset_words(subset)
        return np.bitwise_or.reduce(w, axis=0), np.bitwise_and.reduce(w, axis=0)

    def dis_region(self, subset) -> np.ndarray:
        """Boolean mask of points covered by some but not all ranges."""
        u, i = self.union_intersection(subset)
        return unpack_rows(u & ~i, self.n)[0]

    def common_intersection_count(self, subset) -> int:
        _, i = self.union_intersection(subset)
        return int(popcount(i))

    def common_intersection(self, subset) -> np.ndarray:
        _, i = self.union_intersection(subset)
        return unpack_rows(i, self.n)[0]

    def sigma_min(self) -> Fraction:
        return Fraction(int(self.sizes.min()), self.n)

    def weighted_counts(self, weights: np.ndarray, rows=None) -> np.ndarray:
        """Sum of point weights inside each trace (exact int64)."""
        w = np.asarray(weights, dtype=np.int64)
        dense = self.dense if rows is None else self.dense[rows]
        if w.size and int(w.max(initial=0)) * self.n < (1 << 52):
            return np.rint(dense @ w.astype(np.float64)).astype(np.int64)
        return dense.astype(np.int64) @ w

    # -- diagnostics ----------------------------------------------------------

    def dump_hex(self) -> str:
        """One hex-encoded bitset per line (bit i = point i, little-endian)."""
        lines = []
        for row in self.words:
            lines.append("".join(f"{int(w):016x}" for w in row[::-1]).lstrip("0") or "0")
        return "\n".join(lines) + "\n"


def fraction(rs: RangeSpace, r) -> Fraction:
    return rs.fraction(r)


def symdiff_count(rs: RangeSpace, h1, h2) -> int:
    return rs.symdiff_count(h1, h2)


def dis_region(rs: RangeSpace, subset) -> np.ndarray:
    return rs.dis_region(subset)


def common_intersection_count(rs: RangeSpace, subset) -> int:
    return rs.common_intersection_count(subset)


def subset_mask(n: int, members: Sequence[int]) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    m[list(members)] = True
    return m


class ImplicitHalfplanes:
    """All halfplane traces of a planar set, never materialised.

    Stands in for a :class:`RangeSpace` when n is too large to enumerate
    the O(n^2) traces.  Queries go through an :class:`AngularIndex`
    (rotational sweeps around each point), which is built lazily and
    shared between summaries and coverage profiles of the same set.
    """

    mode = "implicit"

    def __init__(self, ps: PointSet, vc_dim: int | None = None):
        if ps.dim != 2:
            raise GeometryError("implicit halfplane family needs dim = 2")
        self.ps = ps
        self.vc_dim = 3 if vc_dim is None else int(vc_dim)
        self._index = None

    @property
    def n(self) -> int:
        return self.ps.n

    @property
    def index(self):
        if self._index is None:
            from .geom import AngularIndex
            self._index = AngularIndex(self.ps)
        return self._index

    def sigma_min(self) -> Fraction:
        return Fraction(0, 1)

"""Exact geometric primitives on integer-snapped point sets.

Points live on an integer grid (``real = grid / grid_scale``) so that every
predicate is an integer computation.  Vectorised predicates run in int64 when
the operand bounds allow it and fall back to Python integers (object arrays)
otherwise.

The central routine is :func:`enumerate_canonical_ranges`, which lists every
distinct trace ``X ∩ h`` over all open and closed halfplanes (halfspaces in
3D).  Each trace carries enough data to rebuild an exact witness halfspace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cmp_to_key
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

COORD_LIMIT = 1 << 40
DEFAULT_GRID_SCALE = 1 << 20
EXACT_3D_CAP = 300
# below this bound on coordinate differences, float atan2 of primitive
# direction vectors separates distinct directions by far more than one ulp
_FAST_ANGLE_LIMIT = 1 << 22
_ANGLE_TOL = 1e-14


class GeometryError(ValueError):
    """Invalid geometric input (bounds, dimensions, degeneracy)."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PointSet:
    """A multiset of grid points in 2D or 3D."""

    dim: int
    coords: np.ndarray
    grid_scale: int = DEFAULT_GRID_SCALE

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GeometryError(f"dim must be 2 or 3, got {self.dim}")
        if self.grid_scale <= 0:
            raise GeometryError("grid_scale must be positive")
        raw = np.asarray(self.coords)
        if raw.size == 0:
            arr = np.zeros((0, self.dim), dtype=np.int64)
        else:
            if raw.dtype.kind == "f":
                if not np.all(raw == np.round(raw)):
                    raise GeometryError("grid coordinates must be integers")
            arr = np.array(raw, dtype=object).reshape(-1, self.dim)
            for i, row in enumerate(arr):
                for v in row:
                    if abs(int(v)) >= COORD_LIMIT:
                        raise GeometryError(f"coordinate overflow at index {i}", i)
            arr = np.asarray(raw, dtype=np.int64).reshape(-1, self.dim)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.dim == other.dim and self.grid_scale == other.grid_scale
                and np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash((self.dim, self.grid_scale, self.coords.tobytes()))

    def real(self) -> np.ndarray:
        """Coordinates in real units (float64)."""
        return self.coords.astype(np.float64) / self.grid_scale

    def point(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.coords[i])

    # -- file format --------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"d={self.dim} scale={self.grid_scale} n={self.n}"]
        lines.extend(" ".join(str(int(v)) for v in row) for row in self.coords)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PointSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise GeometryError("empty point file")
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        try:
            dim, scale, n = int(header["d"]), int(header["scale"]), int(header["n"])
        except (KeyError, ValueError) as exc:
            raise GeometryError(f"malformed header: {lines[0]!r}") from exc
        body = lines[1:]
        if len(body) != n:
            raise GeometryError(f"header says n={n} but file has {len(body)} points")
        rows = []
        for ln in body:
            vals = [int(tok) for tok in ln.split()]
            if len(vals) != dim:
                raise GeometryError(f"expected {dim} coordinates, got {ln!r}")
            rows.append(vals)
        return cls(dim, np.array(rows, dtype=object).reshape(-1, dim), scale)

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), newline="\n")

    @classmethod
    def read(cls, path) -> "PointSet":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class Halfspace:
    """``{y : <normal, y> >= offset}`` (closed) or ``> offset`` (open)."""

    normal: tuple
    offset: int
    closed: bool = True

    def __post_init__(self):
        nrm = tuple(int(v) for v in self.normal)
        if not any(nrm):
            raise GeometryError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", nrm)
        object.__setattr__(self, "offset", int(self.offset))

    @property
    def dim(self) -> int:
        return len(self.normal)


@dataclass(frozen=True, eq=False)
class CanonicalRange:
    """One representative per distinct trace.

    ``pivots`` are point indices defining the supporting line (plane);
    ``side`` is +1/-1 for the strict side that is included; ``cut`` says
    which points on the supporting line (plane) are included, as a
    ``("prefix"|"suffix", j)`` pair along the line in 2D or as a nested
    planar descriptor in 3D.  ``halfspace`` is set directly for sampled
    ranges.  ``trace`` is a boolean row shared with the owning matrix.
    """

    index: int
    kind: str
    pivots: tuple
    side: int
    cut: tuple | None
    trace: np.ndarray
    halfspace: Halfspace | None = None

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.trace))

    def members(self) -> np.ndarray:
        return np.flatnonzero(self.trace)


# ---------------------------------------------------------------------------
# Snapping and predicates
# ---------------------------------------------------------------------------


def snap_points(raw, grid_scale: int = DEFAULT_GRID_SCALE, dim: int | None = None) -> PointSet:
    """Round real coordinates to the grid; order and duplicates preserved."""
    if grid_scale <= 0:
        raise GeometryError("grid_scale must be positive")
    arr = np.asarray(raw, dtype=np.float64)
    if arr.size == 0:
        return PointSet(dim or 2, np.zeros((0, dim or 2), dtype=np.int64), grid_scale)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    scaled = arr * grid_scale
    bad = ~np.all(np.isfinite(scaled) & (np.abs(scaled) < COORD_LIMIT - 1), axis=1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise GeometryError(f"coordinate overflow at index {i}", i)
    grid = np.floor(scaled + 0.5).astype(np.int64)
    return PointSet(arr.shape[1], grid, grid_scale)


def orientation(p: int, q: int, r: int, ps: PointSet) -> int:
    """Sign of det(q - p, r - p)."""
    if ps.dim != 2:
        raise GeometryError("orientation needs dim = 2")
    (px, py), (qx, qy), (rx, ry) = ps.point(p), ps.point(q), ps.point(r)
    det = (qx - px) * (ry - py) - (qy - py) * (rx - px)
    return (det > 0) - (det < 0)


def _dot_int(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(int(x) * int(y) for x, y in zip(a, b))


def halfspace_contains(h: Halfspace, x: int, ps: PointSet) -> bool:
    if h.dim != ps.dim:
        raise GeometryError("dimension mismatch")
    v = _dot_int(h.normal, ps.point(x))
    return v >= h.offset if h.closed else v > h.offset


def exact_dot(coords: np.ndarray, normal: Sequence[int]) -> np.ndarray:
    """Row-wise <coords, normal>, exact (int64 when safe, else object)."""
    coords = np.asarray(coords)
    nrm = [int(v) for v in normal]
    cmax = int(np.abs(coords).max()) if coords.size else 0
    nmax = max(abs(v) for v in nrm)
    if cmax * nmax * len(nrm) < (1 << 62):
        return coords.astype(np.int64) @ np.asarray(nrm, dtype=np.int64)
    obj = coords.astype(object)
    out = np.zeros(len(coords), dtype=object)
    for j, v in enumerate(nrm):
        out = out + obj[:, j] * v
    return out


def halfspace_mask(h: Halfspace, coords: np.ndarray) -> np.ndarray:
    """Boolean membership of each row of ``coords`` in ``h``."""
    if len(coords) == 0:
        return np.zeros(0, dtype=bool)
    vals = exact_dot(coords, h.normal)
    res = vals >= h.offset if h.closed else vals > h.offset
    return np.asarray(res, dtype=bool)


def affine_transform(ps: PointSet, matrix, shift, grid_scale: int | None = None) -> PointSet:
    """Map real coordinates by ``x -> matrix @ x + shift`` and re-snap."""
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.shape != (ps.dim, ps.dim):
        raise GeometryError("matrix shape does not match dim")
    if np.linalg.matrix_rank(mat) < ps.dim:
        raise GeometryError("affine matrix is singular")
    vec = np.asarray(shift, dtype=np.float64).reshape(ps.dim)
    out = ps.real() @ mat.T + vec
    return snap_points(out.reshape(-1, ps.dim), grid_scale or ps.grid_scale, ps.dim)


# ---------------------------------------------------------------------------
# Radial order around an anchor
# ---------------------------------------------------------------------------


def _half_plane_key(v):
    x, y = v
    return 0 if (y > 0 or (y == 0 and x > 0)) else 1


def _cmp_dir(u, v) -> int:
    hu, hv = _half_plane_key(u), _half_plane_key(v)
    if hu != hv:
        return hu - hv
    c = u[0] * v[1] - u[1] * v[0]
    return -1 if c > 0 else (1 if c < 0 else 0)


def radial_classes(coords: np.ndarray, a: int):
    """Direction classes of all points as seen from ``coords[a]``.

    Returns ``(cls, K, mult)``: ``cls[j]`` is the index of the direction of
    point j among the K sorted critical directions (-1 for points coinciding
    with the anchor) and ``mult[j]`` increases with distance along a fixed
    direction.  The critical set is closed under negation, so K is even and
    class ``k + K/2`` is the antipode of class ``k``.
    """
    d = coords - coords[a]
    nz = (d[:, 0] != 0) | (d[:, 1] != 0)
    n = len(coords)
    cls = np.full(n, -1, dtype=np.int64)
    mult = np.abs(d).max(axis=1)
    if not nz.any():
        return cls, 0, mult
    dn = d[nz]
    span = int(mult.max())
    if span < _FAST_ANGLE_LIMIT:
        # distinct directions differ in angle by >= 1/|u||v| > 2.8e-14, while
        # float atan2 (and the +-pi shift) is off by a few 1e-16
        ang = np.arctan2(dn[:, 1], dn[:, 0])
        anti = np.where(ang > 0, ang - np.pi, ang + np.pi)
        allv = np.concatenate([ang, anti])
        order = np.argsort(allv, kind="stable")
        sv = allv[order]
        start = np.empty(len(sv), dtype=bool)
        start[0] = True
        start[1:] = np.diff(sv) > _ANGLE_TOL
        gid = np.cumsum(start) - 1
        lab = np.empty(len(sv), dtype=np.int64)
        lab[order] = gid
        cls[nz] = lab[: len(dn)]
        K = int(gid[-1]) + 1
    else:
        g = np.gcd(dn[:, 0], dn[:, 1])
        prim = dn // g[:, None]
        vecs = {(int(x), int(y)) for x, y in prim}
        vecs |= {(-x, -y) for x, y in vecs}
        order = sorted(vecs, key=cmp_to_key(_cmp_dir))
        rank = {v: i for i, v in enumerate(order)}
        cls[nz] = [rank[(int(x), int(y))] for x, y in prim]
        K = len(order)
    return cls, K, mult


class AngularIndex:
    """Cached radial classes for every anchor of a planar point set.

    Used by rotational sweeps: for an anchor x and integer point weights
    w, :meth:`window_counts` gives the total weight in the closed halfplane
    through x for every generic normal direction (one entry per angular
    gap between consecutive critical directions).
    """

    def __init__(self, ps: PointSet):
        if ps.dim != 2:
            raise GeometryError("AngularIndex needs dim = 2")
        self.ps = ps
        n = ps.n
        dtype = np.int16 if 2 * n < 32767 else np.int32
        self.cls = np.empty((n, n), dtype=dtype)
        self.K = np.empty(n, dtype=np.int64)
        coords = ps.coords
        for a in range(n):
            c, K, _ = radial_classes(coords, a)
            self.cls[a] = c
            self.K[a] = K

    @property
    def n(self) -> int:
        return self.ps.n

    def window_counts(self, a: int, weights: np.ndarray) -> np.ndarray:
        """Weighted counts of closed halfplanes bounded by lines through ``a``.

        Entry k is for a boundary direction b in the open gap between
        critical directions C[k] and C[k+1]; the halfplane is the set of
        points whose direction from ``a`` lies in (b, b + pi), which is
        classes k+1 .. k+K/2 (cyclically).  Points coinciding with ``a``
        are always counted.  Every closed halfplane with ``a`` on its
        boundary has the trace of one of these up to boundary points, and
        every entry is itself a halfplane trace.
        """
        cls = self.cls[a].astype(np.int64)
        K = int(self.K[a])
        w = np.asarray(weights, dtype=np.int64)
        base = int(w[cls < 0].sum())
        if K == 0:
            return np.array([base], dtype=np.int64)
        sel = cls >= 0
        cw = np.bincount(cls[sel], weights=w[sel], minlength=K).astype(np.int64)
        cs = np.concatenate([[0], np.cumsum(np.concatenate([cw, cw]))])
        half = K // 2
        k = np.arange(K)
        return base + cs[k + 1 + half] - cs[k + 1]


# ---------------------------------------------------------------------------
# Planar enumeration
# ---------------------------------------------------------------------------


def _unique_rows(coords: np.ndarray):
    if len(coords) == 0:
        return coords, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    pos, first, inv = np.unique(coords, axis=0, return_index=True, return_inverse=True)
    return pos, first, inv.reshape(-1)


def _planar_candidates(pos: np.ndarray):
    """Candidate traces over distinct positions plus their descriptors.

    Every trace of a halfplane equals the strict side of some line through
    two distinct positions together with a prefix or suffix of the
    positions on that line (rotate and translate the halfplane until its
    boundary hits two positions).  Each line is processed once, from the
    anchor that comes first along its direction.

    Returns a bool matrix and an int matrix of descriptor columns
    ``(kind, a, b, side, how, j)`` with kind 0/1/2 = empty/full/pivoted
    and how 0/1 = prefix/suffix.
    """
    U = len(pos)
    blocks = [np.array([np.zeros(U, dtype=bool), np.ones(U, dtype=bool)])]
    metas = [np.array([[0, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0]], dtype=np.int64)]
    if U < 2:
        return blocks[0], metas[0]
    for a in range(U):
        cls, K, g = radial_classes(pos, a)
        half = K // 2
        counts = np.bincount(cls[cls >= 0], minlength=K)
        ks = np.flatnonzero((counts > 0) & (counts[(np.arange(K) + half) % K] == 0))
        if ks.size == 0:
            continue
        valid = cls >= 0
        rel = (cls[None, :] - ks[:, None]) % K
        left = valid[None, :] & (rel >= 1) & (rel <= half - 1)
        right = valid[None, :] & (rel >= half + 1)
        # rank of each position along its line (anchor = 0)
        order = np.lexsort((g, cls))
        order = order[cls[order] >= 0]
        ranks = np.zeros(U, dtype=np.int64)
        starts = np.searchsorted(cls[order], cls[order], side="left")
        ranks[order] = np.arange(len(order)) - starts + 1
        on_line = valid[None, :] & (rel == 0)
        lr = np.where(on_line, ranks[None, :], -1)
        lr[:, a] = 0
        msz = counts[ks] + 1
        first_member = order[np.searchsorted(cls[order], ks)]
        for side, base in ((1, left), (-1, right)):
            for j in range(int(msz.max()) + 1):
                sel = msz >= j
                blocks.append(base[sel] | ((lr[sel] >= 0) & (lr[sel] < j)))
                metas.append(_meta_block(a, first_member[sel], side, 0, j))
                if j >= 1:
                    sel = msz > j
                    if sel.any():
                        blocks.append(base[sel] | (lr[sel] >= j))
                        metas.append(_meta_block(a, first_member[sel], side, 1, j))
    return np.concatenate(blocks), np.concatenate(metas)


def _meta_block(a, bs, side, how, j):
    m = np.empty((len(bs), 6), dtype=np.int64)
    m[:, 0] = 2
    m[:, 1] = a
    m[:, 2] = bs
    m[:, 3] = side
    m[:, 4] = how
    m[:, 5] = j
    return m


def _meta_tuple(row, first):
    kind, a, b, side, how, j = (int(v) for v in row)
    if kind == 0:
        return ("empty", (), 0, None)
    if kind == 1:
        return ("full", (), 0, None)
    return ("pivoted", (int(first[a]), int(first[b])), side,
            ("prefix" if how == 0 else "suffix", j))


def _first_unique(rows: np.ndarray) -> np.ndarray:
    """Indices of the first occurrence of each distinct row."""
    packed = np.packbits(rows, axis=1)
    void = np.ascontiguousarray(packed).view(np.dtype((np.void, packed.shape[1])))
    _, first = np.unique(void.reshape(-1), return_index=True)
    return np.sort(first)


def _canonical_order(rows: np.ndarray) -> np.ndarray:
    """Permutation sorting rows by (popcount, packed bytes)."""
    packed = np.packbits(rows, axis=1)
    sizes = rows.sum(axis=1)
    keys = tuple(packed[:, c] for c in range(packed.shape[1] - 1, -1, -1))
    return np.lexsort(keys + (sizes,))


def _dedup(rows: np.ndarray) -> np.ndarray:
    first = _first_unique(rows)
    return first[_canonical_order(rows[first])]


def _enumerate_planar(coords: np.ndarray):
    """Return (traces bool R×n, descriptors) for a planar point array.

    Descriptor pivots are point indices (first occurrence of a position).
    """
    pos, first, inv = _unique_rows(coords)
    prow, meta = _planar_candidates(pos)
    uniq = _first_unique(prow)
    traces = prow[uniq][:, inv]
    order = _canonical_order(traces)
    keep = uniq[order]
    out_meta = [_meta_tuple(meta[idx], first) for idx in keep]
    return np.ascontiguousarray(traces[order]), out_meta


# ---------------------------------------------------------------------------
# Spatial enumeration
# ---------------------------------------------------------------------------


def _cross3(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _plane_projection(normal) -> list[int]:
    """Coordinate axes kept when projecting a plane with this normal."""
    drop = max(range(3), key=lambda i: abs(int(normal[i])))
    return [i for i in range(3) if i != drop]


def _degenerate_normal(coords: np.ndarray):
    """A normal of a plane containing all points, or None if not coplanar."""
    pos, _, _ = _unique_rows(coords)
    if len(pos) < 3:
        if len(pos) == 2:
            d = [int(v) for v in pos[1] - pos[0]]
            for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                c = _cross3(d, e)
                if any(c):
                    return c
        return (0, 0, 1)
    p0 = [int(v) for v in pos[0]]
    rel = pos.astype(object) - np.array(p0, dtype=object)
    for j in range(1, len(pos)):
        for k in range(j + 1, len(pos)):
            c = _cross3(rel[j], rel[k])
            if any(c):
                vals = rel @ np.array(c, dtype=object)
                return c if all(v == 0 for v in vals) else None
    # all collinear: any plane through the line
    d = next(list(r) for r in rel if any(r))
    for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
        c = _cross3(d, e)
        if any(c):
            return c
    return None


def _enumerate_spatial(coords: np.ndarray, cap: int = EXACT_3D_CAP):
    n = len(coords)
    if n > cap:
        raise GeometryError(
            f"exact 3D enumeration is capped at n <= {cap} (got n={n}); use sampled mode")
    plane = _degenerate_normal(coords) if n else (0, 0, 1)
    if plane is not None:
        keep = _plane_projection(plane)
        traces, meta2 = _enumerate_planar(coords[:, keep])
        meta = [("flat", tuple(keep), 0, m) for m in meta2]
        return traces, meta
    pos, first, inv = _unique_rows(coords)
    U = len(pos)
    P = pos.astype(object)
    rows = [np.zeros(U, dtype=bool), np.ones(U, dtype=bool)]
    meta = [("empty", (), 0, None), ("full", (), 0, None)]
    for a in range(U):
        rel = P - P[a]
        for b in range(a + 1, U):
            u = rel[b]
            for c in range(b + 1, U):
                nrm = _cross3(u, rel[c])
                if not any(nrm):
                    continue
                s = rel @ np.array(nrm, dtype=object)
                zero = np.flatnonzero(s == 0)
                if zero[0] != a or zero[1] != b:
                    continue
                # c must be the first coplanar position off the line ab
                first_off = None
                for z in zero[2:]:
                    if any(_cross3(u, rel[z])):
                        first_off = z
                        break
                if first_off != c:
                    continue
                keep = _plane_projection(nrm)
                sub = pos[zero][:, keep]
                sub_traces, sub_meta = _enumerate_planar(sub)
                pos_side = np.array([v > 0 for v in s])
                neg_side = np.array([v < 0 for v in s])
                for side, base in ((1, pos_side), (-1, neg_side)):
                    for st, sm in zip(sub_traces, sub_meta):
                        row = base.copy()
                        row[zero[st]] = True
                        rows.append(row)
                        kind2, piv2, side2, cut2 = sm
                        piv2 = tuple(int(zero[p]) for p in piv2)
                        meta.append(("pivoted", (a, b, c), side, (kind2, piv2, side2, cut2)))
    prow = np.array(rows, dtype=bool)
    traces = prow[:, inv]
    keepi = _dedup(traces)

    def remap(m):
        kind, piv, side, cut = m
        piv = tuple(int(first[p]) for p in piv)
        if cut is not None and kind == "pivoted":
            k2, p2, s2, c2 = cut
            cut = (k2, tuple(int(first[p]) for p in p2), s2, c2)
        return (kind, piv, side, cut)

    return np.ascontiguousarray(traces[keepi]), [remap(meta[i]) for i in keepi]


# ---------------------------------------------------------------------------
# Sampled family
# ---------------------------------------------------------------------------


def _enumerate_sampled(coords: np.ndarray, directions: int, seed: int):
    """Traces of all threshold halfspaces for random integer normals."""
    n, d = coords.shape
    rng = np.random.default_rng(seed)
    rows = [np.zeros(n, dtype=bool), np.ones(n, dtype=bool)]
    hs = [None, None]
    for _ in range(directions):
        v = rng.normal(size=d)
        v /= np.linalg.norm(v)
        nrm = tuple(int(x) for x in np.rint(v * (1 << 20)))
        if not any(nrm):
            continue
        vals = exact_dot(coords, nrm)
        uniq = sorted(set(int(x) for x in vals))
        for thr in uniq:
            row = np.asarray(vals >= thr, dtype=bool)
            rows.append(row)
            hs.append(Halfspace(nrm, thr, True))
            rows.append(~row)
            hs.append(Halfspace(tuple(-x for x in nrm), -thr, False))
    traces = np.array(rows, dtype=bool)
    keep = _dedup(traces)
    return np.ascontiguousarray(traces[keep]), [hs[i] for i in keep]


# ---------------------------------------------------------------------------
# Public enumeration
# ---------------------------------------------------------------------------


def enumerate_traces(ps: PointSet, mode: str = "exact", cap: int = EXACT_3D_CAP,
                     directions: int = 256, seed: int = 0):
    """Low-level enumeration: ``(traces, descriptors, halfspaces)``.

    ``descriptors`` are ``(kind, pivots, side, cut)`` tuples;
    ``halfspaces`` is a list (sampled mode) or None.
    """
    if ps.n < 1:
        raise GeometryError("enumeration needs n >= 1")
    if mode == "sampled":
        traces, hs = _enumerate_sampled(ps.coords, directions, seed)
        meta = []
        for h in hs:
            if h is None:
                meta.append(None)
            else:
                meta.append(("sampled", (), 0, None))
        # empty/full come from the two seeded rows when no threshold reproduces them
        for i, row in enumerate(traces):
            if meta[i] is None:
                meta[i] = ("empty", (), 0, None) if not row.any() else ("full", (), 0, None)
        return traces, meta, hs
    if mode != "exact":
        raise GeometryError(f"unknown enumeration mode {mode!r}")
    if ps.dim == 2:
        traces, meta = _enumerate_planar(ps.coords)
    else:
        traces, meta = _enumerate_spatial(ps.coords, cap)
    return traces, meta, None


def ranges_from_traces(traces: np.ndarray, meta, hs=None) -> list[CanonicalRange]:
    out = []
    for i in range(len(traces)):
        kind, piv, side, cut = meta[i]
        h = hs[i] if hs is not None else None
        out.append(CanonicalRange(i, kind, piv, side, cut, traces[i], h))
    return out


def enumerate_canonical_ranges(ps: PointSet, mode: str = "exact", cap: int = EXACT_3D_CAP,
                               directions: int = 256, seed: int = 0) -> list[CanonicalRange]:
    """All distinct halfspace traces of ``ps``, each with a witness descriptor."""
    traces, meta, hs = enumerate_traces(ps, mode, cap, directions, seed)
    return ranges_from_traces(traces, meta, hs)


# ---------------------------------------------------------------------------
# Witness construction
# ---------------------------------------------------------------------------


def _primitive(v):
    g = math.gcd(*[abs(int(x)) for x in v])
    return tuple(int(x) // g for x in v)


def _planar_witness(pts: list[tuple[int, int]], kind: str, piv, side: int, cut):
    """Open halfplane (normal, offset) realising a planar descriptor.

    ``pts`` are the exact 2D coordinates of all points under consideration;
    pivots index into ``pts``.
    """
    xs = [p[0] for p in pts]
    if kind == "empty":
        return (1, 0), max(xs)
    if kind == "full":
        return (1, 0), min(xs) - 1
    a, b = pts[piv[0]], pts[piv[1]]
    P = _primitive((b[0] - a[0], b[1] - a[1]))
    nrm = (-P[1], P[0])
    on_line = []
    al_all = []
    for y in pts:
        rel = (y[0] - a[0], y[1] - a[1])
        al = P[0] * rel[0] + P[1] * rel[1]
        al_all.append(al)
        if nrm[0] * rel[0] + nrm[1] * rel[1] == 0:
            on_line.append(al)
    levels = sorted(set(on_line))
    how, j = cut
    if how == "prefix":
        T = 2 * levels[j - 1] + 1 if j > 0 else 2 * levels[0] - 1
        sgn = -1
    else:
        T = 2 * levels[j - 1] + 1
        sgn = 1
    N = max(abs(v) for v in al_all) + abs(T) + 1
    # f(y) = 2N·side·<nrm, y-a> + sgn·(2·al(y) - T) > 0
    w = (2 * N * side * nrm[0] + sgn * 2 * P[0], 2 * N * side * nrm[1] + sgn * 2 * P[1])
    wa = w[0] * a[0] + w[1] * a[1]
    return w, wa + sgn * T


def witness_halfspace(ps: PointSet, cr: CanonicalRange) -> Halfspace:
    """An exact halfspace whose trace on ``ps`` equals ``cr.trace``."""
    if cr.halfspace is not None:
        return cr.halfspace
    pts = [ps.point(i) for i in range(ps.n)]
    if ps.dim == 2:
        w, off = _planar_witness(pts, cr.kind, cr.pivots, cr.side, cr.cut)
        return Halfspace(w, off, closed=False)
    if cr.kind == "flat":
        keep = list(cr.pivots)
        kind2, piv2, side2, cut2 = cr.cut
        proj = [(p[keep[0]], p[keep[1]]) for p in pts]
        w2, off2 = _planar_witness(proj, kind2, piv2, side2, cut2)
        w = [0, 0, 0]
        w[keep[0]], w[keep[1]] = w2
        return Halfspace(tuple(w), off2, closed=False)
    if cr.kind == "empty":
        return Halfspace((1, 0, 0), max(p[0] for p in pts), closed=False)
    if cr.kind == "full":
        return Halfspace((1, 0, 0), min(p[0] for p in pts) - 1, closed=False)
    a, b, c = (pts[i] for i in cr.pivots)
    u = tuple(b[i] - a[i] for i in range(3))
    v = tuple(c[i] - a[i] for i in range(3))
    nrm = _cross3(u, v)
    keep = _plane_projection(nrm)
    s = [_dot_int(nrm, p) - _dot_int(nrm, a) for p in pts]
    plane = [i for i, val in enumerate(s) if val == 0]
    local = {p: j for j, p in enumerate(plane)}
    proj = [(pts[i][keep[0]], pts[i][keep[1]]) for i in plane]
    kind2, piv2, side2, cut2 = cr.cut
    w2, off2 = _planar_witness(proj, kind2, tuple(local[p] for p in piv2), side2, cut2)
    # lift: f(y) = N·side·<nrm, y-a> + (<w2, proj y> - off2), N dominates
    g = [w2[0] * p[keep[0]] + w2[1] * p[keep[1]] - off2 for p in pts]
    N = max(abs(x) for x in g) + 1
    w = [N * cr.side * nrm[i] for i in range(3)]
    w[keep[0]] += w2[0]
    w[keep[1]] += w2[1]
    off = N * cr.side * _dot_int(nrm, a) + off2
    return Halfspace(tuple(w), off, closed=False)


def trace_of(h: Halfspace, ps: PointSet) -> np.ndarray:
    return halfspace_mask(h, ps.coords)


def traces_as_set(traces: Iterable[np.ndarray]) -> set[bytes]:
    return {np.packbits(np.asarray(t, dtype=bool)).tobytes() + bytes([len(t) % 8])
            for t in traces}

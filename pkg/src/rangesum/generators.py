"""Seeded point-set generators.

Stochastic families (uniform box/ball, affine images, finite mixtures) and
adversarial ones (points on a line, on a circle, and the stacked-polygon
lower-bound family).  Every generator is a pure function of its arguments;
randomness comes from ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geom import DEFAULT_GRID_SCALE, PointSet, snap_points


class SpecError(ValueError):
    """A generator specification violates one of its constraints."""


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistributionSpec:
    """Box/ball (optionally under an affine map) or a finite mixture.

    ``kind`` is ``"box"``, ``"ball"`` or ``"mixture"``.  For a mixture,
    ``components`` holds ``(weight, DistributionSpec)`` pairs whose own
    ``n`` and ``seed`` are ignored.
    """

    kind: str
    dim: int = 2
    n: int = 256
    seed: int = 0
    matrix: tuple | None = None
    shift: tuple | None = None
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("box", "ball", "mixture"):
            raise SpecError(f"unknown distribution kind {self.kind!r}")
        if self.dim not in (2, 3):
            raise SpecError("dim must be 2 or 3")
        if self.n < 1:
            raise SpecError("n must be >= 1")
        if self.kind == "mixture":
            if not self.components:
                raise SpecError("mixture needs at least one component")
            ws = [w for w, _ in self.components]
            if any(not w > 0 for w in ws):
                raise SpecError("mixture weights must be positive")
            if abs(sum(ws) - 1.0) > 1e-9:
                raise SpecError(f"mixture weights must sum to 1 (got {sum(ws)})")
            for _, c in self.components:
                if c.kind == "mixture":
                    raise SpecError("nested mixtures are not supported")
                if c.dim != self.dim:
                    raise SpecError("component dim mismatch")
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (self.dim, self.dim):
                raise SpecError("affine matrix has wrong shape")
            if np.linalg.matrix_rank(m) < self.dim:
                raise SpecError("affine matrix is singular")


@dataclass(frozen=True)
class LowerBoundSpec:
    eta: int
    q: int
    k: int
    vertex_angles: tuple | None = None
    outer_height: int = 1 << 30

    def validate(self) -> None:
        if self.eta < 4:
            raise SpecError(f"constraint eta >= 4 violated (eta={self.eta})")
        if self.q % self.eta != 0:
            raise SpecError(f"constraint q % eta == 0 violated (q={self.q}, eta={self.eta})")
        if not 1 <= self.k:
            raise SpecError(f"constraint k >= 1 violated (k={self.k})")
        if 4 * self.eta * self.k > self.q:
            raise SpecError(f"constraint k <= q/(4*eta) violated (k={self.k}, "
                            f"q/(4*eta)={self.q / (4 * self.eta):g})")
        ang = self.angles()
        if len(ang) != self.eta:
            raise SpecError("need exactly eta vertex angles")
        if any(not 0 < a < math.pi for a in ang):
            raise SpecError("vertex angles must lie in (0, pi)")
        if any(b <= a for a, b in zip(ang, ang[1:])):
            raise SpecError("vertex angles must be strictly increasing")
        if self.outer_height <= DEFAULT_GRID_SCALE:
            raise SpecError("outer_height must exceed the unit circle")

    def angles(self) -> tuple:
        if self.vertex_angles is not None:
            return tuple(float(a) for a in self.vertex_angles)
        lo, hi = math.pi / 6, 5 * math.pi / 6
        return tuple(lo + (hi - lo) * j / (self.eta - 1) for j in range(self.eta))

    @property
    def n(self) -> int:
        return self.q + self.k

    @property
    def stack(self) -> int:
        return self.q // self.eta


# ---------------------------------------------------------------------------
# Atomic samplers (unit shapes, real coordinates)
# ---------------------------------------------------------------------------


def _unit_box(rng, n, dim):
    return rng.random((n, dim))


def _unit_ball(rng, n, dim):
    out = np.empty((0, dim))
    while len(out) < n:
        need = n - len(out)
        cand = rng.uniform(-1.0, 1.0, size=(int(need * 2.2) + 16, dim))
        cand = cand[np.einsum("ij,ij->i", cand, cand) <= 1.0]
        out = np.concatenate([out, cand[:need]])
    return out


def _atomic(rng, spec: DistributionSpec, n: int):
    pts = _unit_box(rng, n, spec.dim) if spec.kind == "box" else _unit_ball(rng, n, spec.dim)
    if spec.matrix is not None:
        pts = pts @ np.asarray(spec.matrix, dtype=float).T
    if spec.shift is not None:
        pts = pts + np.asarray(spec.shift, dtype=float)
    return pts


def gen_box(n: int, dim: int = 2, seed: int = 0, grid_scale: int = DEFAULT_GRID_SCALE) -> PointSet:
    """n iid uniform points of the unit box [0,1]^dim."""
    if n < 1:
        raise SpecError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return snap_points(_unit_box(rng, n, dim), grid_scale, dim)


def gen_ball(n: int, dim: int = 2, seed: int = 0, grid_scale: int = DEFAULT_GRID_SCALE) -> PointSet:
    """n iid uniform points of the unit ball (rejection from [-1,1]^dim)."""
    if n < 1:
        raise SpecError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return snap_points(_unit_ball(rng, n, dim), grid_scale, dim)


def gen_distribution(spec: DistributionSpec, grid_scale: int = DEFAULT_GRID_SCALE) -> PointSet:
    if spec.kind == "mixture":
        return gen_mixture(spec, grid_scale)
    rng = np.random.default_rng(spec.seed)
    return snap_points(_atomic(rng, spec, spec.n), grid_scale, spec.dim)


def gen_mixture(spec: DistributionSpec, grid_scale: int = DEFAULT_GRID_SCALE,
                return_labels: bool = False):
    """Each point comes from component i with probability gamma_i.

    A one-component mixture reproduces the component generator exactly
    (same seed, same stream).
    """
    if spec.kind != "mixture":
        raise SpecError("gen_mixture needs a mixture spec")
    comps = spec.components
    if len(comps) == 1:
        _, c = comps[0]
        atom = DistributionSpec(c.kind, spec.dim, spec.n, spec.seed, c.matrix, c.shift)
        ps = gen_distribution(atom, grid_scale)
        return (ps, np.zeros(spec.n, dtype=np.int64)) if return_labels else ps
    rng = np.random.default_rng(spec.seed)
    w = np.array([w for w, _ in comps], dtype=float)
    labels = rng.choice(len(comps), size=spec.n, p=w / w.sum())
    pts = np.empty((spec.n, spec.dim))
    for j, (_, c) in enumerate(comps):
        sel = labels == j
        if sel.any():
            pts[sel] = _atomic(rng, c, int(sel.sum()))
    ps = snap_points(pts, grid_scale, spec.dim)
    return (ps, labels) if return_labels else ps


def gen_line(n: int, grid_scale: int = DEFAULT_GRID_SCALE) -> PointSet:
    """n equally spaced points on the diagonal segment from (0,0) to about (1,1)."""
    if n < 1:
        raise SpecError("n must be >= 1")
    step = grid_scale // max(n - 1, 1)
    i = np.arange(n, dtype=np.int64) * step
    return PointSet(2, np.stack([i, i], axis=1), grid_scale)


def gen_circle(n: int, grid_scale: int = DEFAULT_GRID_SCALE) -> PointSet:
    """n points at equally spaced angles on the unit circle."""
    if n < 1:
        raise SpecError("n must be >= 1")
    a = 2 * math.pi * np.arange(n) / n
    return snap_points(np.stack([np.cos(a), np.sin(a)], axis=1), grid_scale, 2)


def gen_lower_bound(spec: LowerBoundSpec, grid_scale: int = DEFAULT_GRID_SCALE) -> PointSet:
    """k outer points at (0, M) followed by eta stacks of q/eta arc points."""
    spec.validate()
    outer = np.tile(np.array([[0, spec.outer_height]], dtype=np.int64), (spec.k, 1))
    ang = np.asarray(spec.angles())
    verts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    vgrid = snap_points(verts, grid_scale, 2).coords
    inner = np.repeat(vgrid, spec.stack, axis=0)
    return PointSet(2, np.concatenate([outer, inner]), grid_scale)


def lower_bound_vertices(spec: LowerBoundSpec, grid_scale: int = DEFAULT_GRID_SCALE) -> np.ndarray:
    ang = np.asarray(spec.angles())
    return snap_points(np.stack([np.cos(ang), np.sin(ang)], axis=1), grid_scale, 2).coords


# ---------------------------------------------------------------------------
# key=value config files
# ---------------------------------------------------------------------------


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def read_config(path) -> dict:
    return parse_config(Path(path).read_text())


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(";", ",").split(",") if x.strip())


def spec_from_config(cfg: dict):
    """Build a DistributionSpec or LowerBoundSpec from parsed config.

    Mixture components are given as ``component1 = weight:kind`` with
    optional ``component1_matrix = a,b,c,d`` and ``component1_shift = x,y``.
    """
    if cfg.get("kind") == "lower_bound" or "eta" in cfg:
        angles = _floats(cfg["vertex_angles"]) if "vertex_angles" in cfg else None
        return LowerBoundSpec(int(cfg["eta"]), int(cfg["q"]), int(cfg["k"]), angles,
                              int(cfg.get("outer_height", 1 << 30)))
    dim = int(cfg.get("dim", 2))
    n = int(cfg.get("n", 256))
    seed = int(cfg.get("seed", 0))
    kind = cfg.get("kind", "box")

    def affine(prefix):
        m = cfg.get(prefix + "matrix")
        s = cfg.get(prefix + "shift")
        mat = None if m is None else tuple(map(tuple, np.reshape(_floats(m), (dim, dim))))
        return mat, (None if s is None else _floats(s))

    if kind == "mixture":
        comps = []
        j = 1
        while f"component{j}" in cfg:
            w, ck = cfg[f"component{j}"].split(":")
            mat, sh = affine(f"component{j}_")
            comps.append((float(w), DistributionSpec(ck.strip(), dim, 1, 0, mat, sh)))
            j += 1
        return DistributionSpec("mixture", dim, n, seed, components=tuple(comps))
    mat, sh = affine("")
    return DistributionSpec(kind, dim, n, seed, mat, sh)

"""Incarnating sets: finite generator sets encoding subspaces of l_1 and l_p.

A subspace ``Y`` of an l_p space is represented by a finite set of vectors
``y_i`` in R^m; the element ``x`` of R^m is the linear function ``u -> <x, u>``
on the set and carries the norm ``(sum |<x, y_i>|^p)^(1/p)``.

Storage is a *half-set*: one representative per antipodal pair ``±y``,
oriented into the closed upper half-space.  Two conventions are supported:

``"half"``
    the set stands for the symmetric set ``±K``.  For ``p == 1`` the norm is
    the plain sum over the stored half (this absorbs the factor ``1/2`` of the
    symmetric formula); for ``p > 1`` the sum runs over the full symmetric set,
    i.e. it is doubled.
``"raw"``
    the rows are evaluation points summed exactly once, as produced by the
    Besselian construction.

Optional per-generator ``weights`` act as a measure on the set; they arise
when coincident generators are merged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import (
    AsymmetricPolytopeError,
    DimensionError,
    EmptySetError,
    IncompleteSetError,
    RankDeficiencyError,
    ValidationError,
)
from .geometry import (
    ATOL,
    PARALLEL_TOL,
    Polytope2D,
    canonical_cycle,
    congruence,
    convex_hull_2d,
    orient,
)

CONVENTIONS = ("half", "raw")


def _check_p(p) -> float:
    p = float(p)
    if not p >= 1:
        raise ValidationError(f"ambient_p must be >= 1, got {p}")
    return p


@dataclass(frozen=True)
class IncarnatingSet:
    """Half-set of generators in R^dim; build with :func:`make_incarnating_set`."""

    dim: int
    generators: np.ndarray = field(repr=False)
    ambient_p: float = 1.0
    weights: Optional[np.ndarray] = field(default=None, repr=False)
    convention: str = "half"

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=float).reshape(-1, self.dim)
        w = np.ones(len(g)) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (len(g),):
            raise ValidationError("weights must have one entry per generator")
        if self.convention not in CONVENTIONS:
            raise ValidationError(f"unknown convention {self.convention!r}")
        g.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ambient_p", _check_p(self.ambient_p))

    def __len__(self):
        return len(self.generators)

    def __repr__(self):
        return (
            f"IncarnatingSet(dim={self.dim}, n_generators={len(self)}, "
            f"ambient_p={self.ambient_p:g}, convention={self.convention!r})"
        )

    @property
    def scale(self) -> float:
        return float(np.abs(self.generators).max())

    def norm_factor(self, p=None) -> float:
        """Multiplier on the half-set power sum (2 for the doubled full-set sum)."""
        p = self.ambient_p if p is None else float(p)
        if self.convention == "half" and p != 1 and not math.isinf(p):
            return 2.0
        return 1.0

    def full_set(self) -> np.ndarray:
        return np.vstack([self.generators, -self.generators])

    def norm(self, x, p=None):
        return subspace_norm(self, x, p=p)

    def as_half(self) -> "IncarnatingSet":
        """Equivalent set in the ``"half"`` convention (same induced norm)."""
        if self.convention == "half":
            return self
        w = self.weights if self.ambient_p == 1 or math.isinf(self.ambient_p) else self.weights / 2
        return replace(self, weights=w, convention="half")

    def merged(self, p=None) -> "IncarnatingSet":
        """One generator per parallel class, unit weights, same induced norm.

        A class of parallel generators ``t_j u`` (unit ``u``) with weights
        ``w_j`` becomes the single generator ``(sum w_j |t_j|^p)^(1/p) u``.
        For ``p == 1`` this is the plain sum of lengths.
        """
        p = self.ambient_p if p is None else _check_p(p)
        g = self.generators
        lengths = np.linalg.norm(g, axis=1)
        dirs = np.array([orient(r) for r in g / lengths[:, None]]).reshape(g.shape)
        labels = parallel_classes(dirs)
        out = []
        for c in range(labels.max() + 1):
            idx = labels == c
            d = dirs[idx][0]
            if math.isinf(p):
                mass = lengths[idx].max()
            else:
                mass = np.sum(self.weights[idx] * lengths[idx] ** p) ** (1.0 / p)
            out.append(d * mass)
        return make_incarnating_set(self.dim, out, self.ambient_p, convention=self.convention)

    def scaled(self, t: float) -> "IncarnatingSet":
        return make_incarnating_set(
            self.dim, self.generators * t, self.ambient_p, self.weights, self.convention
        )

    def transformed(self, a) -> "IncarnatingSet":
        """Image of the set under the linear map ``a`` (generators ``y -> a y``)."""
        a = np.asarray(a, dtype=float)
        return make_incarnating_set(
            a.shape[0], self.generators @ a.T, self.ambient_p, self.weights, self.convention
        )


def parallel_classes(dirs: np.ndarray, tol=PARALLEL_TOL) -> np.ndarray:
    """Label unit direction rows by parallel class (greedy, deterministic)."""
    k = len(dirs)
    labels = -np.ones(k, dtype=int)
    nxt = 0
    for i in range(k):
        if labels[i] >= 0:
            continue
        free = labels < 0
        proj = dirs @ dirs[i]
        resid = np.linalg.norm(dirs - proj[:, None] * dirs[i], axis=1)
        hit = free & (resid < tol)
        labels[hit] = nxt
        nxt += 1
    return labels


def make_incarnating_set(dim, raw, ambient_p=1.0, weights=None, convention="half") -> IncarnatingSet:
    """Validate and canonicalize a generator set.

    Zero vectors are dropped, every generator is replaced by its upper
    half-space representative and the result is sorted lexicographically.
    Raises :class:`IncompleteSetError` if the generators do not span R^dim.
    """
    dim = int(dim)
    if dim < 1:
        raise DimensionError("dim must be >= 1")
    g = np.asarray(raw, dtype=float)
    if g.size == 0:
        raise EmptySetError("generator set is empty")
    g = g.reshape(-1, dim) if g.ndim == 1 and dim == 1 else np.atleast_2d(g)
    if g.shape[1] != dim:
        raise DimensionError(f"generators must lie in R^{dim}, got width {g.shape[1]}")
    if not np.all(np.isfinite(g)):
        raise ValidationError("generators must be finite")
    w = np.ones(len(g)) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != (len(g),):
        raise ValidationError("weights must have one entry per generator")
    if np.any(w <= 0):
        raise ValidationError("weights must be positive")
    scale = np.abs(g).max()
    nz = np.abs(g).max(axis=1) > ATOL * scale if scale > 0 else np.zeros(len(g), bool)
    g, w = g[nz], w[nz]
    if len(g) == 0:
        raise EmptySetError("generator set is empty after dropping zeros")
    g = np.array([orient(r) for r in g]).reshape(-1, dim) + 0.0
    order = np.lexsort(g.T[::-1])
    g, w = g[order], w[order]
    rank = np.linalg.matrix_rank(g / np.abs(g).max(), tol=1e-9)
    if rank < dim:
        raise IncompleteSetError(f"generators have rank {rank} < dim {dim}")
    return IncarnatingSet(dim, g, ambient_p, w, convention)


def subspace_norm(K: IncarnatingSet, x, p=None):
    """Induced norm of the linear function ``x`` on ``K``.

    ``x`` may be a single vector or a stack of vectors (last axis = dim).
    ``p`` overrides ``K.ambient_p``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != K.dim:
        raise DimensionError(f"vector of length {x.shape[-1]} for a set in R^{K.dim}")
    p = K.ambient_p if p is None else _check_p(p)
    vals = np.abs(x @ K.generators.T)
    if math.isinf(p):
        out = vals.max(axis=-1)
    elif p == 1:
        out = vals @ K.weights
    else:
        m = vals.max(axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        s = ((vals / safe) ** p) @ K.weights
        out = m[..., 0] * (K.norm_factor(p) * s) ** (1.0 / p)
    return float(out) if out.ndim == 0 else out


def dual_ball(K: IncarnatingSet) -> Polytope2D:
    """Zonotope ``conv{sum eps_y y}``: the unit ball of the dual of ``Y``.

    Built by an angular sweep over the merged generators: starting at
    ``-sum y`` and adding ``2y`` in increasing angle order traces the boundary
    counterclockwise.
    """
    if K.dim != 2:
        raise DimensionError("dual_ball is implemented for planar sets only")
    if K.ambient_p != 1:
        raise ValidationError("dual_ball requires an l_1 incarnating set")
    g = K.merged(p=1).generators
    ang = np.arctan2(g[:, 1], g[:, 0])
    ang = np.where(ang < 0, ang + np.pi, ang)
    g = g[np.argsort(ang, kind="stable")]
    steps = np.vstack([2 * g, -2 * g])
    start = -g.sum(axis=0)
    verts = start + np.vstack([np.zeros(2), np.cumsum(steps, axis=0)[:-1]])
    return Polytope2D(canonical_cycle(verts))


def generators_from_polytope(P: Polytope2D) -> IncarnatingSet:
    """Recover the l_1 generator half-set whose dual ball is ``P``.

    Each antipodal pair of edges contributes half of its edge vector.
    """
    v = P.vertices
    k = len(v)
    if k < 4:
        raise AsymmetricPolytopeError(f"polygon with {k} vertices cannot be a 2-D unit ball")
    if k % 2 or not P.is_centrally_symmetric():
        raise AsymmetricPolytopeError("polygon is not centrally symmetric")
    half = k // 2
    scale = P.scale
    if np.abs(v[half:] + v[:half]).max() > ATOL * scale:
        raise AsymmetricPolytopeError("vertex order is not antipodally paired")
    edges = P.edges()[:half] / 2
    return make_incarnating_set(2, edges, 1.0)


@dataclass(frozen=True)
class PairRealization:
    """Incarnation of a subspace ``Y`` of an ``N``-dimensional l_p space."""

    ambient_dim: int
    subspace: IncarnatingSet
    evaluation_basis: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def raw_generators(self) -> np.ndarray:
        """Evaluation points y_i, one per ambient coordinate (zeros included)."""
        if self.evaluation_basis is None:
            return self.subspace.generators
        return self.evaluation_basis

    def embed(self, x) -> np.ndarray:
        """Ambient vector of the subspace element with coordinates ``x``."""
        return np.asarray(x, dtype=float) @ self.raw_generators.T


def besselian_incarnate(ambient_p, ambient_dim, subspace_basis, symmetrize=False) -> PairRealization:
    """Incarnate ``span(subspace_basis)`` inside l_p^N.

    The columns are orthonormalized to ``Q``; the generator for coordinate
    ``i`` is ``Q^T e_i`` (the orthogonal projection of ``e_i`` written in that
    basis).  For ``w = Q x`` one has ``w_i = <x, y_i>``, so the raw-convention
    norm over the generators equals the ambient l_p norm of ``w``.
    """
    b = np.asarray(subspace_basis, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    n = int(ambient_dim)
    if b.shape[0] != n:
        raise DimensionError(f"basis has {b.shape[0]} rows, expected {n}")
    sv = np.linalg.svd(b, compute_uv=False)
    if sv.size == 0 or sv[-1] <= 1e-9 * sv[0]:
        raise RankDeficiencyError("subspace basis is rank deficient")
    q, r = np.linalg.qr(b)
    q = q * np.sign(np.diag(r))
    p = _check_p(ambient_p)
    if symmetrize:
        w = np.full(n, 1.0 if p == 1 or math.isinf(p) else 0.5)
        K = make_incarnating_set(b.shape[1], q, p, w, convention="half")
    else:
        K = make_incarnating_set(b.shape[1], q, p, convention="raw")
    return PairRealization(n, K, q)


def triple_norm_budget(R) -> float:
    """Sum of |||y_i||| over all generators of a realization or set."""
    if isinstance(R, PairRealization):
        return float(np.abs(R.raw_generators).sum())
    return float(np.abs(R.generators).sum(axis=1) @ R.weights)


def isometric(K1: IncarnatingSet, K2: IncarnatingSet) -> bool:
    """True iff the induced normed spaces are linearly congruent."""
    if K1.dim != K2.dim or K1.ambient_p != K2.ambient_p:
        return False
    m1 = K1.as_half().merged()
    m2 = K2.as_half().merged()
    return congruence(m1, m2) is not None


def cantor_ball(depth: int) -> Polytope2D:
    """Polygon ``conv(C_d ∪ -C_d)`` on the unit circle.

    ``C_d`` holds the ``2^d`` points at angles ``pi * sum_{k<=d} a_k 3^-k``
    with digits ``a_k`` in {0, 1}.
    """
    depth = int(depth)
    if not 1 <= depth <= 20:
        raise ValidationError("depth must be in [1, 20]")
    digits = (np.arange(2**depth)[:, None] >> np.arange(depth - 1, -1, -1)) & 1
    ang = np.pi * digits @ (3.0 ** -np.arange(1, depth + 1))
    pts = np.c_[np.cos(ang), np.sin(ang)]
    return convex_hull_2d(np.vstack([pts, -pts]))


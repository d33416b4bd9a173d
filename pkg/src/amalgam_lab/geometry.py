"""Small-dimension vector arithmetic, l_p norms, planar hulls and congruence.

All set and vertex comparisons use an absolute tolerance of ``ATOL`` after the
inputs have been rescaled to unit size.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import DegenerateHullError, ValidationError

ATOL = 1e-9
PARALLEL_TOL = 1e-9


def lp_norm(v, p=2.0) -> float:
    """Return the l_p norm of ``v`` for ``1 <= p <= inf``."""
    v = np.asarray(v, dtype=float).ravel()
    p = float(p)
    if not p >= 1:
        raise ValidationError(f"l_p norm requires p >= 1, got {p}")
    a = np.abs(v)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    if p == 1:
        return float(a.sum())
    m = a.max(initial=0.0)
    if m == 0:
        return 0.0
    # rescale to avoid overflow in a**p for large p
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


def triple_norm(v) -> float:
    """Coordinate-wise absolute sum |||v|||."""
    return float(np.abs(np.asarray(v, dtype=float)).sum())


def normalized_cross(a, b) -> float:
    """|a x b| / (|a||b|) for planar vectors; 0 when either is zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.hypot(*a), np.hypot(*b)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(a[0] * b[1] - a[1] * b[0]) / (na * nb))


def orient(v, tol=ATOL) -> np.ndarray:
    """Representative of ``±v`` in the closed upper half-space.

    The last coordinate that is non-negligible (relative to ``max|v|``) is made
    positive; this is the lexicographic tie-break for vectors on the boundary.
    """
    v = np.asarray(v, dtype=float)
    scale = np.abs(v).max(initial=0.0)
    if scale == 0:
        return v.copy()
    big = np.nonzero(np.abs(v) > tol * scale)[0]
    return -v if v[big[-1]] < 0 else v.copy()


def orient_rows(a, tol=ATOL) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return np.array([orient(r, tol) for r in a]).reshape(a.shape)


def lex_sorted(a) -> np.ndarray:
    """Rows sorted lexicographically (first coordinate most significant)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if len(a) == 0:
        return a
    order = np.lexsort(a.T[::-1])
    return a[order]


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def reflection(theta: float) -> np.ndarray:
    """Reflection across the line through the origin at angle ``theta``."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]])


@dataclass(frozen=True)
class Polytope2D:
    """Convex planar polygon given by its vertices in counterclockwise order."""

    vertices: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValidationError("Polytope2D vertices must be an (k, 2) array")
        if len(v) < 2:
            raise ValidationError("Polytope2D needs at least two vertices")
        if not np.all(np.isfinite(v)):
            raise ValidationError("Polytope2D vertices must be finite")
        v = v + 0.0  # drop negative zeros
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"Polytope2D(n_vertices={len(self)})"

    @property
    def scale(self) -> float:
        return float(np.abs(self.vertices).max())

    def edges(self) -> np.ndarray:
        """Edge vectors v[i+1] - v[i], cyclically."""
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def support(self, x) -> np.ndarray:
        """Support function max_z <x, z> for one direction or a stack of them."""
        x = np.asarray(x, dtype=float)
        return (x @ self.vertices.T).max(axis=-1)

    def is_centrally_symmetric(self, tol=ATOL) -> bool:
        return same_point_sets(self.vertices, -self.vertices, tol)

    def same_vertices(self, other: "Polytope2D", tol=ATOL) -> bool:
        return len(self) == len(other) and same_point_sets(
            self.vertices, other.vertices, tol
        )


def _lexmin_index(pts: np.ndarray, tol: float) -> int:
    scale = max(np.abs(pts).max(), 1e-300)
    xmin = pts[:, 0].min()
    cand = np.nonzero(pts[:, 0] <= xmin + tol * scale)[0]
    return int(cand[np.argmin(pts[cand, 1])])


def canonical_cycle(vertices, tol=ATOL) -> np.ndarray:
    """Rotate a CCW vertex cycle so that it starts at the lexicographic minimum."""
    v = np.asarray(vertices, dtype=float)
    return np.roll(v, -_lexmin_index(v, tol), axis=0)


def convex_hull_2d(points, tol=ATOL) -> Polytope2D:
    """Counterclockwise convex hull with collinear points removed.

    Uses the monotone chain; turns whose normalized cross product is below
    ``tol`` count as straight.  The cycle starts at the lexicographic minimum.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("convex_hull_2d expects planar points")
    if len(pts) < 3:
        raise DegenerateHullError("need at least 3 points spanning the plane")
    scale = np.abs(pts).max()
    if scale == 0:
        raise DegenerateHullError("all points are zero")
    centred = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centred / scale, compute_uv=False)
    if sv[-1] <= tol * max(sv[0], 1.0) * math.sqrt(len(pts)):
        raise DegenerateHullError("points are collinear; hull has empty interior")

    pts = lex_sorted(pts)
    keep = [0]
    for i in range(1, len(pts)):
        if np.abs(pts[i] - pts[keep[-1]]).max() > tol * scale:
            keep.append(i)
    pts = pts[keep]

    def turn(o, a, b):
        u, w = a - o, b - o
        nu, nw = math.hypot(*u), math.hypot(*w)
        return (u[0] * w[1] - u[1] * w[0]) / (nu * nw)

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and turn(out[-2], out[-1], p) <= tol:
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateHullError("hull has fewer than 3 vertices")
    return Polytope2D(canonical_cycle(hull, tol))


def same_point_sets(a, b, tol=ATOL, signed=False) -> bool:
    """True when the rows of ``a`` and ``b`` agree as sets up to ``tol``.

    With ``signed=True`` the rows are compared as antipodal pairs ``±row``.
    Tolerance is applied after scaling by the largest coordinate of ``b``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        return False
    if a.size == 0:
        return True
    scale = max(np.abs(b).max(), 1e-300)
    return _match(a / scale, b / scale, tol, signed) is not None


def _match(a, b, tol, signed, tree=None):
    """Bijection rows(a) -> rows(b) within tol, or None."""
    k = len(b)
    if tree is None:
        tree = cKDTree(np.vstack([b, -b]) if signed else b)
    dist, idx = tree.query(a, k=1)
    if np.any(dist > tol):
        return None
    if signed:
        idx = idx % k
    if len(np.unique(idx)) != k:
        # near-duplicates can collide on the nearest neighbour; fall back
        return _match_exhaustive(a, b, tol, signed)
    return idx


def _match_exhaustive(a, b, tol, signed):
    from scipy.optimize import linear_sum_assignment

    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    if signed:
        d = np.minimum(d, np.linalg.norm(a[:, None, :] + b[None, :, :], axis=2))
    r, c = linear_sum_assignment(d)
    if d[r, c].max() > tol:
        return None
    out = np.empty(len(a), dtype=int)
    out[r] = c
    return out


def _pick_basis(a: np.ndarray) -> list[int]:
    """Greedy well-conditioned choice of ``dim`` independent rows."""
    m = a.shape[1]
    chosen: list[int] = []
    q = np.zeros((0, m))
    for _ in range(m):
        resid = a - (a @ q.T) @ q
        norms = np.linalg.norm(resid, axis=1) / np.maximum(np.linalg.norm(a, axis=1), 1e-300)
        norms[chosen] = -1
        j = int(np.argmax(norms))
        if norms[j] <= 1e-9:
            raise ValidationError("generator set does not span its space")
        chosen.append(j)
        r = resid[j] / np.linalg.norm(resid[j])
        q = np.vstack([q, r])
    return chosen


def congruence(k1, k2, tol=ATOL):
    """Find an invertible U with U(±K1) = ±K2, or return None.

    ``k1`` and ``k2`` are generator arrays (rows) or objects exposing
    ``.generators``.  Parallel generators should already be merged.  A fixed
    basis of K1 is sent to every ordered signed tuple of K2, and the induced
    map is checked against the whole set.
    """
    a = np.atleast_2d(np.asarray(getattr(k1, "generators", k1), dtype=float))
    b = np.atleast_2d(np.asarray(getattr(k2, "generators", k2), dtype=float))
    if a.shape != b.shape:
        return None
    k, m = b.shape
    scale = np.abs(b).max()
    bn = b / scale
    basis = _pick_basis(a)
    a_basis_inv = np.linalg.inv(a[basis].T)
    tree = cKDTree(np.vstack([bn, -bn]))
    for targets in itertools.permutations(range(k), m):
        for signs in itertools.product((1.0, -1.0), repeat=m):
            if signs[0] < 0:
                # U and -U are interchangeable on symmetric sets
                continue
            t = (np.array(signs)[:, None] * bn[list(targets)]).T
            u = t @ a_basis_inv
            if abs(np.linalg.det(u)) < 1e-12:
                continue
            if _match(a @ u.T, bn, tol, True, tree) is not None:
                return u * scale
    return None

"""Amalgamation of V-formations over l_1.

A V-formation is a root space ``X`` (dimension 1 or 2) isometrically embedded
into two incarnated subspaces ``Y`` and ``Z`` of l_1.  :func:`amalgamate`
builds one incarnating set ``K_W`` whose space contains isometric copies of
``Y`` and ``Z`` glued along ``X``.

Coordinates of ``W`` are ``root ⊕ Y' ⊕ Z'`` where ``Y'`` and ``Z'`` are the
orthogonal complements of the images of the root.  Generators of ``Y`` and
``Z`` whose projections onto the root are parallel to the same edge direction
``r`` are paired: with oriented projection lengths ``a_i`` and ``b_j`` and
``S = sum a_i = sum b_j``, the pair contributes

    c_ij = (a_i b_j / S) r  ⊕  (b_j / S) y_i'  ⊕  (a_i / S) z_j'.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
import scipy.linalg

from .exceptions import InconsistentEdgeError, NonMatchingRootError, RankDeficiencyError, ValidationError
from .geometry import ATOL, PARALLEL_TOL, orient, same_point_sets
from .incarnation import IncarnatingSet, dual_ball, make_incarnating_set, subspace_norm


def _as_map(i, rows: int) -> np.ndarray:
    i = np.asarray(i, dtype=float)
    if i.ndim == 1:
        i = i[:, None]
    if i.shape[0] != rows:
        raise ValidationError(f"embedding has {i.shape[0]} rows, expected {rows}")
    return i


def _full_column_rank(i: np.ndarray) -> bool:
    sv = np.linalg.svd(i, compute_uv=False)
    return sv.size > 0 and sv[-1] > 1e-9 * sv[0]


def pullback(K: IncarnatingSet, i) -> IncarnatingSet:
    """Generators ``i^T y`` inducing the norm ``x -> ||i x||_K`` on the root."""
    i = _as_map(i, K.dim)
    if not _full_column_rank(i):
        raise RankDeficiencyError("embedding is not injective")
    return make_incarnating_set(i.shape[1], K.generators @ i, K.ambient_p, K.weights, K.convention)


@dataclass(frozen=True)
class VFormation:
    """Root of dimension 1 or 2 embedded into two l_1 incarnating sets."""

    root_dim: int
    K_Y: IncarnatingSet
    K_Z: IncarnatingSet
    i_Y: np.ndarray = field(repr=False)
    i_Z: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.root_dim not in (1, 2):
            raise ValidationError("root_dim must be 1 or 2")
        for K in (self.K_Y, self.K_Z):
            if K.ambient_p != 1:
                raise ValidationError("V-formations are supported over l_1 only")
        i_y = _as_map(self.i_Y, self.K_Y.dim)
        i_z = _as_map(self.i_Z, self.K_Z.dim)
        if i_y.shape[1] != self.root_dim or i_z.shape[1] != self.root_dim:
            raise ValidationError("embedding widths must equal root_dim")
        object.__setattr__(self, "i_Y", i_y)
        object.__setattr__(self, "i_Z", i_z)
        if self.check:
            err = self.root_mismatch()
            if err > 1e-9:
                raise NonMatchingRootError(
                    f"embeddings induce different root norms (relative gap {err:.3g})"
                )

    def root_mismatch(self, samples: int = 256) -> float:
        """Largest relative gap between the two induced root norms."""
        py = pullback(self.K_Y, self.i_Y)
        pz = pullback(self.K_Z, self.i_Z)
        t = np.linspace(0, np.pi, samples, endpoint=False)
        x = np.c_[np.cos(t), np.sin(t)] if self.root_dim == 2 else np.ones((1, 1))
        ny, nz = subspace_norm(py, x), subspace_norm(pz, x)
        return float(np.max(np.abs(ny - nz) / np.maximum(ny, nz)))


@dataclass(frozen=True)
class AmalgamResult:
    K_W: IncarnatingSet
    j_Y: np.ndarray = field(repr=False)
    j_Z: np.ndarray = field(repr=False)
    report: dict = field(default_factory=dict)


def _root_directions(K: IncarnatingSet, i: np.ndarray) -> np.ndarray:
    """Unit edge directions of the root's dual ball, oriented."""
    if i.shape[1] == 1:
        return np.ones((1, 1))
    P = dual_ball(pullback(K, i))
    e = P.edges()[: len(P) // 2]
    e = e / np.linalg.norm(e, axis=1)[:, None]
    return np.array([orient(r) for r in e])


def edge_classes(K: IncarnatingSet, i, directions=None) -> dict:
    """Partition generators of ``K`` by the root direction of ``i^T y``.

    Returns ``{direction: [(generator, length), ...]}`` with directions as
    tuples, each generator sign-flipped so its projection points along the
    direction, plus key ``None`` for the generators orthogonal to the root.
    ``directions`` defaults to the edge directions of the dual ball of the
    pulled-back set; a projection parallel to none of them raises
    :class:`InconsistentEdgeError`.
    """
    i = _as_map(i, K.dim)
    r = i.shape[1]
    if r not in (1, 2):
        raise ValidationError("root dimension must be 1 or 2")
    dirs = _root_directions(K, i) if directions is None else np.atleast_2d(
        np.asarray(directions, dtype=float)
    ).reshape(-1, r)
    proj = K.generators @ i
    ref = np.linalg.norm(K.generators, axis=1) * np.linalg.norm(i, 2)
    out: dict = {tuple(d): [] for d in dirs}
    out[None] = []
    for y, w, pr, s in zip(K.generators, K.weights, proj, ref):
        y = y * w
        pr = pr * w
        length = np.linalg.norm(pr)
        if length <= ATOL * s * w:
            out[None].append((y, 0.0))
            continue
        u = pr / length
        if r == 1:
            k = 0
        else:
            cross = np.abs(dirs[:, 0] * u[1] - dirs[:, 1] * u[0])
            k = int(np.argmin(cross))
            if cross[k] > PARALLEL_TOL:
                raise InconsistentEdgeError(
                    "generator projects onto no edge direction of the root ball"
                )
        sign = 1.0 if dirs[k] @ u > 0 else -1.0
        out[tuple(dirs[k])].append((sign * y, float(length)))
    return out


def _complement(i: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of range(i)^⊥."""
    return scipy.linalg.null_space(i.T, rcond=1e-12)


def amalgamate(v: VFormation) -> AmalgamResult:
    """Build the amalgam ``K_W`` with embeddings ``j_Y``, ``j_Z``."""
    r = v.root_dim
    dy, dz = v.K_Y.dim, v.K_Z.dim
    B = _complement(v.i_Y)
    C = _complement(v.i_Z)
    ey, ez = B.shape[1], C.shape[1]
    dw = r + ey + ez
    j_y = np.vstack([np.linalg.pinv(v.i_Y), B.T, np.zeros((ez, dy))])
    j_z = np.vstack([np.linalg.pinv(v.i_Z), np.zeros((ey, dz)), C.T])

    cy = edge_classes(v.K_Y, v.i_Y)
    dirs = np.array([d for d in cy if d is not None])
    cz = edge_classes(v.K_Z, v.i_Z, directions=dirs)

    gens = []
    for d in dirs:
        key = tuple(d)
        ys, zs = cy[key], cz[key]
        s_y = sum(a for _, a in ys)
        s_z = sum(b for _, b in zs)
        if abs(s_y - s_z) > 1e-9 * max(s_y, s_z):
            raise NonMatchingRootError(
                f"edge class {np.round(d, 6).tolist()} has masses {s_y:.12g} vs {s_z:.12g}"
            )
        s = 0.5 * (s_y + s_z)
        for y, a in ys:
            yp = B.T @ y
            for z, b in zs:
                zp = C.T @ z
                gens.append(np.concatenate([(a * b / s) * d, (b / s) * yp, (a / s) * zp]))
    for y, _ in cy[None]:
        gens.append(np.concatenate([np.zeros(r), B.T @ y, np.zeros(ez)]))
    for z, _ in cz[None]:
        gens.append(np.concatenate([np.zeros(r + ey), C.T @ z]))

    K_W = make_incarnating_set(dw, gens, 1.0)
    report = {
        "root_dim": r,
        "dim_W": dw,
        "n_generators": len(K_W),
        "n_edge_classes": len(dirs),
    }
    return AmalgamResult(K_W, j_y, j_z, report)


def _relative_errors(K_big, j, K_small, u):
    big = subspace_norm(K_big, u @ j.T)
    small = subspace_norm(K_small, u)
    return np.abs(big - small) / np.maximum(small, 1e-300)


def verify_amalgam(v: VFormation, a: AmalgamResult, samples: int = 1000, seed: int = 0, tol: float = 1e-9) -> dict:
    """Check the amalgam numerically and return a report dictionary.

    Checks: the commuting square ``j_Y i_Y = j_Z i_Z``; isometry of both legs
    on seeded Gaussian samples (maximum relative error); the intersection of
    the two images equals the image of the root; and that pulling ``K_W``
    back along each leg reproduces the leg's generators after merging.
    """
    rng = np.random.default_rng(seed)
    sq = a.j_Y @ v.i_Y - a.j_Z @ v.i_Z
    commuting_error = float(np.abs(sq).max())

    uy = rng.standard_normal((samples, v.K_Y.dim))
    uz = rng.standard_normal((samples, v.K_Z.dim))
    err_y = float(_relative_errors(a.K_W, a.j_Y, v.K_Y, uy).max())
    err_z = float(_relative_errors(a.K_W, a.j_Z, v.K_Z, uz).max())

    stacked = np.hstack([a.j_Y, a.j_Z])
    rank = np.linalg.matrix_rank(stacked, tol=1e-9 * np.linalg.norm(stacked, 2))
    intersection_dim = v.K_Y.dim + v.K_Z.dim - int(rank)

    def reproduces(j, K):
        try:
            back = pullback(a.K_W, j).merged()
        except ValidationError:
            return False
        return same_point_sets(back.generators, K.merged().generators, tol, signed=True)

    repro_y = reproduces(a.j_Y, v.K_Y)
    repro_z = reproduces(a.j_Z, v.K_Z)
    passed = (
        commuting_error <= 1e-12
        and err_y < tol
        and err_z < tol
        and intersection_dim == v.root_dim
        and repro_y
        and repro_z
    )
    return {
        "seed": int(seed),
        "samples": int(samples),
        "tolerance": tol,
        "commuting_error": commuting_error,
        "isometry_error_Y": err_y,
        "isometry_error_Z": err_z,
        "max_isometry_error": max(err_y, err_z),
        "intersection_dim": intersection_dim,
        "root_dim": v.root_dim,
        "pullback_reproduces_Y": bool(repro_y),
        "pullback_reproduces_Z": bool(repro_z),
        "passed": bool(passed),
    }


def random_vformation(rng, root_dim: int, max_per_leg: int = 12) -> VFormation:
    """Random valid V-formation used by the test and acceptance suites.

    Both legs split the same random root generators into parallel pieces,
    add components along extra coordinates and some root-orthogonal
    generators, then undergo independent random changes of coordinates.
    """
    rng = np.random.default_rng(rng)
    r = int(root_dim)
    if r == 1:
        root = np.array([[rng.uniform(0.5, 2.0)]])
    else:
        n_root = int(rng.integers(2, 5))
        ang = np.sort(rng.uniform(0, np.pi, n_root))
        while np.min(np.diff(np.r_[ang, ang[0] + np.pi])) < 0.05:
            ang = np.sort(rng.uniform(0, np.pi, n_root))
        root = np.c_[np.cos(ang), np.sin(ang)] * rng.uniform(0.3, 1.5, n_root)[:, None]

    def leg() -> tuple[IncarnatingSet, np.ndarray]:
        extra = int(rng.integers(0, 4))
        n_null = extra
        per_class = max(1, (max_per_leg - n_null) // len(root))
        gens = []
        for rho in root:
            t = rng.dirichlet(np.ones(int(rng.integers(1, per_class + 1))))
            for tk in t:
                gens.append(np.concatenate([tk * rho, rng.standard_normal(extra)]))
        for _ in range(n_null):
            gens.append(np.concatenate([np.zeros(r), rng.standard_normal(extra)]))
        gens = np.array(gens) * rng.choice([-1.0, 1.0], size=(len(gens), 1))
        d = r + extra
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        T = q @ np.diag(rng.uniform(0.5, 2.0, d))
        i0 = np.vstack([np.eye(r), np.zeros((extra, r))])
        K = make_incarnating_set(d, gens @ np.linalg.inv(T), 1.0)
        return K, T @ i0

    while True:
        try:
            K_y, i_y = leg()
            K_z, i_z = leg()
            return VFormation(r, K_y, K_z, i_y, i_z)
        except ValidationError:
            continue

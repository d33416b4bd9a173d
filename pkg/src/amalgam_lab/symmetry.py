"""Finite orthogonal groups, invariant projections and projection constants.

The Haar measure of a finite group is the uniform average over its elements.
A group is *ample* when the averaged rank-one operators satisfy

    mean_g  g u (x, g v) = (u, v) x / n      for all u, v, x,

which is equivalent to its commutant consisting of scalars only.

Projections onto an incarnated subspace that commute with an ample group
have the form ``P f = c * sum_u w_u f(u) mu(u)`` with an equivariant map
``mu`` and ``c = n / sum_u w_u (u, mu(u))``.  The map ``mu`` is stored on the
half-set and extended oddly, ``mu(-u) = -mu(u)``, which makes it compatible
with ``-I`` belonging to the group.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .exceptions import DegenerateMuError, DimensionError, GroupError, InvarianceError, ValidationError
from .geometry import _match, reflection, rotation, same_point_sets
from .incarnation import IncarnatingSet

GROUP_TOL = 1e-9
RANK_TOL = 1e-9
GOLDEN = (math.sqrt(5) - 1) / 2


def _keys(mats: np.ndarray) -> list[bytes]:
    r = np.round(np.asarray(mats).reshape(len(mats), -1), 7) + 0.0
    return [row.tobytes() for row in r]


def _closure(gens: np.ndarray, n: int, limit: int) -> dict:
    """Elements generated by ``gens`` keyed by their rounded entries."""
    eye = np.eye(n)[None]
    seen = dict(zip(_keys(eye), eye))
    frontier = eye
    while len(frontier):
        prods = np.einsum("fij,sjk->fsik", frontier, gens).reshape(-1, n, n)
        new = []
        for key, m in zip(_keys(prods), prods):
            if key not in seen:
                seen[key] = m
                new.append(m)
        if len(seen) > limit:
            break
        frontier = np.array(new).reshape(-1, n, n)
    return seen


@dataclass(frozen=True)
class FiniteOrthogonalGroup:
    """Finite set of orthogonal n x n matrices closed under product."""

    n: int
    elements: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.elements, dtype=float).reshape(-1, self.n, self.n) + 0.0
        e.setflags(write=False)
        object.__setattr__(self, "elements", e)
        if self.check:
            self.validate()

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self):
        return f"FiniteOrthogonalGroup(n={self.n}, order={len(self)})"

    @property
    def order(self) -> int:
        return len(self.elements)

    def validate(self):
        e = self.elements
        n = self.n
        if len(e) == 0:
            raise GroupError("group is empty")
        gram = np.einsum("gji,gjk->gik", e, e)
        if np.abs(gram - np.eye(n)).max() > GROUP_TOL:
            raise GroupError("elements are not orthogonal")
        keys = _keys(e)
        if len(set(keys)) != len(e):
            raise GroupError("duplicate elements")
        if _keys(np.eye(n)[None])[0] not in set(keys):
            raise GroupError("identity missing")
        generated = _closure(self.generating_set, n, len(e))
        if len(generated) != len(e) or not set(generated) <= set(keys):
            raise GroupError("set is not closed under multiplication")

    @cached_property
    def generating_set(self) -> np.ndarray:
        """Small generating subset chosen greedily in element order."""
        n = self.n
        gens: list[np.ndarray] = []
        span = set(_keys(np.eye(n)[None]))
        for key, g in zip(_keys(self.elements), self.elements):
            if key in span:
                continue
            gens.append(g)
            span = set(_closure(np.array(gens), n, 2 * len(self.elements)))
            if len(span) >= len(self.elements):
                break
        if not gens:
            return np.eye(n)[None]
        return np.array(gens)

    def haar_mean(self, fn) -> np.ndarray:
        return np.mean([fn(g) for g in self.elements], axis=0)


def make_G1(n: int) -> FiniteOrthogonalGroup:
    """All signed permutation matrices of size n (order 2^n n!)."""
    n = int(n)
    if not 1 <= n <= 6:
        raise ValidationError("make_G1 supports 1 <= n <= 6")
    perms = np.array(list(itertools.permutations(range(n))))
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    out = np.zeros((len(perms), len(signs), n, n))
    cols = np.arange(n)
    for a, sigma in enumerate(perms):
        # column i is eps_i * e_{sigma(i)}
        out[a][:, sigma, cols] = signs
    return FiniteOrthogonalGroup(n, out.reshape(-1, n, n))


def helmert_basis(n: int) -> np.ndarray:
    """Orthonormal rows spanning the zero-sum hyperplane of R^(n+1).

    Row k (1-based) is ``(1, ..., 1, -k, 0, ..., 0) / sqrt(k (k+1))`` with k
    leading ones.
    """
    h = np.zeros((n, n + 1))
    for k in range(1, n + 1):
        h[k - 1, :k] = 1.0
        h[k - 1, k] = -k
        h[k - 1] /= math.sqrt(k * (k + 1))
    return h


def make_G2(n: int) -> FiniteOrthogonalGroup:
    """Symmetric group S_{n+1} permuting coordinates of the zero-sum hyperplane.

    Elements are written in the Helmert basis, giving n x n orthogonal matrices.
    """
    n = int(n)
    if not 1 <= n <= 6:
        raise ValidationError("make_G2 supports 1 <= n <= 6")
    h = helmert_basis(n)
    mats = []
    for pi in itertools.permutations(range(n + 1)):
        perm = np.zeros((n + 1, n + 1))
        # (g x)_i = x_{pi(i)}
        perm[np.arange(n + 1), pi] = 1.0
        mats.append(h @ perm @ h.T)
    return FiniteOrthogonalGroup(n, np.array(mats))


def cyclic_rotations(order: int) -> FiniteOrthogonalGroup:
    return FiniteOrthogonalGroup(2, [rotation(2 * math.pi * k / order) for k in range(order)])


def dihedral(order: int) -> FiniteOrthogonalGroup:
    """Dihedral group with ``order`` elements (order/2 rotations)."""
    m = order // 2
    rots = [rotation(2 * math.pi * k / m) for k in range(m)]
    refl = [reflection(math.pi * k / m) for k in range(m)]
    return FiniteOrthogonalGroup(2, rots + refl)


def trivial_group(n: int) -> FiniteOrthogonalGroup:
    return FiniteOrthogonalGroup(n, np.eye(n)[None])


def ample_deviation(G: FiniteOrthogonalGroup) -> float:
    """Max deviation of ``mean_g g u (x, g v)`` from ``(u, v) x / n`` over basis triples."""
    n = G.n
    e = G.elements
    # t[i, a, b, c] = mean_g g[i, a] g[b, c]  (u = e_a, x = e_b, v = e_c)
    t = np.einsum("gia,gbc->iabc", e, e) / len(e)
    eye = np.eye(n)
    target = np.einsum("ac,ib->iabc", eye, eye) / n
    return float(np.abs(t - target).max())


def is_ample(G: FiniteOrthogonalGroup, tol: float = GROUP_TOL) -> bool:
    return ample_deviation(G) <= tol


def commutant_dim(G: FiniteOrthogonalGroup) -> int:
    """Dimension of ``{T : T g = g T for all g}`` via the stacked linear system."""
    n = G.n
    eye = np.eye(n)
    rows = [np.kron(eye, g.T) - np.kron(g, eye) for g in G.generating_set]
    a = np.vstack(rows)
    sv = np.linalg.svd(a, compute_uv=False)
    return int(n * n - np.sum(sv > RANK_TOL * max(sv[0], 1.0)))


def _signed_images(K: IncarnatingSet, g: np.ndarray):
    """Index and sign with ``g y_i = sign * y_idx``; raises if g does not preserve K."""
    y = K.generators
    scale = np.abs(y).max()
    img = (y @ g.T) / scale
    idx = _match(img, y / scale, GROUP_TOL * 10, True)
    if idx is None or np.abs(K.weights[idx] - K.weights).max() > GROUP_TOL:
        raise InvarianceError("group element does not map the generator set to itself")
    sign = np.sign(np.einsum("ij,ij->i", img, y[idx] / scale))
    return idx, sign


def symmetry_group(K: IncarnatingSet) -> FiniteOrthogonalGroup:
    """Orthogonal maps of the plane sending ``±K`` onto itself.

    Candidates are the rotations and reflections carrying a reference
    generator onto another generator of equal length; each candidate is
    kept if it maps the whole symmetric set onto itself.
    """
    if K.dim != 2:
        raise DimensionError("symmetry_group is implemented for planar sets")
    full = K.as_half().merged().full_set()
    scale = np.abs(full).max()
    y0 = full[0]
    r0 = np.linalg.norm(y0)
    a0 = math.atan2(y0[1], y0[0])
    rots, refls = {}, {}
    for f in full:
        if abs(np.linalg.norm(f) - r0) > GROUP_TOL * 10 * scale:
            continue
        af = math.atan2(f[1], f[0])
        for kind, g in (("rot", rotation(af - a0)), ("ref", reflection((a0 + af) / 2))):
            if same_point_sets(full @ g.T, full, GROUP_TOL * 10):
                ang = (af - a0) % (2 * math.pi) if kind == "rot" else ((a0 + af) / 2) % math.pi
                (rots if kind == "rot" else refls)[round(ang, 9)] = g
    mats = np.array([rots[k] for k in sorted(rots)] + [refls[k] for k in sorted(refls)])
    mats[np.abs(mats) < 1e-15] = 0.0
    return FiniteOrthogonalGroup(2, mats)


@dataclass(frozen=True)
class EquivariantMap:
    """Vectors ``mu(y_i)`` for the half-set generators, extended oddly."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __repr__(self):
        return f"EquivariantMap(shape={self.values.shape})"

    def __mul__(self, t):
        return EquivariantMap(self.values * t)

    __rmul__ = __mul__


def equivariant_basis(K: IncarnatingSet, G: FiniteOrthogonalGroup) -> list[EquivariantMap]:
    """Basis of the maps ``mu`` with ``mu(g u) = g mu(u)`` on ``±K``.

    Solved as the null space of the constraints over a generating set of G.
    The first basis vector is the normalized projection of ``mu = id``.
    """
    if G.n != K.dim:
        raise DimensionError("group and generator set live in different dimensions")
    h, n = len(K), K.dim
    rows = []
    for g in G.generating_set:
        idx, sign = _signed_images(K, g)
        for i in range(h):
            block = np.zeros((n, h * n))
            block[:, idx[i] * n : (idx[i] + 1) * n] += sign[i] * np.eye(n)
            block[:, i * n : (i + 1) * n] -= g
            rows.append(block)
    a = np.vstack(rows)
    # entries are O(1) (orthogonal blocks), so the threshold never drops below RANK_TOL
    _, sv, vt = np.linalg.svd(a)
    rank = int(np.sum(sv > RANK_TOL * max(sv[0], 1.0)))
    null = vt[rank:].T
    ident = K.generators.ravel()
    lead = null @ (null.T @ ident)
    if np.linalg.norm(lead) > RANK_TOL * np.linalg.norm(ident):
        lead = lead / np.linalg.norm(lead)
        rest = null - np.outer(lead, lead @ null)
        u = np.linalg.svd(rest, full_matrices=False)[0]
        vecs = [lead] + [u[:, k] for k in range(null.shape[1] - 1)]
    else:
        vecs = [null[:, k] for k in range(null.shape[1])]
    out = []
    for v in vecs:
        v = v.reshape(h, n)
        # sign convention: positive trace pairing, else first nonzero entry positive
        pair = float(np.sum(K.weights[:, None] * v * K.generators))
        flat = v.ravel()
        k = np.flatnonzero(np.abs(flat) > RANK_TOL)
        if pair < -RANK_TOL or (abs(pair) <= RANK_TOL and k.size and flat[k[0]] < 0):
            v = -v
        out.append(EquivariantMap(v))
    return out


def function_action(K: IncarnatingSet, g: np.ndarray) -> np.ndarray:
    """Matrix of ``f -> g f`` with ``(g f)(u) = f(g^{-1} u)`` on odd functions."""
    idx, sign = _signed_images(K, np.asarray(g).T)
    h = len(K)
    m = np.zeros((h, h))
    m[np.arange(h), idx] = sign
    return m


@dataclass(frozen=True)
class InvariantProjection:
    """``P f = scale * sum_i w_i f(y_i) mu(y_i)`` over the half-set."""

    K: IncarnatingSet = field(repr=False)
    mu: EquivariantMap = field(repr=False)
    scale: float

    @property
    def matrix(self) -> np.ndarray:
        """n x h matrix acting on half-set function values."""
        return self.scale * (self.K.weights[:, None] * self.mu.values).T

    @property
    def evaluation(self) -> np.ndarray:
        """h x n matrix sending y to the data ``f(u) = <u, y>``."""
        return np.asarray(self.K.generators)

    def __call__(self, f):
        return np.asarray(f, dtype=float) @ self.matrix.T


def invariant_projection(K: IncarnatingSet, mu: EquivariantMap) -> InvariantProjection:
    mu = mu if isinstance(mu, EquivariantMap) else EquivariantMap(mu)
    if mu.values.shape != K.generators.shape:
        raise DimensionError("mu must assign one vector per generator")
    total = float(np.sum(K.weights[:, None] * mu.values * K.generators))
    ref = np.sum(K.weights * np.linalg.norm(mu.values, axis=1) * np.linalg.norm(K.generators, axis=1))
    if ref == 0 or abs(total) <= 1e-12 * ref:
        raise DegenerateMuError("sum of (u, mu(u)) vanishes")
    return InvariantProjection(K, mu, K.dim / total)


@dataclass
class LambdaReport:
    lam: float
    mu_coefficients: list
    worst_direction: list
    grid_points: int
    refinement_iters: int
    convention: str
    p: float
    basis_dim: int = 1
    group_order: int = 0
    grid_value: float = float("nan")
    refinement_delta: float = 0.0
    optimizer_evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "mu_coefficients": list(self.mu_coefficients),
            "worst_direction": list(self.worst_direction),
            "grid_points": self.grid_points,
            "refinement_iters": self.refinement_iters,
            "convention": self.convention,
            "p": self.p,
            "basis_dim": self.basis_dim,
            "group_order": self.group_order,
            "grid_value": self.grid_value,
            "refinement_delta": self.refinement_delta,
            "optimizer_evaluations": self.optimizer_evaluations,
        }


def _golden_max(fn, lo, hi, tol):
    """Golden-section search for a maximum of ``fn`` on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    iters = 0
    while b - a > tol:
        iters += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x), iters


class _PlanarSweep:
    """Angle-grid evaluation of the norm, dual norm and adjoint ratio."""

    def __init__(self, K: IncarnatingSet, p: float, grid_points: int, angle_tol: float):
        self.K, self.p = K, p
        self.q = math.inf if p == 1 else p / (p - 1)
        self.kappa = K.norm_factor(p)
        self.grid = grid_points
        self.angle_tol = angle_tol
        self.step = math.pi / grid_points
        self.theta = np.arange(grid_points) * self.step
        self.dirs = np.c_[np.cos(self.theta), np.sin(self.theta)]
        self._scale = K.scale
        self._ys = K.generators / self._scale
        self.boundary = self.dirs / self._norm(self.dirs)[:, None]
        self.iters = 0
        self.dual_grid = self._dual_on_grid()

    def _norm(self, d):
        """Induced norm of the rows of ``d`` (lean version of subspace_norm)."""
        vals = np.abs(d @ self._ys.T)
        w = self.K.weights
        # rows of d are unit and the generators are rescaled, so no overflow
        if self.p == 1:
            return self._scale * (vals @ w)
        if self.p == 2:
            return self._scale * np.sqrt(self.kappa * ((vals * vals) @ w))
        return self._scale * (self.kappa * ((vals ** self.p) @ w)) ** (1 / self.p)

    def _ratio(self, phi, v):
        d = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return np.abs(np.einsum("...i,...i->...", d, v)) / self._norm(d)

    def _dual_on_grid(self) -> np.ndarray:
        # phi -> <v, b(phi)> is unimodal along the convex boundary, so the
        # fine argmax lies next to the argmax over a coarse subgrid
        stride = max(1, self.grid // 256)
        coarse = np.abs(self.dirs @ self.boundary[::stride].T).argmax(axis=1) * stride
        window = coarse[:, None] + np.arange(-stride, stride + 1)[None, :]
        window %= self.grid
        vals = np.abs(np.einsum("ki,kji->kj", self.dirs, self.boundary[window]))
        k = window[np.arange(self.grid), vals.argmax(axis=1)]
        return self._refine_dual(self.theta[k], self.dirs)

    def _refine_dual(self, phi0, v):
        """Vectorized golden-section search of the dual-norm ratio per direction."""
        a, b = phi0 - self.step, phi0 + self.step
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc, fd = self._ratio(c, v), self._ratio(d, v)
        best = np.maximum(self._ratio(phi0, v), np.maximum(fc, fd))
        while np.max(b - a) > self.angle_tol:
            self.iters += 1
            left = fc >= fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            # only one new probe per direction
            x = np.where(left, b - GOLDEN * (b - a), a + GOLDEN * (b - a))
            fx = self._ratio(x, v)
            c, d = np.where(left, x, d), np.where(left, c, x)
            fc, fd = np.where(left, fx, fd), np.where(left, fc, fx)
            best = np.maximum(best, fx)
        return best

    def dual_norm(self, theta: float) -> float:
        v = np.array([math.cos(theta), math.sin(theta)])
        k = int(np.argmax(np.abs(self.boundary @ v)))

        def f(phi):
            d = np.array([math.cos(phi), math.sin(phi)])
            return abs(d @ v) / float(self._norm(d))

        phi0 = self.theta[k]
        _, best, it = _golden_max(f, phi0 - self.step, phi0 + self.step, self.angle_tol)
        self.iters += it
        return max(best, f(phi0))

    def adjoint(self, mu: np.ndarray, scale: float, v: np.ndarray) -> np.ndarray:
        g = np.abs(v @ mu.T)
        w = self.K.weights
        # mu is normalized and v is unit, so the power sums stay in range
        if math.isinf(self.q):
            s = g.max(axis=-1)
        elif self.q == 2:
            s = np.sqrt((g * g) @ w)
        else:
            s = ((g ** self.q) @ w) ** (1 / self.q)
        return abs(scale) * self.kappa ** (-1 / self.p) * s

    def grid_norm(self, mu, scale):
        r = self.adjoint(mu, scale, self.dirs) / self.dual_grid
        k = int(np.argmax(r))
        return float(r[k]), k

    def refined_norm(self, mu, scale):
        gval, k = self.grid_norm(mu, scale)

        def f(t):
            v = np.array([math.cos(t), math.sin(t)])
            return float(self.adjoint(mu, scale, v)) / self.dual_norm(t)

        t0 = self.theta[k]
        t, val, it = _golden_max(f, t0 - self.step, t0 + self.step, self.angle_tol)
        self.iters += it
        v0 = f(t0)
        if v0 > val:
            t, val = t0, v0
        return val, t, gval


def projection_constant(
    K: IncarnatingSet,
    p=None,
    G: FiniteOrthogonalGroup | None = None,
    grid_points: int = 4096,
    angle_tol: float = 1e-10,
) -> LambdaReport:
    """Relative projection constant of the planar subspace incarnated by ``K``.

    Minimizes the operator norm of the invariant projections over the
    equivariant maps (Nelder-Mead on the normalized coefficient hyperplane,
    skipped for a one-dimensional basis).  The operator norm is computed
    through the adjoint: the sup over dual directions ``v`` of the l_q norm of
    ``u -> c <v, mu(u)>`` divided by the dual norm of ``v``, on an angle grid
    refined by golden-section search.
    """
    if K.dim != 2:
        raise DimensionError("projection_constant is implemented for planar subspaces")
    p = K.ambient_p if p is None else float(p)
    if not (1 <= p < math.inf):
        raise ValidationError("projection_constant needs 1 <= p < inf")
    Km = K.as_half().merged(p=p)
    if G is None:
        G = symmetry_group(Km)
    if not is_ample(G):
        raise ValidationError(
            "symmetry group is not ample; the invariant-projection formula does not apply"
        )
    basis = equivariant_basis(Km, G)
    stack = np.array([b.values for b in basis])
    y, w = Km.generators, Km.weights
    s = np.einsum("kij,ij,i->k", stack, y, w)
    a0 = np.einsum("kij,ij->k", stack, y)
    sweep = _PlanarSweep(Km, p, grid_points, angle_tol)

    def build(a):
        mu = np.tensordot(a, stack, axes=1)
        total = float(a @ s)
        return mu, (2.0 / total if total != 0 else math.inf)

    evals = 0
    a_best = a0
    if len(basis) > 1:
        null = np.linalg.svd(s[None, :])[2][1:].T

        def objective(t):
            nonlocal evals
            evals += 1
            mu, c = build(a0 + null @ t)
            return sweep.grid_norm(mu, c)[0]

        step = 0.05 * np.linalg.norm(a0)
        simplex = np.vstack([np.zeros(len(basis) - 1), step * np.eye(len(basis) - 1)])
        res = minimize(
            objective,
            np.zeros(len(basis) - 1),
            method="Nelder-Mead",
            options={"initial_simplex": simplex, "xatol": 1e-11, "fatol": 1e-14, "maxiter": 4000},
        )
        if res.fun < objective(np.zeros(len(basis) - 1)):
            a_best = a0 + null @ res.x
    mu, c = build(a_best)
    val, t, gval = sweep.refined_norm(mu, c)
    return LambdaReport(
        lam=float(val),
        mu_coefficients=[float(x) for x in a_best / (a_best @ s) * (a0 @ s)],
        worst_direction=[math.cos(t), math.sin(t)],
        grid_points=grid_points,
        refinement_iters=sweep.iters,
        convention=K.convention,
        p=p,
        basis_dim=len(basis),
        group_order=len(G),
        grid_value=float(gval),
        refinement_delta=float(val - gval),
        optimizer_evaluations=evals,
    )

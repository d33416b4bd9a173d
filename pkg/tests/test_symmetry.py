import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from amalgam_lab.exceptions import DegenerateMuError, GroupError, InvarianceError, ValidationError
from amalgam_lab.geometry import reflection, rotation
from amalgam_lab.incarnation import make_incarnating_set, subspace_norm
from amalgam_lab.lp_experiments import polygon_K, rotated_union
from amalgam_lab.symmetry import (
    EquivariantMap,
    FiniteOrthogonalGroup,
    _closure,
    ample_deviation,
    commutant_dim,
    cyclic_rotations,
    dihedral,
    equivariant_basis,
    function_action,
    invariant_projection,
    is_ample,
    make_G1,
    make_G2,
    projection_constant,
    symmetry_group,
    trivial_group,
)

cp = pytest.importorskip("cvxpy")


def central(n):
    return FiniteOrthogonalGroup(n, [np.eye(n), -np.eye(n)])


def suite():
    return {
        "G1(2)": make_G1(2),
        "G1(3)": make_G1(3),
        "G2(2)": make_G2(2),
        "G2(3)": make_G2(3),
        "dihedral-12": dihedral(12),
        "rotation-4": cyclic_rotations(4),
        "trivial": trivial_group(2),
        "central": central(2),
    }


def character_commutant_dim(G):
    """Oracle: dim of the commutant of a real orthogonal representation."""
    return round(sum(np.trace(g) ** 2 for g in G.elements) / len(G))


def brute_ample_deviation(G):
    n = G.n
    eye = np.eye(n)
    worst = 0.0
    for a, b, c in itertools.product(range(n), repeat=3):
        u, x, v = eye[a], eye[b], eye[c]
        lhs = sum((g @ u) * np.dot(x, g @ v) for g in G.elements) / len(G)
        worst = max(worst, np.abs(lhs - np.dot(u, v) * x / n).max())
    return worst


def test_group_sizes():
    assert len(make_G1(2)) == 8
    assert len(make_G1(3)) == 48
    assert len(make_G2(2)) == 6
    assert len(make_G2(3)) == 24
    for n in range(1, 5):
        keys = {np.round(g, 7).tobytes() for g in make_G1(n).elements}
        assert np.round(-np.eye(n) + 0.0, 7).tobytes() in keys
    with pytest.raises(ValidationError):
        make_G1(7)
    with pytest.raises(ValidationError):
        make_G2(0)


def test_G2_acts_on_zero_sum_hyperplane():
    from amalgam_lab.symmetry import helmert_basis

    for n in (2, 3, 4):
        H = helmert_basis(n)
        assert np.allclose(H @ H.T, np.eye(n))
        assert np.allclose(H @ np.ones(n + 1), 0)
        G = make_G2(n)
        for g in G.elements:
            # lifted action H^T g H permutes coordinates and fixes the ones vector
            lifted = H.T @ g @ H + np.ones((n + 1, n + 1)) / (n + 1)
            assert np.allclose(lifted @ np.ones(n + 1), np.ones(n + 1))
            assert np.allclose(np.sort(np.abs(lifted), axis=1)[:, -1], 1)


def test_group_validation():
    with pytest.raises(GroupError):
        FiniteOrthogonalGroup(2, [np.eye(2), rotation(math.pi / 2)])  # not closed
    with pytest.raises(GroupError):
        FiniteOrthogonalGroup(2, [np.eye(2), 2 * np.eye(2)])
    with pytest.raises(GroupError):
        FiniteOrthogonalGroup(2, [-np.eye(2)])
    with pytest.raises(GroupError):
        FiniteOrthogonalGroup(2, [np.eye(2), np.eye(2)])


@pytest.mark.parametrize("n", [2, 3, 4])
def test_G1_G2_ample(n):
    assert ample_deviation(make_G1(n)) < 1e-9
    assert ample_deviation(make_G2(n)) < 1e-9
    assert is_ample(make_G1(n)) and is_ample(make_G2(n))


def test_trivial_group_not_ample():
    assert not is_ample(trivial_group(2))
    # u = e1, x = v = e2 gives e1 against 0
    assert ample_deviation(trivial_group(2)) == pytest.approx(1.0)


@pytest.mark.parametrize("name", list(suite()))
def test_ample_deviation_matches_brute_force(name):
    G = suite()[name]
    assert ample_deviation(G) == pytest.approx(brute_ample_deviation(G), abs=1e-12)


@pytest.mark.parametrize("name", list(suite()))
def test_commutant_matches_character_oracle(name):
    G = suite()[name]
    assert commutant_dim(G) == character_commutant_dim(G)
    # ample iff the commutant is the scalars
    assert is_ample(G) == (commutant_dim(G) == 1)


def test_commutant_examples():
    assert commutant_dim(make_G1(2)) == 1
    assert commutant_dim(trivial_group(2)) == 4
    assert commutant_dim(cyclic_rotations(4)) == 2


def test_subgroups_containing_ample_subgroup_are_ample():
    G = make_G1(2)
    el = list(G.elements)
    subgroups = {}
    for a, b in itertools.combinations_with_replacement(range(len(el)), 2):
        closed = _closure(np.array([el[a], el[b]]), 2, 64)
        subgroups[frozenset(closed)] = FiniteOrthogonalGroup(2, np.array(list(closed.values())))
    ample = [k for k, H in subgroups.items() if is_ample(H)]
    assert ample
    for k, H in subgroups.items():
        if any(a <= k for a in ample):
            assert is_ample(H)


def test_symmetry_group_examples(hexagon, square):
    G = symmetry_group(hexagon)
    assert len(G) == 12
    assert sum(np.linalg.det(g) > 0 for g in G.elements) == 6
    assert len(symmetry_group(square)) == 8
    rng = np.random.default_rng(1)
    K = make_incarnating_set(2, rng.standard_normal((3, 2)), 1)
    G = symmetry_group(K)
    assert len(G) == 2
    assert np.allclose(G.elements[1], -np.eye(2))


def test_symmetry_group_of_rotated_union():
    G = symmetry_group(rotated_union(2, 2).points)
    assert len(G) == 12 and is_ample(G)
    # the union is not invariant under the hexagon's own reflections
    with pytest.raises(InvarianceError):
        equivariant_basis(rotated_union(2, 2).points, symmetry_group(polygon_K(2).points))


def _proportional(a, b):
    t = np.sum(a * b) / np.sum(b * b)
    return np.allclose(a, t * b, atol=1e-12)


def test_equivariant_basis_examples(hexagon, square):
    (b,) = equivariant_basis(hexagon, symmetry_group(hexagon))
    assert _proportional(b.values, hexagon.generators)
    (b,) = equivariant_basis(square, symmetry_group(square))
    assert _proportional(b.values, square.generators)
    rng = np.random.default_rng(2)
    K = make_incarnating_set(2, rng.standard_normal((4, 2)), 1)
    assert len(equivariant_basis(K, central(2))) == 2 * 4


def test_equivariant_basis_satisfies_constraints():
    K = rotated_union(2, 2).points
    G = symmetry_group(K)
    basis = equivariant_basis(K, G)
    assert len(basis) == 2
    for b in basis:
        for g in G.elements:
            A = function_action(K, g)
            # (A mu)_i = mu(g^-1 y_i), and equivariance means g mu(g^-1 u) = mu(u)
            assert np.allclose(A @ b.values @ g.T, b.values, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_invariant_projection_properties(seed):
    rng = np.random.default_rng(seed)
    for K in (polygon_K(2).points, rotated_union(2, 2).points):
        G = symmetry_group(K)
        basis = equivariant_basis(K, G)
        coef = rng.uniform(0.5, 1.5, len(basis))
        mu = EquivariantMap(sum(c * b.values for c, b in zip(coef, basis)))
        P = invariant_projection(K, mu)
        E = P.evaluation
        y = rng.standard_normal(2)
        assert np.allclose(P(E @ y), y, atol=1e-9)
        f = rng.standard_normal(len(K))
        EP = E @ P.matrix
        assert np.allclose(EP @ EP @ f, EP @ f, atol=1e-9)
        for g in G.elements:
            assert np.allclose(P(function_action(K, g) @ f), g @ P(f), atol=1e-9)


def test_invariant_projection_examples(hexagon, square):
    P = invariant_projection(hexagon, EquivariantMap(hexagon.generators))
    f = np.array([0.3, -1.0, 2.0])
    full = np.r_[hexagon.generators, -hexagon.generators]
    assert np.allclose(P(f), np.r_[f, -f] @ full / 3)
    Q = invariant_projection(hexagon, EquivariantMap(5.0 * hexagon.generators))
    assert np.allclose(P.matrix, Q.matrix)
    S = invariant_projection(square, EquivariantMap(square.generators))
    assert np.allclose(S.matrix, np.eye(2)[:, ::-1] if np.allclose(square.generators[0], [0, 1]) else np.eye(2))
    with pytest.raises(DegenerateMuError):
        invariant_projection(square, EquivariantMap(square.generators[::-1] * [[1, 0], [1, 0]] * 0))


def closed_form_hexagon(p=4.0):
    """Oracle: adjoint sweep for the hexagon with mu = id, in closed form."""
    q = p / (p - 1)

    def ratio(t):
        s = sum(abs(math.cos(t - k * math.pi / 3)) ** q for k in range(6))
        return s ** (1 / q) * (9 / 4) ** (1 / p) / 3

    th = np.linspace(0, math.pi / 3, 20001)
    k = int(np.argmax([ratio(t) for t in th]))
    lo, hi = th[max(k - 1, 0)], th[min(k + 1, len(th) - 1)]
    res = minimize_scalar(lambda t: -ratio(t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(-res.fun, ratio(th[k]))


def cvx_minimal_projection(K, p, angles=720):
    """Oracle: minimal norm over all projections onto a Euclidean plane.

    Functions live on the half-set with the weighted full-set l_p norm, so the
    dual of a functional ``a`` is ``(sum (2w)^(1-q) |a_i|^q)^(1/q)``; the
    plane carries ``c^(1/p)`` times the Euclidean norm.  The sup over dual
    directions is discretized on an angle grid.
    """
    y, w = K.generators, K.weights
    c = subspace_norm(K, [1.0, 0.0]) ** p
    q = p / (p - 1)
    scale = (2 * w) ** ((1 - q) / q)
    P = cp.Variable((2, len(y)))
    t = cp.Variable()
    cons = [P @ y == np.eye(2)]
    for th in np.linspace(0, math.pi, angles + 1)[:-1]:
        v = np.array([math.cos(th), math.sin(th)])
        cons.append(c ** (1 / p) * cp.pnorm(cp.multiply(scale, P.T @ v), q) <= t)
    cp.Problem(cp.Minimize(t), cons).solve()
    return float(t.value)


def test_projection_constant_trivial_cases(hexagon, square):
    assert projection_constant(hexagon, p=2).lam == pytest.approx(1.0, abs=1e-10)
    assert projection_constant(square, p=1).lam == pytest.approx(1.0, abs=1e-10)
    assert projection_constant(square, p=4).lam == pytest.approx(1.0, abs=1e-10)


def test_projection_constant_hexagon_closed_form(hexagon):
    oracle = closed_form_hexagon(4.0)
    rep = projection_constant(hexagon, p=4)
    assert rep.lam == pytest.approx(oracle, abs=1e-9)
    assert rep.lam == pytest.approx(1.0641658628581, abs=1e-9)
    assert rep.basis_dim == 1 and rep.group_order == 12
    assert rep.to_dict()["lambda"] == rep.lam


def test_projection_constant_union_matches_convex_program():
    K = rotated_union(2, 2).points
    rep = projection_constant(K)
    assert rep.basis_dim == 2
    oracle = cvx_minimal_projection(K, 4.0)
    assert rep.lam == pytest.approx(oracle, abs=2e-6)
    assert rep.lam == pytest.approx(1.0535530986, abs=1e-8)


def test_projection_constant_m3_matches_convex_program():
    K = rotated_union(2, 3).points
    assert projection_constant(K).lam == pytest.approx(cvx_minimal_projection(K, 4.0), abs=2e-6)


@pytest.mark.parametrize("angle", [0.1234, 1.0, 2.5])
@pytest.mark.parametrize("scale", [0.3, 7.0])
def test_projection_constant_invariances(angle, scale):
    K = rotated_union(2, 2).points
    base = projection_constant(K).lam
    moved = K.transformed(scale * rotation(angle))
    assert projection_constant(moved).lam == pytest.approx(base, abs=1e-8)


def test_projection_constant_at_least_one():
    rng = np.random.default_rng(8)
    for p in (1.5, 3.0, 6.0):
        for m in (1, 2, 3):
            assert projection_constant(rotated_union(2, m).points, p=p).lam >= 1 - 1e-12


def test_projection_constant_rejects_non_ample():
    rng = np.random.default_rng(3)
    K = make_incarnating_set(2, rng.standard_normal((3, 2)), 4)
    with pytest.raises(ValidationError):
        projection_constant(K)
    with pytest.raises(ValidationError):
        projection_constant(make_incarnating_set(3, np.eye(3), 4))

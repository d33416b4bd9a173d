import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amalgam_lab.amalgam import (
    AmalgamResult,
    VFormation,
    amalgamate,
    edge_classes,
    pullback,
    random_vformation,
    verify_amalgam,
)
from amalgam_lab.exceptions import NonMatchingRootError, RankDeficiencyError, ValidationError
from amalgam_lab.geometry import congruence, same_point_sets
from amalgam_lab.incarnation import make_incarnating_set, subspace_norm


@pytest.fixture
def diag_vform(square):
    i = np.array([[0.5], [0.5]])
    return VFormation(1, square, square, i, i)


def test_pullback_examples(square, hexagon):
    K = pullback(square, np.array([[1.0], [0.0]]))
    assert np.allclose(K.generators, [[1.0]])
    K = pullback(square, np.array([[0.5], [0.5]]))
    assert np.allclose(K.generators.ravel(), [0.5, 0.5])
    assert subspace_norm(K, [3.0]) == pytest.approx(3.0)
    K = pullback(hexagon, np.eye(2))
    assert np.allclose(K.generators, hexagon.generators)
    with pytest.raises(RankDeficiencyError):
        pullback(hexagon, np.array([[1.0, 2.0], [1.0, 2.0]]))


def test_pullback_norm_contract():
    rng = np.random.default_rng(0)
    K = make_incarnating_set(4, rng.standard_normal((9, 4)), 1)
    i = rng.standard_normal((4, 2))
    x = rng.standard_normal((100, 2))
    assert np.allclose(subspace_norm(pullback(K, i), x), subspace_norm(K, x @ i.T))


def test_edge_classes_examples(square, hexagon):
    c = edge_classes(square, np.array([[0.5], [0.5]]))
    keys = [k for k in c if k is not None]
    assert len(keys) == 1
    assert sorted(a for _, a in c[keys[0]]) == pytest.approx([0.5, 0.5])
    c = edge_classes(hexagon, np.eye(2))
    assert len([k for k in c if k is not None]) == 3
    assert not c[None]
    c = edge_classes(square, np.array([[1.0], [0.0]]))
    assert len(c[None]) == 1


def test_amalgamate_diagonal_example(diag_vform):
    a = amalgamate(diag_vform)
    assert a.K_W.dim == 3
    assert len(a.K_W) == 4
    rep = verify_amalgam(diag_vform, a, samples=1000, seed=7)
    assert rep["passed"]
    assert rep["max_isometry_error"] < 1e-9
    assert rep["intersection_dim"] == 1


def test_degenerate_root_equals_leg(hexagon):
    T = np.array([[2.0, 0.3], [-0.4, 1.1]])
    KZ = hexagon.transformed(T)
    v = VFormation(2, hexagon, KZ, np.eye(2), np.linalg.inv(T).T)
    a = amalgamate(v)
    assert a.K_W.dim == 2
    assert congruence(a.K_W.merged(), KZ.merged()) is not None
    rep = verify_amalgam(v, a)
    assert rep["passed"]
    assert rep["max_isometry_error"] < 1e-12


def test_swap_legs_gives_congruent_amalgam(diag_vform):
    a = amalgamate(diag_vform)
    w = VFormation(1, diag_vform.K_Z, diag_vform.K_Y, diag_vform.i_Z, diag_vform.i_Y)
    b = amalgamate(w)
    assert congruence(a.K_W.merged(), b.K_W.merged()) is not None


@pytest.mark.parametrize("seed", range(5))
def test_swap_legs_exchanges_coordinate_blocks(seed):
    # swapping the legs only exchanges the Y' and Z' blocks of the W coordinates
    v = random_vformation(np.random.default_rng(seed), 2)
    w = VFormation(2, v.K_Z, v.K_Y, v.i_Z, v.i_Y)
    a, b = amalgamate(v), amalgamate(w)
    ey = v.K_Y.dim - 2
    ez = v.K_Z.dim - 2
    perm = np.r_[0, 1, 2 + ey + np.arange(ez), 2 + np.arange(ey)]
    assert same_point_sets(a.K_W.generators[:, perm], b.K_W.generators, tol=1e-9, signed=True)


def test_nonmatching_root_rejected(square, hexagon):
    with pytest.raises(NonMatchingRootError):
        VFormation(1, square, square, np.array([[1.0], [0.0]]), np.array([[1.0], [1.0]]))
    with pytest.raises(NonMatchingRootError):
        VFormation(2, square, hexagon, np.eye(2), np.eye(2))


def test_vformation_requires_l1(square):
    K4 = make_incarnating_set(2, square.generators, 4)
    with pytest.raises(ValidationError):
        VFormation(2, K4, K4, np.eye(2), np.eye(2))
    with pytest.raises(ValidationError):
        VFormation(3, square, square, np.eye(2), np.eye(2))


def test_verify_detects_perturbation(diag_vform):
    a = amalgamate(diag_vform)
    g = np.array(a.K_W.generators)
    g[0] = g[0] + 1e-3
    bad = AmalgamResult(make_incarnating_set(a.K_W.dim, g, 1), a.j_Y, a.j_Z, a.report)
    rep = verify_amalgam(diag_vform, bad, samples=1000, seed=0)
    assert not rep["passed"]
    assert rep["max_isometry_error"] > 1e-6


def test_verify_is_seeded(diag_vform):
    a = amalgamate(diag_vform)
    assert verify_amalgam(diag_vform, a, seed=3) == verify_amalgam(diag_vform, a, seed=3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_random_vformations_amalgamate(seed, r):
    v = random_vformation(np.random.default_rng(seed), r)
    a = amalgamate(v)
    rep = verify_amalgam(v, a, samples=300, seed=seed % 1000)
    assert rep["commuting_error"] <= 1e-12
    assert rep["max_isometry_error"] < 1e-9
    assert rep["pullback_reproduces_Y"] and rep["pullback_reproduces_Z"]
    assert rep["intersection_dim"] == r
    assert np.allclose(a.j_Y @ v.i_Y, a.j_Z @ v.i_Z, atol=1e-12)


def test_random_vformation_sizes():
    rng = np.random.default_rng(0)
    for r in (1, 2):
        for _ in range(10):
            v = random_vformation(rng, r)
            assert len(v.K_Y) <= 12 + 3 and len(v.K_Z) <= 12 + 3
            assert v.root_mismatch() < 1e-9

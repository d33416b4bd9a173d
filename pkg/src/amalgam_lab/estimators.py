"""scikit-learn style wrappers around the functional API.

These give the common pipelines a ``fit``/``transform`` interface with
parameter introspection; the functional modules stay the primary API.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import convex_hull_2d
from .incarnation import besselian_incarnate, generators_from_polytope, make_incarnating_set, subspace_norm
from .symmetry import (
    EquivariantMap,
    equivariant_basis,
    invariant_projection,
    projection_constant,
    symmetry_group,
)


class ZonotopeIncarnation(TransformerMixin, BaseEstimator):
    """Fit a centrally symmetric polygon, transform directions to induced norms.

    ``fit`` takes the polygon vertices (any order; the hull is taken) and
    stores the generators whose dual ball is the polygon.  ``transform`` maps
    each row ``x`` to the l_1 norm it induces on the generators.
    """

    def __init__(self, tol=1e-9):
        self.tol = tol

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=4)
        if X.shape[1] != 2:
            raise ValueError("polygon vertices must be planar")
        hull = convex_hull_2d(X, tol=self.tol)
        self.polygon_ = hull
        self.incarnating_set_ = generators_from_polytope(hull)
        self.generators_ = np.array(self.incarnating_set_.generators)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "generators_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return subspace_norm(self.incarnating_set_, X)[:, None]


class BesselianIncarnator(TransformerMixin, BaseEstimator):
    """Fit a subspace basis (N x m columns) of l_p^N, transform coordinates.

    After ``fit`` the attribute ``realization_`` holds the orthonormalized
    basis and the raw generator set.  ``transform`` sends coordinates in that
    basis to their ambient vectors, whose l_p norm equals the induced norm.
    """

    def __init__(self, p=1.0):
        self.p = p

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=1)
        self.realization_ = besselian_incarnate(self.p, X.shape[0], X)
        self.generators_ = np.array(self.realization_.raw_generators)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "realization_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.realization_.embed(X)


class ProjectionConstantEstimator(TransformerMixin, BaseEstimator):
    """Fit planar generators, store the minimal invariant projection.

    ``sample_weight`` in ``fit`` acts as multiplicities of the generators.
    ``transform`` applies the fitted projection to rows of half-set function
    values (one column per stored generator).
    """

    def __init__(self, p=4.0, grid_points=4096, angle_tol=1e-10):
        self.p = p
        self.grid_points = grid_points
        self.angle_tol = angle_tol

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, ensure_min_samples=2)
        if X.shape[1] != 2:
            raise ValueError("projection constants are computed for planar generator sets")
        if sample_weight is not None:
            sample_weight = check_array(sample_weight, ensure_2d=False)
        K = make_incarnating_set(2, X, ambient_p=self.p, weights=sample_weight).as_half().merged(self.p)
        G = symmetry_group(K)
        rep = projection_constant(K, p=self.p, G=G, grid_points=self.grid_points, angle_tol=self.angle_tol)
        self.incarnating_set_ = K
        self.group_order_ = len(G)
        self.report_ = rep
        self.lambda_ = rep.lam
        self.mu_coefficients_ = np.array(rep.mu_coefficients)
        self.worst_direction_ = np.array(rep.worst_direction)
        basis = equivariant_basis(K, G)
        mu = np.tensordot(self.mu_coefficients_, np.array([b.values for b in basis]), axes=1)
        self.projection_ = invariant_projection(K, EquivariantMap(mu))
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "projection_")
        P = self.projection_
        X = check_array(X)
        if X.shape[1] != len(self.incarnating_set_):
            raise ValueError(f"expected {len(self.incarnating_set_)} function values per row")
        return P(X)


__all__ = ["ZonotopeIncarnation", "BesselianIncarnator", "ProjectionConstantEstimator"]

"""Incarnating sets of l_p subspaces, l_1 amalgams and projection constants."""

__version__ = "0.1.0"

from .exceptions import AmalgamLabError, ValidationError  # noqa: E402
from .geometry import Polytope2D, congruence, convex_hull_2d, lp_norm  # noqa: E402
from .incarnation import (  # noqa: E402
    IncarnatingSet,
    besselian_incarnate,
    cantor_ball,
    dual_ball,
    generators_from_polytope,
    isometric,
    make_incarnating_set,
    subspace_norm,
    triple_norm_budget,
)
from .amalgam import VFormation, amalgamate, pullback, verify_amalgam  # noqa: E402
from .symmetry import (  # noqa: E402
    FiniteOrthogonalGroup,
    commutant_dim,
    equivariant_basis,
    invariant_projection,
    is_ample,
    make_G1,
    make_G2,
    projection_constant,
    symmetry_group,
)
from .lp_experiments import (  # noqa: E402
    counterexample_report,
    euclidean_check,
    lambda_curve,
    norm_comparison_4_3,
    polygon_K,
    rotated_union,
)

__all__ = [
    "AmalgamLabError", "ValidationError", "Polytope2D", "congruence", "convex_hull_2d",
    "lp_norm", "IncarnatingSet", "besselian_incarnate", "cantor_ball", "dual_ball",
    "generators_from_polytope", "isometric", "make_incarnating_set", "subspace_norm",
    "triple_norm_budget", "VFormation", "amalgamate", "pullback", "verify_amalgam",
    "FiniteOrthogonalGroup", "commutant_dim", "equivariant_basis", "invariant_projection",
    "is_ample", "make_G1", "make_G2", "projection_constant", "symmetry_group",
    "counterexample_report", "euclidean_check", "lambda_curve", "norm_comparison_4_3",
    "polygon_K", "rotated_union",
]

"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI in its
``ERROR:<code>:`` prefix.
"""


class AmalgamLabError(Exception):
    code = "error"


class ValidationError(AmalgamLabError, ValueError):
    """Input data violates a mathematical precondition (CLI exit code 2)."""

    code = "validation"


class DegenerateHullError(ValidationError):
    code = "degenerate-hull"


class IncompleteSetError(ValidationError):
    code = "incomplete"


class EmptySetError(ValidationError):
    code = "empty-set"


class DimensionError(ValidationError):
    code = "dimension"


class AsymmetricPolytopeError(ValidationError):
    code = "asymmetric"


class RankDeficiencyError(ValidationError):
    code = "rank-deficient"


class InconsistentEdgeError(ValidationError):
    code = "inconsistent-edge"


class NonMatchingRootError(ValidationError):
    code = "non-matching-root"


class GroupError(ValidationError):
    code = "group"


class InvarianceError(ValidationError):
    code = "not-invariant"


class DegenerateMuError(ValidationError):
    code = "degenerate-mu"

"""Exception hierarchy.

Validation problems (bad input polytopes) and solver problems are kept in
separate branches so the CLI can map them to different exit codes.
"""


class EHZError(Exception):
    pass


class ValidationError(EHZError):
    pass


class DimensionMismatch(ValidationError):
    pass


class Unbounded(ValidationError):
    pass


class EmptyInterior(ValidationError):
    pass


class RedundantFacet(ValidationError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"facet {index} is redundant")


class DuplicateNormal(ValidationError):
    def __init__(self, i, j):
        self.pair = (i, j)
        super().__init__(f"facets {i} and {j} share the same outer normal")


class TooFewFacets(Unbounded):
    """Fewer than 2n + 1 facets can never bound a body in R^2n."""


class DegenerateCut(ValidationError):
    pass


class NotCentrallySymmetric(ValidationError):
    pass


class SingularMatrix(ValidationError):
    pass


class GenerationFailure(EHZError):
    pass


class SolverError(EHZError):
    pass


class InfeasiblePolytope(SolverError):
    pass


class ExactLimitExceeded(SolverError):
    pass


class NonpositiveMaximum(SolverError):
    pass


class NonpositiveObjective(SolverError):
    pass


class EmptyM(SolverError):
    pass


class NegativeSpeedScale(SolverError):
    pass


class ResidualTooLarge(SolverError):
    pass

"""EHZ capacity of convex polytopes in R^2n from their facet normals and heights."""

from .core import (
    CandidateSolution,
    CapacityResult,
    Mode,
    build_M,
    build_transition_graph,
    capacity,
    capacity_pruned,
    capacity_symmetric,
    objective,
)
from .errors import EHZError, SolverError, ValidationError
from .geometry import (
    HPolytope,
    Hyperplane,
    SymplecticContext,
    apply_J,
    apply_linear,
    cut,
    make_box,
    make_cross_polytope,
    make_cube,
    make_random_polytope,
    make_simplex,
    omega,
    scale,
    translate,
    validate_polytope,
)
from .orbit import OrbitCertificate, PiecewiseAffineLoop, action, reconstruct, verify

__all__ = [
    "CandidateSolution",
    "CapacityResult",
    "EHZError",
    "HPolytope",
    "Hyperplane",
    "Mode",
    "OrbitCertificate",
    "PiecewiseAffineLoop",
    "SolverError",
    "SymplecticContext",
    "ValidationError",
    "action",
    "apply_J",
    "apply_linear",
    "build_M",
    "build_transition_graph",
    "capacity",
    "capacity_pruned",
    "capacity_symmetric",
    "cut",
    "make_box",
    "make_cross_polytope",
    "make_cube",
    "make_random_polytope",
    "make_simplex",
    "objective",
    "omega",
    "reconstruct",
    "scale",
    "translate",
    "validate_polytope",
    "verify",
]

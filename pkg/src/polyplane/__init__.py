"""Polyharmonic Navier problems on x1-symmetric planar domains, with
moving-plane checks of symmetry and monotonicity of the discrete solutions."""

from .discretize import SparseOperator, apply, assemble
from .geometry import (
    DomainSpec,
    Grid,
    build_grid,
    cap_nodes,
    disc,
    ellipse,
    lens,
    reflect,
    shifted_disc,
    stadium,
    validate_domain,
)
from .solver import (
    ConvergenceError,
    FieldStack,
    NonlinearitySpec,
    SolveConfig,
    check_f1,
    solve_linear,
    solve_system,
)
from .symcoeffs import (
    AlphaVector,
    all_nonnegative_signs,
    expand_characteristic,
    symmetric_coefficient,
)
from .verify import (
    barrier_check,
    compute_c,
    cooperativity_matrix,
    green_ball,
    monotonicity_defect,
    reflection_diff,
    singular_profile_experiment,
    sweep_mu,
    symmetry_defect,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaVector",
    "ConvergenceError",
    "DomainSpec",
    "FieldStack",
    "Grid",
    "NonlinearitySpec",
    "SolveConfig",
    "SparseOperator",
    "all_nonnegative_signs",
    "apply",
    "assemble",
    "barrier_check",
    "build_grid",
    "cap_nodes",
    "check_f1",
    "compute_c",
    "cooperativity_matrix",
    "disc",
    "ellipse",
    "expand_characteristic",
    "green_ball",
    "lens",
    "monotonicity_defect",
    "reflect",
    "reflection_diff",
    "shifted_disc",
    "singular_profile_experiment",
    "solve_linear",
    "solve_system",
    "stadium",
    "sweep_mu",
    "symmetric_coefficient",
    "symmetry_defect",
    "validate_domain",
]

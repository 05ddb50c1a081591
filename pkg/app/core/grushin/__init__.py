from .domain import BoundaryFace, Domain
from .operator import GrushinOperator, assemble_grushin, dirichlet_energy, linear_solve
from .nonlinearity import (
    GrowthWitnesses,
    Nonlinearity,
    NonlinearityKind,
    custom_nonlinearity,
    power_nonlinearity,
    validate_growth_conditions,
    zero_nonlinearity,
)
from .solver import (
    directional_derivative,
    energy,
    energy_gradient,
    initial_guess,
    mountain_pass_level,
    nehari_residual,
    nehari_scale,
    solve_ground_state,
    weak_residual,
)
from .estimates import (
    embedding_check,
    embedding_constant,
    manufactured_convergence,
    poincare_constant,
    random_bumps,
    truncated_extremal,
)

__all__ = [
    "BoundaryFace",
    "Domain",
    "GrushinOperator",
    "assemble_grushin",
    "dirichlet_energy",
    "linear_solve",
    "GrowthWitnesses",
    "Nonlinearity",
    "NonlinearityKind",
    "custom_nonlinearity",
    "power_nonlinearity",
    "validate_growth_conditions",
    "zero_nonlinearity",
    "directional_derivative",
    "energy",
    "energy_gradient",
    "initial_guess",
    "mountain_pass_level",
    "nehari_residual",
    "nehari_scale",
    "solve_ground_state",
    "weak_residual",
    "embedding_check",
    "embedding_constant",
    "manufactured_convergence",
    "poincare_constant",
    "random_bumps",
    "truncated_extremal",
]

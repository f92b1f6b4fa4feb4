from .deturck import (
    deturck_expansion_check,
    deturck_field,
    deturck_sigma_check,
    deturck_system_matrix,
    field_decay_exponent,
    lie_derivative,
)
from .fitting import MassFit, decay_slope, mass_fit
from .kappa import (
    KappaState,
    curvature_system_matrix,
    kappa_evolve,
    kappa_rhs,
    sigma_eigen_check,
    sigma_of,
    system_matrix,
)
from .pde import FlowRun, flow_run, rdtf_step
from .residual import scalar_evolution_residual
from .scaling import ScalingTable, parabolic_scaling_run
from .state import FlowGrid, FlowState, geon_state, hyperbolic_state, perturbed_state

__all__ = [
    "FlowGrid",
    "FlowRun",
    "FlowState",
    "KappaState",
    "MassFit",
    "ScalingTable",
    "curvature_system_matrix",
    "decay_slope",
    "deturck_expansion_check",
    "deturck_field",
    "deturck_sigma_check",
    "deturck_system_matrix",
    "field_decay_exponent",
    "flow_run",
    "geon_state",
    "hyperbolic_state",
    "kappa_evolve",
    "kappa_rhs",
    "lie_derivative",
    "mass_fit",
    "parabolic_scaling_run",
    "perturbed_state",
    "rdtf_step",
    "scalar_evolution_residual",
    "sigma_eigen_check",
    "sigma_of",
    "system_matrix",
]

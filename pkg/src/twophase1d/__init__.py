"""1-D two-phase flow across a rock interface: exact interface Riemann
solutions, monotone finite-volume solvers under two interface couplings, and
a capillarity-regularized parabolic solver whose vanishing-capillarity limit
is checked against the sharp-interface solutions."""

from .errors import (CflError, ConfigError, DomainError, ModelAssumptionError,
                     NumericalError, RegimeError)
from .flux_model import (FluxModel, ParamFamily, eval_flux, eval_phi,
                         find_u_star, invert_phi, validate_H1, validate_H2)
from .grids import BoundaryCondition, CellField, Grid1D, Trajectory
from .hyperbolic import (entropy_residual_audit, run_hyperbolic,
                         step_hyperbolic)
from .parabolic import (EpsProblem, InterfaceState, energy_estimate,
                        interface_solve, run_parabolic, step_parabolic)
from .riemann import (NON_CLASSICAL, OPTIMAL_ENTROPY, CouplingMode,
                      RiemannTraces, entropy_interface_flux, godunov_flux,
                      nonclassical_interface_flux, oleinik_check,
                      solve_riemann)
from .steady import (SteadyProfile, build_kappa_lambda, build_sub_super,
                     build_y_eta, build_z_eta, prepare_initial_data)
from .diagnostics import (l1_contraction_test, mode_discrepancy_report,
                          trapped_mass_series, vanishing_viscosity_study)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FluxModel", "ParamFamily",
    "eval_flux", "eval_phi", "invert_phi", "find_u_star",
    "validate_H1", "validate_H2",
    "CouplingMode", "NON_CLASSICAL", "OPTIMAL_ENTROPY", "RiemannTraces",
    "godunov_flux", "nonclassical_interface_flux", "entropy_interface_flux",
    "solve_riemann", "oleinik_check",
    "Grid1D", "CellField", "BoundaryCondition", "Trajectory",
    "step_hyperbolic", "run_hyperbolic", "entropy_residual_audit",
    "EpsProblem", "InterfaceState", "interface_solve", "step_parabolic",
    "run_parabolic", "energy_estimate",
    "SteadyProfile", "build_y_eta", "build_z_eta", "build_sub_super",
    "build_kappa_lambda", "prepare_initial_data",
    "trapped_mass_series", "l1_contraction_test",
    "vanishing_viscosity_study", "mode_discrepancy_report",
    "DomainError", "ModelAssumptionError", "CflError", "NumericalError",
    "RegimeError", "ConfigError",
]

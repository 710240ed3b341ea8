"""Thin-film flow of a phase-separating binary liquid.

Spectral solvers, a Galerkin oracle, equilibrium profiles and a-priori
height bounds for the coupled lubrication / Cahn-Hilliard system.
"""
__version__ = "0.1.0"

from .bounds import (BoundInputs, bound_vs_simulation, constants_from_initial_data, m_curve,
                     min_height_bound_analysis, min_height_bound_physical)
from .equilibrium import BvpConfig, EquilibriumProfile, forces, solve_bvp, sweep_dip
from .galerkin import GalerkinBasis, GalerkinSystem, evolve_galerkin, galerkin_rhs, mass_matrix, project
from .grid import Grid, check_sobolev_inequalities, deriv, integrate, norm
from .model import (NonPositiveHeightError, Params, State, chemical_potential, energy, flux,
                    linear_growth_rates, reconstruct_velocity, rhs)
from .regularization import RegularizedFamily
from .timestepper import (SolverConfig, TrajectoryRecord, certify_energy_decay, evolve, measure_growth_rate,
                          perturbed_uniform_state, step)

__all__ = [
    "BoundInputs", "BvpConfig", "EquilibriumProfile", "GalerkinBasis", "GalerkinSystem", "Grid",
    "NonPositiveHeightError", "Params", "RegularizedFamily", "SolverConfig", "State", "TrajectoryRecord",
    "bound_vs_simulation", "certify_energy_decay", "check_sobolev_inequalities", "chemical_potential",
    "constants_from_initial_data", "deriv", "energy", "evolve", "evolve_galerkin", "flux", "forces",
    "galerkin_rhs", "integrate", "linear_growth_rates", "m_curve", "mass_matrix", "measure_growth_rate",
    "min_height_bound_analysis", "min_height_bound_physical", "norm", "perturbed_uniform_state", "project",
    "reconstruct_velocity", "rhs", "solve_bvp", "step", "sweep_dip",
]

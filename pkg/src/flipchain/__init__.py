"""Velocity-flip harmonic chain: covariance dynamics, Monte Carlo, Wigner analysis
and phonon kinetics."""

__version__ = "0.1.0"

from .chain import ChainModel, Potential, build_phi_matrix, validate_assumptions
from .covariance import (
    CovarianceState,
    cosine_profile,
    evolve_duhamel,
    evolve_means,
    evolve_rk4,
    gibbs_state,
    modulated_state,
    temperature,
    total_energy,
)
from .lattice import PeriodicLattice, build_kernel, wrap

__all__ = [
    "ChainModel",
    "CovarianceState",
    "PeriodicLattice",
    "Potential",
    "build_kernel",
    "build_phi_matrix",
    "cosine_profile",
    "evolve_duhamel",
    "evolve_means",
    "evolve_rk4",
    "gibbs_state",
    "modulated_state",
    "temperature",
    "total_energy",
    "validate_assumptions",
    "wrap",
]

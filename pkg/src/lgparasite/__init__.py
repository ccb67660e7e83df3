"""Discrete competition of two species sharing a fast SIS parasite."""

from .analysis import (CaseLabel, Equilibrium, ReducedState, classify, classify_case,
                       find_equilibria, isocline, isocline_height, jacobian,
                       outcome_coefficients, phi, reduced_step)
from .errors import ConfigError, DomainError, HypothesisError, PositivityWarning
from .model import (DemographyParams, DiseaseParams, FullState, demographic_step,
                    disease_step, full_step)
from .reduction import (ReducedParams, certify_convergence, compute_nu,
                        endemic_equilibrium, fast_limit_map, reduce_params,
                        reduce_params_at_nu)

__all__ = [
    "CaseLabel", "ConfigError", "DemographyParams", "DiseaseParams", "DomainError",
    "Equilibrium", "FullState", "HypothesisError", "PositivityWarning", "ReducedParams",
    "ReducedState", "certify_convergence", "classify", "classify_case", "compute_nu",
    "demographic_step", "disease_step", "endemic_equilibrium", "fast_limit_map",
    "find_equilibria", "full_step", "isocline", "isocline_height", "jacobian",
    "outcome_coefficients", "phi", "reduce_params", "reduce_params_at_nu",
    "reduced_step",
]

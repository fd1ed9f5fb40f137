"""Weighted elastic-net regression by a contractive fixed-point iteration."""

__version__ = "0.1.0"

from .dictionary import (ExplicitDictionary, HaarDictionary, TabulatedDictionary, WaveletSpec,
                         haar_dictionary, kappa_bound)
from .errors import (ConfigError, DataError, DomainError, EnetError, MissingConstantError,
                     OracleError, SelectionError, UnboundedActiveSetError)
from .operators import Dataset, EmpiricalOperators, assemble_empirical, kernel_eval, predict
from .prox import (Coefficients, PenaltyConfig, penalty_value, soft_threshold_scalar,
                   soft_threshold_vector)
from .selection import (BoundInputs, LambdaGrid, PathConfig, SelectionReport, balancing_select,
                        finite_dim_rate_bound, noise_and_gram_bounds, regularization_path,
                        sample_error_bound)
from .solver import (SolverConfig, SolverResult, compute_active_set, fixed_point_step,
                     kkt_residual, lipschitz_constant, solve)

__all__ = [
    "BoundInputs", "Coefficients", "ConfigError", "DataError", "Dataset", "DomainError",
    "EmpiricalOperators", "EnetError", "ExplicitDictionary", "HaarDictionary", "LambdaGrid",
    "MissingConstantError", "OracleError", "PathConfig", "PenaltyConfig", "SelectionError",
    "SelectionReport", "SolverConfig", "SolverResult", "TabulatedDictionary",
    "UnboundedActiveSetError", "WaveletSpec", "assemble_empirical", "balancing_select",
    "compute_active_set", "finite_dim_rate_bound", "fixed_point_step", "haar_dictionary",
    "kappa_bound", "kernel_eval", "kkt_residual", "lipschitz_constant", "noise_and_gram_bounds",
    "penalty_value", "predict", "regularization_path", "sample_error_bound", "solve",
    "soft_threshold_scalar", "soft_threshold_vector",
]

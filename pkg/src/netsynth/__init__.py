"""Constructive single-hidden-layer networks with certified uniform error."""

__version__ = "0.1.0"

from .activations import ActivationSpec
from .algebra import build_vandermonde, is_nonsingular, solve_coefficients, wronskian_factor_check
from .constructor import (ActivationError, ConstructionReport, ConstructionRequest, SingularDirectionsError,
                          barycentric_diagnostic, construct, construct_continuous, construct_polynomial,
                          construct_random_features)
from .estimator import ConstructiveNetworkRegressor, RandomFeatureTransformer
from .grids import Box, GridSpec
from .intervals import Interval, ScaleSchedule
from .minimax import best_approximant, d_epsilon, estimate_modulus
from .monomials import MultiPoly, enumerate_basis
from .network import NetworkWeights, eliminate_output_bias, forward, from_json, to_json
from .verify import certify, density_trial, random_feature_study, sup_error

__all__ = [
    "ActivationError", "ActivationSpec", "Box", "ConstructionReport", "ConstructionRequest",
    "ConstructiveNetworkRegressor", "GridSpec", "Interval", "MultiPoly", "NetworkWeights",
    "RandomFeatureTransformer", "ScaleSchedule", "SingularDirectionsError", "barycentric_diagnostic",
    "best_approximant", "build_vandermonde", "certify", "construct", "construct_continuous",
    "construct_polynomial", "construct_random_features", "d_epsilon", "density_trial", "eliminate_output_bias",
    "enumerate_basis", "estimate_modulus", "forward", "from_json", "is_nonsingular", "random_feature_study",
    "solve_coefficients", "sup_error", "to_json", "wronskian_factor_check",
]

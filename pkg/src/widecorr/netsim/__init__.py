"""Finite-width networks, exact derivatives and Monte Carlo estimates."""

from .activations import Activation, get_activation
from .contract import ContractionPlan, UnsupportedTopology, contract_spec, plan_contraction
from .estimate import (
    DESK_WIDTHS,
    INPUT_SPREAD,
    PAPER_WIDTHS,
    EstimateRow,
    EstimateTable,
    default_inputs,
    estimate,
    estimate_many,
    summarize,
)
from .network import (
    directional_derivative,
    forward,
    gradient,
    gradient_of_directional,
    hessian_vector_product,
)
from .params import NetworkConfig, ParameterSet, ParamVector, init_params

__all__ = [
    "DESK_WIDTHS",
    "INPUT_SPREAD",
    "PAPER_WIDTHS",
    "Activation",
    "ContractionPlan",
    "EstimateRow",
    "EstimateTable",
    "NetworkConfig",
    "ParamVector",
    "ParameterSet",
    "UnsupportedTopology",
    "contract_spec",
    "default_inputs",
    "directional_derivative",
    "estimate",
    "estimate_many",
    "forward",
    "get_activation",
    "gradient",
    "gradient_of_directional",
    "hessian_vector_product",
    "init_params",
    "plan_contraction",
    "summarize",
]

"""Exact symbolic correlation functions of polynomial-activation networks."""

from .contractions import (
    DEFAULT_BUDGET,
    Contraction,
    DerivedTerm,
    correlate_explicit,
    derived_terms,
    differentiate,
    enumerate_contractions,
    evaluate_expectation,
    perfect_matchings,
    single_contraction,
)
from .engine import correlate
from .expansion import (
    BudgetExceeded,
    MonomialNetworkConfig,
    WeightMonomial,
    expand_network,
    expand_shapes,
)
from .laurent import CorrelationValue, LaurentPolynomial, leading_exponent
from .oracle import exact_oracle, gaussian_moment

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceeded",
    "Contraction",
    "CorrelationValue",
    "DerivedTerm",
    "LaurentPolynomial",
    "MonomialNetworkConfig",
    "WeightMonomial",
    "correlate",
    "correlate_explicit",
    "derived_terms",
    "differentiate",
    "enumerate_contractions",
    "evaluate_expectation",
    "exact_oracle",
    "expand_network",
    "expand_shapes",
    "gaussian_moment",
    "leading_exponent",
    "perfect_matchings",
    "single_contraction",
]

"""Balanced-growth steady states for a two-sector economy with a gig sector."""

from .params import EconomyParams, ParameterError, validate
from .steady_state import (
    DEFAULT_POLICY,
    CapitalWeight,
    ConsumptionFormula,
    InfeasibleParameters,
    SteadyState,
    VariantPolicy,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "EconomyParams", "ParameterError", "validate", "DEFAULT_POLICY", "CapitalWeight",
    "ConsumptionFormula", "InfeasibleParameters", "SteadyState", "VariantPolicy", "solve",
]

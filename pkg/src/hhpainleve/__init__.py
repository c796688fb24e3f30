"""Exact Painleve analysis and series solutions for the generalized Henon-Heiles system."""
from .painleve import SystemParams, classify, dominant_balances, resonances
from .recursion import (SeriesSolution, generate_case2_series, generate_generic,
                        generate_puiseux_series, resonance_solve)
from .scalar import AlgScalar, NumberField, ParamPoly, alg_root
from .series import PSeries

__all__ = [
    "AlgScalar", "NumberField", "ParamPoly", "PSeries", "SeriesSolution", "SystemParams",
    "alg_root", "classify", "dominant_balances", "generate_case2_series", "generate_generic",
    "generate_puiseux_series", "resonance_solve", "resonances",
]
__version__ = "0.1.0"

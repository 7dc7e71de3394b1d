"""Symbolic FRW cosmology with a minimally coupled scalar field.

Submodules
----------
expr      expression layer: parsing, printing, canonical simplification
tensor    metrics, curvature tensors and covariant operations
cosmo     the scalar-field + perfect-fluid model and its Friedmann reduction
reverse   potential reconstruction from a prescribed expansion history
numeric   RK4 forward evolution and finite-difference oracles
session   JSON session archives
cli       command-line front end
"""

from .cosmo import CosmoModel, FriedmannSystem, reduce_to_friedmann
from .expr import equal, evaluate, is_zero, parse, simplify, to_text
from .numeric import EvolutionState, IntegrationConfig, evolve
from .reverse import ExpansionHistory, reconstruct, verify_consistency
from .session import load_session, save_session
from .tensor import Metric, Tensor, einstein_tensor, frw_metric, minkowski_metric

__all__ = [
    "CosmoModel", "FriedmannSystem", "reduce_to_friedmann",
    "equal", "evaluate", "is_zero", "parse", "simplify", "to_text",
    "EvolutionState", "IntegrationConfig", "evolve",
    "ExpansionHistory", "reconstruct", "verify_consistency",
    "load_session", "save_session",
    "Metric", "Tensor", "einstein_tensor", "frw_metric", "minkowski_metric",
]

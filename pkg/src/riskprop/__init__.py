"""Accident-risk estimation for indoor scenes.

Object priors come from smoothed accident-report statistics; risk then
flows from high- to low-risk objects along a proximity graph and is
rendered as per-type heatmaps.
"""

from riskprop.accident_db import (
    DEFAULT_TYPES,
    AccidentRecord,
    RiskTable,
    accrel,
    build_table,
    load_records,
    passes_share_filter,
    risk_score,
)
from riskprop.errors import InputError, RiskpropError, UndefinedCentroidError, UndefinedScoreError
from riskprop.propagation import PropagationConfig, PropagationResult, propagate, propagate_all_types
from riskprop.scene import Scene, SceneGraph, SceneObject, assign_initial_risk, build_graph, load_scene

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TYPES",
    "AccidentRecord",
    "InputError",
    "PropagationConfig",
    "PropagationResult",
    "RiskTable",
    "RiskpropError",
    "Scene",
    "SceneGraph",
    "SceneObject",
    "UndefinedCentroidError",
    "UndefinedScoreError",
    "accrel",
    "assign_initial_risk",
    "build_graph",
    "build_table",
    "load_records",
    "load_scene",
    "passes_share_filter",
    "propagate",
    "propagate_all_types",
    "risk_score",
]

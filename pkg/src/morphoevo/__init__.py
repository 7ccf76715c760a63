"""Evolving gene-regulatory-network controllers for swarm pattern formation."""

from .fitness import FitnessConfig, Objectives, evaluate_objectives
from .field import FieldConfig, GridSpec
from .genome import parse, serialize, node_count
from .scenarios import Scenario, builtin, load_scenario, run_model

__version__ = "0.1.0"

__all__ = [
    "FieldConfig", "FitnessConfig", "GridSpec", "Objectives", "Scenario",
    "builtin", "evaluate_objectives", "load_scenario", "node_count", "parse",
    "run_model", "serialize",
]

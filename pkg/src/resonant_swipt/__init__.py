"""Simulator for FDMA multi-user resonant-beam SWIPT with retro-directive arrays."""

__version__ = "0.1.0"

from .scenario import (
    ControlParams,
    FrequencyPlan,
    LatticeSpec,
    NodeSpec,
    PhysicalConstants,
    PlanEntry,
    Scenario,
    ScenarioError,
    default_two_ue_scenario,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)
from .resonance import ResonanceEngine, run

__all__ = [
    "ControlParams",
    "FrequencyPlan",
    "LatticeSpec",
    "NodeSpec",
    "PhysicalConstants",
    "PlanEntry",
    "ResonanceEngine",
    "Scenario",
    "ScenarioError",
    "default_two_ue_scenario",
    "load_scenario",
    "parse_scenario",
    "run",
    "serialize_scenario",
]

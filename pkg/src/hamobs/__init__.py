"""Observer-based identification of dipole couplings in N-level quantum systems."""

from .errors import BlowupError, DimensionError, InsufficientHistoryError, ScenarioError
from .integrate import IntegrationConfig, Trajectory, integrate
from .scenario import Scenario, builtin, list_scenarios, load_scenario, write_scenario
from .system import ControlField, MeasurementModel, QuantumSystem, Tone

__all__ = [
    "BlowupError",
    "ControlField",
    "DimensionError",
    "InsufficientHistoryError",
    "IntegrationConfig",
    "MeasurementModel",
    "QuantumSystem",
    "Scenario",
    "ScenarioError",
    "Tone",
    "Trajectory",
    "builtin",
    "integrate",
    "list_scenarios",
    "load_scenario",
    "write_scenario",
]

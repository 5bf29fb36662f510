"""Closed-loop simulation, scenario documents and trace metrics."""
from .engine import BACKEND, SimTrace, SimulationDiverged, compile_program, run_simulation
from .metrics import Metrics, compute_metrics
from .scenario import Scenario, ScenarioError, dump_scenario, parse_scenario

__all__ = ["BACKEND", "Metrics", "Scenario", "ScenarioError", "SimTrace", "SimulationDiverged",
           "compile_program", "compute_metrics", "dump_scenario", "parse_scenario", "run_simulation"]

"""Flocking certificates for second-order agents with m-nearest-neighbor interactions."""

from .certificate import Certificate, certify
from .contraction import ContractionSchedule, layer_gain, optimize_bound, solve_schedule
from .errors import DomainError, SolverError
from .hierarchy import Hierarchy, build_hierarchy, check_hypothesis1
from .model import Configuration, State, dynamics_rhs, reference_configuration, velocity_diameter
from .robustness import RobustnessReport, edge_robustness, graph_robustness, root_robustness
from .simulator import MonitorReport, Trajectory, monitor_report, simulate
from .topology import InteractionGraph, is_subgraph, knn_graph, perturbed_core_graph

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "Configuration",
    "ContractionSchedule",
    "DomainError",
    "Hierarchy",
    "InteractionGraph",
    "MonitorReport",
    "RobustnessReport",
    "SolverError",
    "State",
    "Trajectory",
    "build_hierarchy",
    "certify",
    "check_hypothesis1",
    "dynamics_rhs",
    "edge_robustness",
    "graph_robustness",
    "is_subgraph",
    "knn_graph",
    "layer_gain",
    "monitor_report",
    "optimize_bound",
    "perturbed_core_graph",
    "reference_configuration",
    "root_robustness",
    "simulate",
    "solve_schedule",
    "velocity_diameter",
]

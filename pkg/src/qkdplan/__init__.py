"""Planning of QKD key-exchange networks with QUBO and annealing methods."""

from .baseline import SaConfig, run_sa
from .evaluation import EvaluationReport, circle_heuristic, edge_improvement, evaluate_solution, min_key_rate
from .graphs import find_bridges, is_two_edge_connected, minimum_spanning_tree, path_table
from .hqa import build_nn_qubo, decode_nn, run_hqa
from .network import Network, load_network, reference_network
from .qubo import QuboProblem, SolveResult, evaluate, make_solver, solve_exhaustive, solve_sa
from .redundancy import build_redundancy_qubo, decode_redundancy, run_redundancy
from .solution import PlanSolution, load_solution

__version__ = "0.1.0"

__all__ = [
    "EvaluationReport",
    "Network",
    "PlanSolution",
    "QuboProblem",
    "SaConfig",
    "SolveResult",
    "build_nn_qubo",
    "build_redundancy_qubo",
    "circle_heuristic",
    "decode_nn",
    "decode_redundancy",
    "edge_improvement",
    "evaluate",
    "evaluate_solution",
    "find_bridges",
    "is_two_edge_connected",
    "load_network",
    "load_solution",
    "make_solver",
    "min_key_rate",
    "minimum_spanning_tree",
    "path_table",
    "reference_network",
    "run_hqa",
    "run_redundancy",
    "run_sa",
    "solve_exhaustive",
    "solve_sa",
]

"""Clique-projected gradient descent for convex problems whose constraints
couple variables clique by clique over a communication graph."""

from .constraints import (AffineEquality, Ball, Box, Consensus, ConstraintBlock,
                          FullSpace, Halfspace, SumEquality,
                          numeric_projection_oracle, project_weighted,
                          weighted_norm)
from .errors import (InfeasibleSetError, InputError, NumericError, OracleError,
                     ResourceLimitError, UnsupportedError)
from .graph import (CliqueCover, Graph, build_graph, graph_from_cliques,
                    maximal_cliques, neighbors, verify_neighbor_clique_identity)
from .oracle import (KktSolution, project_D_dykstra, project_stacked_equality,
                     solve_equality_qp, stacked_equality_system)
from .problem import (CallableObjective, Problem, QuadraticObjective,
                      SeparableObjective, quadratic_L)
from .projection import CliqueOperator, apply_T, apply_T_power, eval_J, eval_V, grad_V
from .simnet import DistributedRun, locality_audit, run_distributed
from .solver import (AccelState, FixedStep, InvKStep, InvSqrtKStep,
                     IterationRecord, SolverConfig, Trace, check_rate_bound,
                     compute_hk_diagnostic, parse_schedule, run_acpgd,
                     run_cpgd, run_pgd, sigma_next, sigma_sequence)

__version__ = "0.1.0"

__all__ = [
    "AffineEquality", "Ball", "Box", "Consensus", "ConstraintBlock",
    "FullSpace", "Halfspace", "SumEquality", "numeric_projection_oracle",
    "project_weighted", "weighted_norm",
    "InfeasibleSetError", "InputError", "NumericError", "OracleError",
    "ResourceLimitError", "UnsupportedError",
    "CliqueCover", "Graph", "build_graph", "graph_from_cliques",
    "maximal_cliques", "neighbors", "verify_neighbor_clique_identity",
    "KktSolution", "project_D_dykstra", "project_stacked_equality",
    "solve_equality_qp", "stacked_equality_system",
    "CallableObjective", "Problem", "QuadraticObjective", "SeparableObjective",
    "quadratic_L",
    "CliqueOperator", "apply_T", "apply_T_power", "eval_J", "eval_V", "grad_V",
    "DistributedRun", "locality_audit", "run_distributed",
    "AccelState", "FixedStep", "InvKStep", "InvSqrtKStep", "IterationRecord",
    "SolverConfig", "Trace", "check_rate_bound", "compute_hk_diagnostic",
    "parse_schedule", "run_acpgd", "run_cpgd", "run_pgd", "sigma_next",
    "sigma_sequence",
]

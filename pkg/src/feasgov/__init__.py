"""Feasibility governor for linear MPC: offline set synthesis and an online
reference governor that keeps the MPC problem feasible."""
from .errors import AssumptionError, FeasGovError, InfeasibleError, InvariantViolation, NumericalError
from .governor import GovernorState, cg_step, fg_step, fg_step_underapprox
from .mpc import condense, feasible_set_block, feasible_set_recursive, find_N_star, mpc_feedback
from .plant import ConstraintSet, LtiModel, equilibrium_basis
from .polyhedra import Polyhedron
from .scenario import feasible_set, feasible_sets, load_scenario, synthesize
from .sim import compute_metrics, simulate

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "ConstraintSet",
    "FeasGovError",
    "GovernorState",
    "InfeasibleError",
    "InvariantViolation",
    "LtiModel",
    "NumericalError",
    "Polyhedron",
    "cg_step",
    "compute_metrics",
    "condense",
    "equilibrium_basis",
    "feasible_set",
    "feasible_set_block",
    "feasible_set_recursive",
    "feasible_sets",
    "fg_step",
    "fg_step_underapprox",
    "find_N_star",
    "load_scenario",
    "mpc_feedback",
    "simulate",
    "synthesize",
]

"""Layout repair: minimal storage-area edits to reach a usable layout."""

from .lp_format import export_lp
from .model import Constraint, RepairModel, blocking_types, build_model, pick_source
from .repair import (
    DEFAULT_TIME_LIMIT,
    INTEGRALITY_TOL,
    RepairError,
    RepairOutcome,
    decode_solution,
    flow_feasible,
    repair,
)
from .solvers import (
    SOLVER_ENV_VAR,
    CommandLineAdapter,
    RepairStatus,
    ScipyMilpAdapter,
    SolverAdapterError,
    SolverResult,
    solver_from_env,
)

__all__ = [
    "Constraint",
    "RepairModel",
    "build_model",
    "blocking_types",
    "pick_source",
    "export_lp",
    "repair",
    "RepairOutcome",
    "RepairError",
    "RepairStatus",
    "decode_solution",
    "flow_feasible",
    "INTEGRALITY_TOL",
    "DEFAULT_TIME_LIMIT",
    "ScipyMilpAdapter",
    "CommandLineAdapter",
    "SolverResult",
    "SolverAdapterError",
    "solver_from_env",
    "SOLVER_ENV_VAR",
]

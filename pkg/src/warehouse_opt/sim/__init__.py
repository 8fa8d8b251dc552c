from warehouse_opt.sim.engine import (
    Simulation,
    derive_run_seed,
    evaluate,
    run_simulation,
)
from warehouse_opt.sim.grid import GridIndex
from warehouse_opt.sim.reservations import ReservationTable
from warehouse_opt.sim.sipp import sipp_plan, sipp_search
from warehouse_opt.sim.types import (
    AgentState,
    EvalResult,
    MapfSolver,
    Planner,
    SimConfig,
    SimPreconditionError,
    SimResult,
    SolverFailure,
    detect_congestion,
)
from warehouse_opt.sim.windowed import plan_window

__all__ = [
    "AgentState",
    "EvalResult",
    "GridIndex",
    "MapfSolver",
    "Planner",
    "ReservationTable",
    "SimConfig",
    "SimPreconditionError",
    "SimResult",
    "Simulation",
    "SolverFailure",
    "derive_run_seed",
    "detect_congestion",
    "evaluate",
    "plan_window",
    "run_simulation",
    "sipp_plan",
    "sipp_search",
]

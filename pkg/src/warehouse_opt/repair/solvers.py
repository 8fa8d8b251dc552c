"""Solver adapters for repair models.

An adapter is a single-method object: ``solve(model, time_limit)`` returns a
:class:`SolverResult` with a status and a variable assignment by name.  Two
implementations ship here:

* :class:`ScipyMilpAdapter` -- in-process branch-and-cut via
  ``scipy.optimize.milp`` (HiGHS).  The default.
* :class:`CommandLineAdapter` -- hands the LP text to an external command.

Command-line contract: the command is invoked with the path of an LP file as
its final argument (or the LP streamed to stdin with ``use_stdin=True``).
It must print one ``<variable-name> <value>`` pair per line on stdout (lines
starting with ``#`` and an optional ``objective <value>`` line are ignored)
and exit with 0 = optimal, 2 = feasible but not proven optimal,
3 = infeasible, 4 = time limit without a solution.  Any other exit code is
an adapter error.  Select an external command for the CLI and service via
the ``WAREHOUSE_OPT_SOLVER`` environment variable.

Adapters hold no shared mutable state, so one instance per worker is safe.
"""

from __future__ import annotations

import enum
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.sparse

from .lp_format import export_lp
from .model import RepairModel

SOLVER_ENV_VAR = "WAREHOUSE_OPT_SOLVER"


class RepairStatus(enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"

    @classmethod
    def parse(cls, text: str) -> "RepairStatus":
        return cls(text.strip().lower())


class SolverAdapterError(RuntimeError):
    """The solver backend misbehaved (bad exit code, unparseable output)."""


@dataclass(frozen=True)
class SolverResult:
    status: RepairStatus
    assignment: dict | None       # variable name -> value
    objective: float | None


def _constraint_matrix(model: RepairModel):
    data, rows, cols, lo, hi = [], [], [], [], []
    for i, row in enumerate(model.constraints):
        for idx, coef in row.terms:
            rows.append(i)
            cols.append(idx)
            data.append(coef)
        if row.sense == "=":
            lo.append(row.rhs)
            hi.append(row.rhs)
        elif row.sense == "<=":
            lo.append(-np.inf)
            hi.append(row.rhs)
        else:
            lo.append(row.rhs)
            hi.append(np.inf)
    a = scipy.sparse.csc_array(
        (data, (rows, cols)),
        shape=(len(model.constraints), model.n_variables))
    return a, np.array(lo), np.array(hi)


class ScipyMilpAdapter:
    """Solve in-process with HiGHS through scipy."""

    def __init__(self, mip_rel_gap: float = 0.0):
        self.mip_rel_gap = mip_rel_gap

    def solve(self, model: RepairModel, time_limit: float) -> SolverResult:
        a, lo, hi = _constraint_matrix(model)
        options = {"time_limit": float(time_limit)}
        if self.mip_rel_gap:
            options["mip_rel_gap"] = self.mip_rel_gap
        res = scipy.optimize.milp(
            c=np.array(model.objective),
            constraints=scipy.optimize.LinearConstraint(a, lo, hi),
            integrality=np.array(model.integrality),
            bounds=scipy.optimize.Bounds(np.array(model.lower),
                                         np.array(model.upper)),
            options=options,
        )
        if res.status == 0:
            status = RepairStatus.OPTIMAL
        elif res.status == 1:
            status = (RepairStatus.FEASIBLE if res.x is not None
                      else RepairStatus.TIMEOUT)
        elif res.status == 2:
            status = RepairStatus.INFEASIBLE
        else:
            raise SolverAdapterError(f"milp backend failed: {res.message}")
        if res.x is None:
            return SolverResult(status, None, None)
        assignment = dict(zip(model.var_names, res.x.tolist()))
        return SolverResult(status, assignment,
                            float(res.fun) + model.objective_const)


_EXIT_STATUS = {
    0: RepairStatus.OPTIMAL,
    2: RepairStatus.FEASIBLE,
    3: RepairStatus.INFEASIBLE,
    4: RepairStatus.TIMEOUT,
}


class CommandLineAdapter:
    """Run an external solver command on the exported LP text."""

    def __init__(self, command, use_stdin: bool = False):
        self.command = (shlex.split(command) if isinstance(command, str)
                        else list(command))
        self.use_stdin = use_stdin

    def solve(self, model: RepairModel, time_limit: float) -> SolverResult:
        lp = export_lp(model)
        try:
            if self.use_stdin:
                proc = subprocess.run(
                    self.command, input=lp, capture_output=True, text=True,
                    timeout=time_limit + 30.0)
            else:
                with tempfile.NamedTemporaryFile(
                        "w", suffix=".lp", delete=False) as fh:
                    fh.write(lp)
                    path = fh.name
                try:
                    proc = subprocess.run(
                        self.command + [path], capture_output=True, text=True,
                        timeout=time_limit + 30.0)
                finally:
                    os.unlink(path)
        except OSError as exc:
            raise SolverAdapterError(
                f"cannot run solver command {self.command[0]!r}: {exc}"
            ) from exc
        except subprocess.TimeoutExpired as exc:
            raise SolverAdapterError(
                f"solver ignored its time limit ({time_limit}s)") from exc
        status = _EXIT_STATUS.get(proc.returncode)
        if status is None:
            raise SolverAdapterError(
                f"solver exited with {proc.returncode}: {proc.stderr.strip()}")
        if status in (RepairStatus.INFEASIBLE, RepairStatus.TIMEOUT):
            return SolverResult(status, None, None)
        assignment, objective = {}, None
        for line in proc.stdout.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, _, value = line.partition(" ")
            if name == "objective":
                objective = float(value)
                continue
            try:
                assignment[name] = float(value)
            except ValueError as exc:
                raise SolverAdapterError(f"bad assignment line: {line!r}") from exc
        if not assignment:
            raise SolverAdapterError("solver reported success but no assignment")
        return SolverResult(status, assignment, objective)


def solver_from_env(env: dict | None = None):
    """Adapter selected by ``WAREHOUSE_OPT_SOLVER``: empty or unset picks
    the in-process backend, anything else is an external command line."""
    value = (env if env is not None else os.environ).get(SOLVER_ENV_VAR, "")
    if value.strip():
        return CommandLineAdapter(value)
    return ScipyMilpAdapter()

"""HTTP service exposing the layout, repair, simulation, and optimization
operations.

Error bodies carry a ``category`` the command-line client maps to exit
codes: ``config`` (bad inputs, 422), ``solver`` (external solver adapter
failure, 502), ``precondition`` (layout rejected before simulation, 409).
Optimization runs as a background job; poll GET /jobs/{id}.
"""

from __future__ import annotations

import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..experiments import (
    ConfigError,
    EvaluationPreconditionError,
    cmd_evaluate,
    cmd_optimize,
    config_from_dict,
)
from ..layouts import (
    Layout,
    LayoutError,
    Scenario,
    layout_from_json,
    layout_to_json,
    parse_layout,
    serialize_layout,
    validate,
)
from ..measures import UnreachablePairError, measure_vector
from ..repair import DEFAULT_TIME_LIMIT, SolverAdapterError, repair
from ..repair.solvers import solver_from_env
from ..sim.engine import (
    MapfSolver,
    Planner,
    SimConfig,
    SimPreconditionError,
    evaluate,
    run_simulation,
)
from . import schemas

logger = logging.getLogger(__name__)

app = FastAPI(title="warehouse-opt", version=__version__)


def _error(status: int, category: str, message: str, **extra):
    return HTTPException(status, detail={"category": category,
                                         "message": message, **extra})


def _layout(body: schemas.LayoutBody) -> Layout:
    try:
        return layout_from_json(body.model_dump())
    except LayoutError as exc:
        raise _error(422, "config", str(exc)) from exc


def _scenario(name: str) -> Scenario:
    try:
        return Scenario.parse(name)
    except ValueError as exc:
        raise _error(422, "config", str(exc)) from exc


def _layout_body(layout: Layout) -> dict:
    return layout_to_json(layout)


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return {"status": "ok", "version": __version__}


@app.post("/layouts/parse", response_model=schemas.ParseResponse)
def layouts_parse(req: schemas.ParseRequest):
    try:
        layout = parse_layout(req.text)
    except LayoutError as exc:
        raise _error(422, "config", str(exc)) from exc
    return {"layout": _layout_body(layout)}


@app.post("/layouts/render", response_model=schemas.RenderResponse)
def layouts_render(req: schemas.RenderRequest):
    return {"text": serialize_layout(_layout(req.layout))}


@app.post("/layouts/validate", response_model=schemas.ValidateResponse)
def layouts_validate(req: schemas.ValidateRequest):
    scenario = _scenario(req.scenario)
    report = validate(_layout(req.layout), scenario, n_agents=req.n_agents)
    return {
        "is_valid": report.is_valid,
        "is_well_formed": report.is_well_formed,
        "is_reachable": report.is_reachable,
        "ok_for_scenario": report.ok_for(scenario),
        "violations": [{"rule": rule, "row": r, "col": c}
                       for rule, (r, c) in report.violations],
    }


@app.post("/layouts/measure", response_model=schemas.MeasureResponse)
def layouts_measure(req: schemas.MeasureRequest):
    try:
        components, task_length = measure_vector(_layout(req.layout),
                                                 _scenario(req.scenario))
    except UnreachablePairError as exc:
        raise _error(409, "precondition", str(exc)) from exc
    return {"n_shelf_components": components,
            "mean_task_length": task_length}


@app.post("/repair", response_model=schemas.RepairResponse)
def repair_endpoint(req: schemas.RepairRequest):
    try:
        outcome = repair(_layout(req.layout), _scenario(req.scenario),
                         req.n_s, solver=solver_from_env(),
                         time_limit=req.time_limit)
    except SolverAdapterError as exc:
        raise _error(502, "solver", str(exc)) from exc
    except (LayoutError, ValueError) as exc:
        raise _error(422, "config", str(exc)) from exc
    body = outcome.to_json()
    return body


def _sim_config(req: schemas.SimulateRequest) -> SimConfig:
    try:
        return SimConfig(
            scenario=_scenario(req.scenario), n_agents=req.n_agents,
            horizon=req.horizon, planner=Planner(req.planner),
            rhcr_window=req.rhcr_window, rhcr_period=req.rhcr_period,
            mapf_solver=MapfSolver(req.mapf_solver), seed=req.seed)
    except SimPreconditionError as exc:
        raise _error(409, "precondition", str(exc)) from exc
    except ValueError as exc:
        raise _error(422, "config", str(exc)) from exc


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest):
    config = _sim_config(req)
    try:
        result = run_simulation(_layout(req.layout), config)
    except SimPreconditionError as exc:
        raise _error(409, "precondition", str(exc)) from exc
    return result.to_json()


@app.post("/evaluate", response_model=schemas.EvaluateResponse)
def evaluate_endpoint(req: schemas.EvaluateRequest):
    config = _sim_config(req)
    try:
        result = evaluate(_layout(req.layout), config, req.n_runs)
    except SimPreconditionError as exc:
        raise _error(409, "precondition", str(exc)) from exc
    return result.to_json()


@app.post("/evaluate-report")
def evaluate_report(req: schemas.ReportRequest):
    try:
        config = config_from_dict(req.config)
    except ConfigError as exc:
        raise _error(422, "config", str(exc), path=exc.path) from exc
    try:
        report = cmd_evaluate(_layout(req.layout), config,
                              output_dir=req.output_dir,
                              agent_counts=req.agent_counts)
    except EvaluationPreconditionError as exc:
        raise _error(409, "precondition", str(exc)) from exc
    except SimPreconditionError as exc:
        raise _error(409, "precondition", str(exc)) from exc
    return report.to_json()


class JobRegistry:
    """Single-worker background queue for optimization runs."""

    def __init__(self):
        self.executor = ThreadPoolExecutor(
            max_workers=1, thread_name_prefix="optimize")
        self.jobs: dict = {}
        self.lock = threading.Lock()

    def submit(self, config, resume: bool) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self.lock:
            self.jobs[job_id] = {"status": "queued", "detail": None,
                                 "category": None, "result": None}
        self.executor.submit(self._run, job_id, config, resume)
        return job_id

    def get(self, job_id: str):
        with self.lock:
            job = self.jobs.get(job_id)
            return dict(job) if job is not None else None

    def _run(self, job_id: str, config, resume: bool) -> None:
        with self.lock:
            self.jobs[job_id]["status"] = "running"
        try:
            result = cmd_optimize(config, resume=resume)
            stats = result.archive.stats()
            objectives = [e.objective for e in result.archive.cells.values()]
            summary = {
                "output_dir": str(result.output_dir),
                "qd_score": stats.qd_score,
                "coverage": stats.coverage,
                "num_elites": stats.num_elites,
                "best_objective": max(objectives) if objectives else None,
                "evaluations": (result.stats_rows[-1]["evaluations"]
                                if result.stats_rows else 0),
                "dataset_size": result.dataset_size,
            }
            with self.lock:
                self.jobs[job_id].update(status="done", result=summary)
        except Exception as exc:
            logger.exception("optimize job %s failed", job_id)
            if isinstance(exc, SolverAdapterError):
                category = "solver"
            elif isinstance(exc, (ConfigError, LayoutError)):
                category = "config"
            elif isinstance(exc, (SimPreconditionError,
                                  EvaluationPreconditionError)):
                category = "precondition"
            else:
                category = "internal"
            with self.lock:
                self.jobs[job_id].update(status="failed", detail=str(exc),
                                         category=category)


jobs = JobRegistry()


@app.post("/optimize", response_model=schemas.JobStatus)
def optimize(req: schemas.OptimizeRequest):
    try:
        config = config_from_dict(req.config)
        if not config.output_dir:
            raise ConfigError("output_dir", "is required for optimize runs")
    except ConfigError as exc:
        raise _error(422, "config", str(exc), path=exc.path) from exc
    job_id = jobs.submit(config, req.resume)
    return {"job_id": job_id, "status": "queued", "detail": None,
            "result": None}


@app.get("/jobs/{job_id}", response_model=schemas.JobStatus)
def job_status(job_id: str):
    job = jobs.get(job_id)
    if job is None:
        raise _error(404, "config", f"unknown job {job_id!r}")
    return {"job_id": job_id, **job}

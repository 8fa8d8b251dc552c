"""Request and response bodies for the HTTP service.

Layouts travel as the JSON mirror of the text file format; simulator and
repair results mirror the dataclass ``to_json`` shapes.
"""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel


class LayoutBody(BaseModel):
    """JSON mirror of a layout file: header fields plus one string per
    row, characters @ e w r . for shelf/endpoint/workstation/home/empty."""

    type: str = "warehouse"
    height: int
    width: int
    storage: List[int]
    tiles: List[str]


class HealthResponse(BaseModel):
    status: str
    version: str


class ParseRequest(BaseModel):
    text: str


class ParseResponse(BaseModel):
    layout: LayoutBody


class RenderRequest(BaseModel):
    layout: LayoutBody


class RenderResponse(BaseModel):
    text: str


class ValidateRequest(BaseModel):
    layout: LayoutBody
    scenario: str
    n_agents: int = 0


class Violation(BaseModel):
    rule: str
    row: int
    col: int


class ValidateResponse(BaseModel):
    is_valid: bool
    is_well_formed: bool
    is_reachable: bool
    ok_for_scenario: bool
    violations: List[Violation]


class MeasureRequest(BaseModel):
    layout: LayoutBody
    scenario: str


class MeasureResponse(BaseModel):
    n_shelf_components: float
    mean_task_length: float


class RepairRequest(BaseModel):
    layout: LayoutBody
    scenario: str
    n_s: int
    time_limit: float = 120.0


class RepairResponse(BaseModel):
    status: str
    repaired: Optional[LayoutBody]
    hamming_distance: Optional[int]
    solve_time: float


class SimulateRequest(BaseModel):
    layout: LayoutBody
    scenario: str
    n_agents: int
    horizon: int
    planner: str = "rhcr"
    mapf_solver: str = "pbs"
    rhcr_window: int = 10
    rhcr_period: int = 5
    seed: int = 0


class SimulateResponse(BaseModel):
    throughput: float
    finished_per_timestep: List[int]
    tile_usage: List[List[int]]
    congested: bool
    congestion_timestep: Optional[int]
    elapsed_steps: int
    n_agents: int


class EvaluateRequest(SimulateRequest):
    n_runs: int = 5


class EvaluateResponse(BaseModel):
    mean_throughput: float
    measures: List[float]
    success_rate: float
    tile_usage_normalized: List[List[float]]
    runs: List[SimulateResponse]


class ReportRequest(BaseModel):
    """Full evaluation block driven by an experiment config."""

    layout: LayoutBody
    config: dict
    agent_counts: Optional[List[int]] = None
    output_dir: Optional[str] = None


class OptimizeRequest(BaseModel):
    config: dict
    resume: bool = False


class JobStatus(BaseModel):
    job_id: str
    status: str
    detail: Optional[str] = None
    category: Optional[str] = None
    result: Optional[dict] = None

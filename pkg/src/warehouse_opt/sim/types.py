"""Simulator configuration and result records."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from warehouse_opt.layouts import Scenario


class Planner(Enum):
    RHCR = "rhcr"
    DPP = "dpp"

    @classmethod
    def parse(cls, name: str) -> "Planner":
        return cls(name.strip().lower())


class MapfSolver(Enum):
    PBS = "pbs"
    PRIORITIZED = "prioritized"

    @classmethod
    def parse(cls, name: str) -> "MapfSolver":
        key = name.strip().lower()
        if key in ("pp", "prioritized", "prioritized_planning"):
            return cls.PRIORITIZED
        return cls(key)


class SimPreconditionError(ValueError):
    """Layout or config fails a simulation precondition."""


@dataclass
class AgentState:
    """Public snapshot of one agent: coordinates, not flat indices."""

    id: int
    location: tuple
    goal: Optional[tuple] = None
    path: tuple = ()
    tasks_finished: int = 0


class SolverFailure(RuntimeError):
    """The windowed multi-agent solver exhausted its budget."""


@dataclass(frozen=True)
class SimConfig:
    """One lifelong simulation run.

    ``rhcr_window`` (w) is how far plans are guaranteed conflict-free,
    ``rhcr_period`` (h) how often all agents replan; w >= h >= 1.
    ``start_locations`` / ``first_goals`` override the seeded random agent
    placement and initial goal draws, mainly for oracle tests.
    ``validate_layout`` skips the validity precondition when False, for
    synthetic maps that are intentionally not valid warehouse layouts.
    """

    scenario: Scenario
    n_agents: int
    horizon: int
    planner: Planner = Planner.RHCR
    rhcr_window: int = 10
    rhcr_period: int = 5
    mapf_solver: MapfSolver = MapfSolver.PBS
    seed: int = 0
    early_stop_on_congestion: bool = True
    validate_layout: bool = True
    start_locations: Optional[tuple] = None
    first_goals: Optional[tuple] = None
    pbs_node_budget: int = 10_000
    sipp_node_budget: int = 100_000

    def __post_init__(self):
        if self.n_agents < 0:
            raise SimPreconditionError("n_agents must be nonnegative")
        if self.horizon < 1:
            raise SimPreconditionError("horizon must be at least 1")
        if not (self.rhcr_window >= self.rhcr_period >= 1):
            raise SimPreconditionError(
                f"need window >= period >= 1, got w={self.rhcr_window} h={self.rhcr_period}"
            )
        if self.planner is Planner.DPP and self.scenario is not Scenario.HOME:
            raise SimPreconditionError("DPP requires the home-location scenario")

    def replaced(self, **changes) -> "SimConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class SimResult:
    """Outcome of one run: throughput plus occupancy accounting.

    ``tile_usage`` is a flat row-major grid of per-tile occupancy counts
    over the executed timesteps; it sums to n_agents * elapsed_steps.
    """

    throughput: float
    finished_per_timestep: tuple
    tile_usage: tuple
    congested: bool
    congestion_timestep: Optional[int]
    elapsed_steps: int
    height: int
    width: int
    n_agents: int

    @property
    def total_finished(self) -> int:
        return sum(self.finished_per_timestep)

    def to_json(self) -> dict:
        return {
            "throughput": self.throughput,
            "finished_per_timestep": list(self.finished_per_timestep),
            "tile_usage": [
                list(self.tile_usage[r * self.width:(r + 1) * self.width])
                for r in range(self.height)
            ],
            "congested": self.congested,
            "congestion_timestep": self.congestion_timestep,
            "elapsed_steps": self.elapsed_steps,
            "n_agents": self.n_agents,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SimResult":
        grid = data["tile_usage"]
        return cls(
            throughput=data["throughput"],
            finished_per_timestep=tuple(data["finished_per_timestep"]),
            tile_usage=tuple(v for row in grid for v in row),
            congested=data["congested"],
            congestion_timestep=data["congestion_timestep"],
            elapsed_steps=data["elapsed_steps"],
            height=len(grid),
            width=len(grid[0]) if grid else 0,
            n_agents=data["n_agents"],
        )

    def tile_usage_csv(self) -> str:
        out = io.StringIO()
        for r in range(self.height):
            row = self.tile_usage[r * self.width:(r + 1) * self.width]
            out.write(",".join(str(v) for v in row) + "\n")
        return out.getvalue()


@dataclass(frozen=True)
class EvalResult:
    """Aggregate of repeated runs on one layout."""

    mean_throughput: float
    measures: tuple
    tile_usage_normalized: tuple
    runs: tuple
    height: int
    width: int

    @property
    def success_rate(self) -> float:
        if not self.runs:
            return 0.0
        return sum(1 for r in self.runs if not r.congested) / len(self.runs)

    def to_json(self) -> dict:
        return {
            "mean_throughput": self.mean_throughput,
            "measures": list(self.measures),
            "success_rate": self.success_rate,
            "tile_usage_normalized": [
                list(self.tile_usage_normalized[r * self.width:(r + 1) * self.width])
                for r in range(self.height)
            ],
            "runs": [r.to_json() for r in self.runs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "EvalResult":
        grid = data["tile_usage_normalized"]
        return cls(
            mean_throughput=data["mean_throughput"],
            measures=tuple(data["measures"]),
            tile_usage_normalized=tuple(v for row in grid for v in row),
            runs=tuple(SimResult.from_json(r) for r in data["runs"]),
            height=len(grid),
            width=len(grid[0]) if grid else 0,
        )

    def tile_usage_csv(self) -> str:
        out = io.StringIO()
        for r in range(self.height):
            row = self.tile_usage_normalized[r * self.width:(r + 1) * self.width]
            out.write(",".join(f"{v:.9f}" for v in row) + "\n")
        return out.getvalue()


def detect_congestion(actions_at_t: Sequence[bool]) -> bool:
    """True iff strictly more than half of the actions are waits.

    ``actions_at_t`` holds one entry per agent, True meaning wait.
    """
    n = len(actions_at_t)
    if n == 0:
        return False
    return sum(1 for a in actions_at_t if a) * 2 > n

"""Top-level repair driver: build, solve, decode, verify."""

from __future__ import annotations

import time
from dataclasses import dataclass

from ..layouts import (
    Layout,
    Scenario,
    TileType,
    layout_from_json,
    layout_to_json,
    validate,
)
from .model import TILE_VARS, RepairModel, build_model, pick_source
from .solvers import RepairStatus, ScipyMilpAdapter, SolverResult

INTEGRALITY_TOL = 1e-6
DEFAULT_TIME_LIMIT = 120.0


class RepairError(RuntimeError):
    """A solver solution that violates the repair contract."""


@dataclass(frozen=True)
class RepairOutcome:
    """Result of one repair attempt.

    ``repaired`` is present exactly when status is optimal or feasible, and
    then satisfies: scenario validity (well-formedness for the home-location
    scenario), full traversable connectivity, the requested shelf count, and
    unchanged non-storage tiles.
    """

    status: RepairStatus
    repaired: Layout | None
    hamming_distance: int | None
    solve_time: float

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "hamming_distance": self.hamming_distance,
            "solve_time": self.solve_time,
            "repaired": None if self.repaired is None
            else layout_to_json(self.repaired),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "RepairOutcome":
        repaired = payload.get("repaired")
        return cls(
            status=RepairStatus.parse(payload["status"]),
            repaired=None if repaired is None else layout_from_json(repaired),
            hamming_distance=payload.get("hamming_distance"),
            solve_time=payload["solve_time"],
        )


def flow_feasible(layout: Layout, scenario: Scenario) -> bool:
    """Whether every non-shelf tile is reachable from the anchor terminal
    through the scenario's passable tiles.

    Mirrors the model's flow constraints: flow leaves only unblocked tiles,
    so paths may pass through any non-shelf tile in the workstation scenario
    but only through empty tiles in the home-location scenario (the anchor
    itself always forwards flow)."""
    source = pick_source(layout, scenario)
    if source is None:
        return False
    passable = (
        (lambda t: t == TileType.EMPTY) if scenario == Scenario.HOME
        else (lambda t: t != TileType.SHELF)
    )
    seen = {source}
    frontier = [source]
    while frontier:
        u = frontier.pop()
        if u != source and not passable(layout.tiles[u]):
            continue
        for v in layout.neighbors(u):
            if v not in seen and layout.tiles[v] != TileType.SHELF:
                seen.add(v)
                frontier.append(v)
    return all(t == TileType.SHELF or i in seen
               for i, t in enumerate(layout.tiles))


def _satisfies_contract(layout: Layout, scenario: Scenario,
                        n_s: int, n_w: int, n_h: int) -> bool:
    if layout.count(TileType.SHELF) != n_s:
        return False
    if scenario == Scenario.WORKSTATION:
        if layout.count(TileType.WORKSTATION) != n_w:
            return False
        if layout.count(TileType.HOME) != 0:
            return False
    else:
        if layout.count(TileType.HOME) != n_h:
            return False
        if layout.count(TileType.WORKSTATION) != 0:
            return False
    for i, t in enumerate(layout.tiles):
        if t == TileType.ENDPOINT:
            if not any(layout.tiles[u] == TileType.SHELF
                       for u in layout.neighbors(i)):
                return False
        elif t == TileType.SHELF:
            n_e = sum(1 for u in layout.neighbors(i)
                      if layout.tiles[u] == TileType.ENDPOINT)
            if n_e < 2:
                return False
    return flow_feasible(layout, scenario)


def decode_solution(model: RepairModel, assignment: dict) -> Layout:
    """Turn a binary assignment back into a layout.

    Each tile takes the type whose binary is 1 (within tolerance); the
    dummy-source tile reverts to its original terminal."""
    lay = model.layout
    tiles = list(lay.tiles)
    for v in range(len(tiles)):
        if v == model.source:
            continue
        chosen = None
        for k, (letter, tile) in enumerate(TILE_VARS):
            value = assignment[model.var_names[model.x_index[(v, k)]]]
            if abs(value - 1.0) <= INTEGRALITY_TOL:
                if chosen is not None:
                    raise RepairError(f"two tile types set at tile {v}")
                chosen = tile
            elif abs(value) > INTEGRALITY_TOL:
                raise RepairError(
                    f"non-integral value {value!r} for {model.var_names[model.x_index[(v, k)]]}")
        if chosen is None:
            raise RepairError(f"no tile type set at tile {v}")
        tiles[v] = chosen
    return lay.with_tiles(dict(enumerate(tiles)))


def _verify(repaired: Layout, unrepaired: Layout, scenario: Scenario,
            n_s: int, n_w: int, n_h: int) -> None:
    report = validate(repaired, scenario)
    if not report.ok_for(scenario):
        raise RepairError(f"solution fails validation: {report.rules()}")
    if not report.is_reachable:
        raise RepairError("solution leaves traversable tiles disconnected")
    if repaired.count(TileType.SHELF) != n_s:
        raise RepairError(
            f"solution has {repaired.count(TileType.SHELF)} shelves, wanted {n_s}")
    expect = n_w if scenario == Scenario.WORKSTATION else n_h
    kind = (TileType.WORKSTATION if scenario == Scenario.WORKSTATION
            else TileType.HOME)
    if repaired.count(kind) != expect:
        raise RepairError(f"solution has {repaired.count(kind)} {kind.name} tiles")
    inside = set(repaired.storage_indices)
    for i, (a, b) in enumerate(zip(unrepaired.tiles, repaired.tiles)):
        if i not in inside and a != b:
            raise RepairError(f"non-storage tile {i} changed by repair")


def repair(unrepaired: Layout, scenario: Scenario, n_s: int,
           solver=None, time_limit: float = DEFAULT_TIME_LIMIT,
           n_w: int | None = None, n_h: int | None = None) -> RepairOutcome:
    """Minimally edit the storage area of ``unrepaired`` so the result is
    valid (workstation scenario) or well-formed (home-location scenario)
    with exactly ``n_s`` shelves.

    Already-conforming inputs return immediately with distance 0; anything
    else goes through the solver.  Infeasible and timed-out attempts carry
    no layout."""
    start = time.perf_counter()
    if n_w is None:
        n_w = unrepaired.count(TileType.WORKSTATION)
    if n_h is None:
        n_h = unrepaired.count(TileType.HOME)
    if _satisfies_contract(unrepaired, scenario, n_s, n_w, n_h):
        return RepairOutcome(RepairStatus.OPTIMAL, unrepaired, 0,
                             time.perf_counter() - start)
    model = build_model(unrepaired, scenario, n_s, n_w, n_h)
    adapter = solver if solver is not None else ScipyMilpAdapter()
    result: SolverResult = adapter.solve(model, time_limit)
    elapsed = time.perf_counter() - start
    if result.status in (RepairStatus.INFEASIBLE, RepairStatus.TIMEOUT):
        return RepairOutcome(result.status, None, None, elapsed)
    repaired = decode_solution(model, result.assignment)
    _verify(repaired, unrepaired, scenario, n_s, n_w, n_h)
    return RepairOutcome(result.status, repaired,
                         repaired.hamming_distance(unrepaired), elapsed)
